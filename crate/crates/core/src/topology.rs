//! Network configurations: which system sites interact, where the excitation
//! is seeded, where the sink attaches, and how an ancilla is wired in.
//!
//! Sites are labelled `1..=n_sites` in the public surface (and in JSON); the
//! accessors returning qubit positions are zero-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four reference network shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Archetype {
    /// Nearest-neighbour chain `1-2-...-n`.
    Linear,
    /// Chain closed by the direct edge `(1, n)`.
    Loop,
    /// Complete graph without the source–sink edge `(1, n)`.
    NonCritical,
    /// Complete graph.
    MaximallyConnected,
}

impl Archetype {
    pub const ALL: [Archetype; 4] = [
        Archetype::Linear,
        Archetype::Loop,
        Archetype::NonCritical,
        Archetype::MaximallyConnected,
    ];

    pub fn min_sites(self) -> usize {
        match self {
            Archetype::NonCritical => 3,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Archetype::Linear => "Linear",
            Archetype::Loop => "Loop",
            Archetype::NonCritical => "NonCritical",
            Archetype::MaximallyConnected => "MaximallyConnected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AncillaMode {
    /// One ancilla per designated site.
    Individual,
    /// A single ancilla coupled to every site.
    Communal,
}

/// System–ancilla wiring. `coupling[i][a]` is true when site `i` talks to
/// ancilla `a`, coherently (through `Q`) or incoherently (through `Γ`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncillaWiring {
    n_ancillas: usize,
    coupling: Vec<Vec<bool>>,
    mode: AncillaMode,
    open_to_environment: bool,
}

impl AncillaWiring {
    /// One ancilla coupled to all `n_sites` system sites.
    pub fn communal(n_sites: usize, open_to_environment: bool) -> Self {
        Self {
            n_ancillas: 1,
            coupling: vec![vec![true]; n_sites],
            mode: AncillaMode::Communal,
            open_to_environment,
        }
    }

    /// One ancilla for each listed site (1-based labels), in the given order.
    pub fn individual(n_sites: usize, sites: &[usize], open_to_environment: bool) -> Result<Self> {
        let mut coupling = vec![vec![false; sites.len()]; n_sites];
        for (a, &site) in sites.iter().enumerate() {
            if site == 0 || site > n_sites {
                return Err(Error::InvalidNetwork(format!(
                    "ancilla site {site} outside 1..={n_sites}"
                )));
            }
            coupling[site - 1][a] = true;
        }
        let wiring = Self {
            n_ancillas: sites.len(),
            coupling,
            mode: AncillaMode::Individual,
            open_to_environment,
        };
        wiring.validate(n_sites)?;
        Ok(wiring)
    }

    pub fn n_ancillas(&self) -> usize {
        self.n_ancillas
    }

    pub fn mode(&self) -> AncillaMode {
        self.mode
    }

    pub fn is_open(&self) -> bool {
        self.open_to_environment
    }

    pub fn coupling(&self) -> &[Vec<bool>] {
        &self.coupling
    }

    /// Zero-based `(site, ancilla)` pairs that are wired together.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.coupling.iter().enumerate() {
            for (a, &on) in row.iter().enumerate() {
                if on {
                    out.push((i, a));
                }
            }
        }
        out
    }

    fn validate(&self, n_sites: usize) -> Result<()> {
        if self.n_ancillas == 0 {
            return Err(Error::InvalidNetwork("ancilla wiring with zero ancillas".into()));
        }
        if self.coupling.len() != n_sites || self.coupling.iter().any(|r| r.len() != self.n_ancillas) {
            return Err(Error::InvalidNetwork(format!(
                "ancilla coupling must be {n_sites}x{}",
                self.n_ancillas
            )));
        }
        match self.mode {
            AncillaMode::Communal => {
                if self.n_ancillas != 1 || self.coupling.iter().any(|r| !r[0]) {
                    return Err(Error::InvalidNetwork(
                        "communal ancilla must be a single ancilla coupled to every site".into(),
                    ));
                }
            }
            AncillaMode::Individual => {
                for a in 0..self.n_ancillas {
                    let count = self.coupling.iter().filter(|r| r[a]).count();
                    if count != 1 {
                        return Err(Error::InvalidNetwork(format!(
                            "individual ancilla {} must couple to exactly one site, found {count}",
                            a + 1
                        )));
                    }
                }
                for (i, row) in self.coupling.iter().enumerate() {
                    if row.iter().filter(|&&b| b).count() > 1 {
                        return Err(Error::InvalidNetwork(format!(
                            "site {} is shared by several individual ancillas",
                            i + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A validated network: symmetric adjacency with empty diagonal, distinct
/// source and sink sites, and an optional ancilla wiring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawNetworkSpec")]
pub struct NetworkSpec {
    n_sites: usize,
    adjacency: Vec<Vec<bool>>,
    sink_site: usize,
    source_site: usize,
    ancilla: Option<AncillaWiring>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetworkSpec {
    n_sites: usize,
    adjacency: Vec<Vec<bool>>,
    sink_site: usize,
    #[serde(default = "default_source")]
    source_site: usize,
    #[serde(default)]
    ancilla: Option<AncillaWiring>,
}

fn default_source() -> usize {
    1
}

impl TryFrom<RawNetworkSpec> for NetworkSpec {
    type Error = Error;

    fn try_from(raw: RawNetworkSpec) -> Result<Self> {
        NetworkSpec::new(raw.n_sites, raw.adjacency, raw.sink_site, raw.source_site, raw.ancilla)
    }
}

impl NetworkSpec {
    pub fn new(
        n_sites: usize,
        adjacency: Vec<Vec<bool>>,
        sink_site: usize,
        source_site: usize,
        ancilla: Option<AncillaWiring>,
    ) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidNetwork("network needs at least one site".into()));
        }
        if adjacency.len() != n_sites || adjacency.iter().any(|r| r.len() != n_sites) {
            return Err(Error::InvalidNetwork(format!("adjacency must be {n_sites}x{n_sites}")));
        }
        for i in 0..n_sites {
            if adjacency[i][i] {
                return Err(Error::InvalidNetwork(format!("self-loop on site {}", i + 1)));
            }
            for j in 0..i {
                if adjacency[i][j] != adjacency[j][i] {
                    return Err(Error::InvalidNetwork(format!(
                        "adjacency not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        for (label, site) in [("sink", sink_site), ("source", source_site)] {
            if site == 0 || site > n_sites {
                return Err(Error::InvalidNetwork(format!(
                    "{label} site {site} outside 1..={n_sites}"
                )));
            }
        }
        if n_sites >= 2 && sink_site == source_site {
            return Err(Error::InvalidNetwork("source and sink sites coincide".into()));
        }
        if let Some(w) = &ancilla {
            w.validate(n_sites)?;
        }
        Ok(Self { n_sites, adjacency, sink_site, source_site, ancilla })
    }

    /// Builds a network from 1-based edges, with source 1 and sink `n_sites`.
    pub fn from_edges(n_sites: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![vec![false; n_sites]; n_sites];
        for &(a, b) in edges {
            if a == 0 || b == 0 || a > n_sites || b > n_sites {
                return Err(Error::InvalidNetwork(format!("edge ({a}, {b}) out of range")));
            }
            adjacency[a - 1][b - 1] = true;
            adjacency[b - 1][a - 1] = true;
        }
        Self::new(n_sites, adjacency, n_sites, 1, None)
    }

    pub fn with_ancilla(self, wiring: AncillaWiring) -> Result<Self> {
        Self::new(self.n_sites, self.adjacency, self.sink_site, self.source_site, Some(wiring))
    }

    pub fn with_sites(self, source_site: usize, sink_site: usize) -> Result<Self> {
        Self::new(self.n_sites, self.adjacency, sink_site, source_site, self.ancilla)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn adjacency(&self) -> &[Vec<bool>] {
        &self.adjacency
    }

    pub fn sink_site(&self) -> usize {
        self.sink_site
    }

    pub fn source_site(&self) -> usize {
        self.source_site
    }

    pub fn ancilla(&self) -> Option<&AncillaWiring> {
        self.ancilla.as_ref()
    }

    pub fn n_ancillas(&self) -> usize {
        self.ancilla.as_ref().map_or(0, |w| w.n_ancillas)
    }

    /// Zero-based unordered edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n_sites {
            for j in i + 1..self.n_sites {
                if self.adjacency[i][j] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a >= 1 && b >= 1 && a <= self.n_sites && b <= self.n_sites && self.adjacency[a - 1][b - 1]
    }
}

pub fn build_archetype(kind: Archetype, n_sites: usize) -> Result<NetworkSpec> {
    if n_sites < kind.min_sites() {
        return Err(Error::TooFewSites { kind: kind.name(), min: kind.min_sites(), got: n_sites });
    }
    let n = n_sites;
    let mut adjacency = vec![vec![false; n]; n];
    match kind {
        Archetype::Linear | Archetype::Loop => {
            for i in 0..n - 1 {
                adjacency[i][i + 1] = true;
                adjacency[i + 1][i] = true;
            }
            if kind == Archetype::Loop {
                adjacency[0][n - 1] = true;
                adjacency[n - 1][0] = true;
            }
        }
        Archetype::NonCritical | Archetype::MaximallyConnected => {
            for (i, row) in adjacency.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell = i != j;
                }
            }
            if kind == Archetype::NonCritical {
                adjacency[0][n - 1] = false;
                adjacency[n - 1][0] = false;
            }
        }
    }
    NetworkSpec::new(n, adjacency, n, 1, None)
}

/// Whether the source and the sink-attached site are directly coupled.
pub fn has_critical_link(spec: &NetworkSpec) -> bool {
    spec.has_edge(spec.source_site, spec.sink_site)
}

/// Number of simple paths from the source site to the sink-attached site.
pub fn path_count(spec: &NetworkSpec) -> Result<u64> {
    if spec.n_sites > 12 {
        return Err(Error::GraphTooLarge(spec.n_sites));
    }
    fn dfs(adj: &[Vec<bool>], at: usize, target: usize, visited: &mut [bool]) -> u64 {
        if at == target {
            return 1;
        }
        visited[at] = true;
        let mut total = 0;
        for next in 0..adj.len() {
            if adj[at][next] && !visited[next] {
                total += dfs(adj, next, target, visited);
            }
        }
        visited[at] = false;
        total
    }
    let mut visited = vec![false; spec.n_sites];
    Ok(dfs(&spec.adjacency, spec.source_site - 1, spec.sink_site - 1, &mut visited))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge_set(spec: &NetworkSpec) -> Vec<(usize, usize)> {
        spec.edges().into_iter().map(|(i, j)| (i + 1, j + 1)).collect()
    }

    #[test]
    fn linear_chain_edges() {
        let spec = build_archetype(Archetype::Linear, 5).unwrap();
        assert_eq!(edge_set(&spec), vec![(1, 2), (2, 3), (3, 4), (4, 5)]);
        assert_eq!(spec.source_site(), 1);
        assert_eq!(spec.sink_site(), 5);
    }

    #[test]
    fn complete_graph_edge_counts() {
        assert_eq!(build_archetype(Archetype::MaximallyConnected, 3).unwrap().edge_count(), 3);
        let nc = build_archetype(Archetype::NonCritical, 5).unwrap();
        assert_eq!(nc.edge_count(), 9);
        assert!(!nc.has_edge(1, 5));
    }

    #[test]
    fn critical_link() {
        let cases = [
            (Archetype::Loop, true),
            (Archetype::Linear, false),
            (Archetype::NonCritical, false),
            (Archetype::MaximallyConnected, true),
        ];
        for n in 3..=8 {
            for (kind, expect) in cases {
                assert_eq!(has_critical_link(&build_archetype(kind, n).unwrap()), expect, "{kind:?} {n}");
            }
        }
    }

    #[test]
    fn path_counts() {
        assert_eq!(path_count(&build_archetype(Archetype::Linear, 5).unwrap()).unwrap(), 1);
        assert_eq!(path_count(&build_archetype(Archetype::Loop, 5).unwrap()).unwrap(), 2);
        assert_eq!(path_count(&build_archetype(Archetype::MaximallyConnected, 4).unwrap()).unwrap(), 5);
        let big = build_archetype(Archetype::Linear, 13).unwrap();
        assert!(matches!(path_count(&big), Err(Error::GraphTooLarge(13))));
    }

    #[test]
    fn path_count_ordering() {
        for n in 3..=7 {
            let c = |k| path_count(&build_archetype(k, n).unwrap()).unwrap();
            assert!(c(Archetype::MaximallyConnected) >= c(Archetype::Loop));
            assert!(c(Archetype::Loop) >= c(Archetype::Linear));
        }
    }

    #[test]
    fn archetypes_are_symmetric_without_self_loops() {
        for kind in Archetype::ALL {
            for n in kind.min_sites()..=9 {
                let spec = build_archetype(kind, n).unwrap();
                let a = spec.adjacency();
                for i in 0..n {
                    assert!(!a[i][i]);
                    for j in 0..n {
                        assert_eq!(a[i][j], a[j][i]);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_small_sizes() {
        assert!(matches!(
            build_archetype(Archetype::NonCritical, 2),
            Err(Error::TooFewSites { min: 3, got: 2, .. })
        ));
        assert!(build_archetype(Archetype::Linear, 1).is_err());
        assert!(build_archetype(Archetype::Loop, 2).is_ok());
    }

    #[test]
    fn rejects_bad_specs() {
        let asym = vec![vec![false, true], vec![false, false]];
        assert!(NetworkSpec::new(2, asym, 2, 1, None).is_err());
        let diag = vec![vec![true, false], vec![false, false]];
        assert!(NetworkSpec::new(2, diag, 2, 1, None).is_err());
        let ok = vec![vec![false, true], vec![true, false]];
        assert!(NetworkSpec::new(2, ok.clone(), 1, 1, None).is_err());
        assert!(NetworkSpec::new(2, ok, 3, 1, None).is_err());
    }

    #[test]
    fn ancilla_wiring_rules() {
        let comm = AncillaWiring::communal(3, false);
        assert_eq!(comm.pairs(), vec![(0, 0), (1, 0), (2, 0)]);
        let ind = AncillaWiring::individual(3, &[1, 2, 3], true).unwrap();
        assert_eq!(ind.pairs(), vec![(0, 0), (1, 1), (2, 2)]);
        assert!(AncillaWiring::individual(3, &[1, 1], true).is_err());
        assert!(AncillaWiring::individual(3, &[4], true).is_err());

        let spec = build_archetype(Archetype::Loop, 4).unwrap();
        assert!(spec.clone().with_ancilla(AncillaWiring::communal(3, false)).is_err());
        assert_eq!(spec.with_ancilla(AncillaWiring::communal(4, false)).unwrap().n_ancillas(), 1);
    }

    #[test]
    fn json_round_trip_validates() {
        let spec = build_archetype(Archetype::Loop, 4)
            .unwrap()
            .with_ancilla(AncillaWiring::individual(4, &[2], true).unwrap())
            .unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        let back: NetworkSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);

        let bad = r#"{"n_sites":2,"adjacency":[[false,true],[false,false]],"sink_site":2}"#;
        assert!(serde_json::from_str::<NetworkSpec>(bad).is_err());
        let defaulted = r#"{"n_sites":2,"adjacency":[[false,true],[true,false]],"sink_site":2}"#;
        assert_eq!(serde_json::from_str::<NetworkSpec>(defaulted).unwrap().source_site(), 1);
    }
}
