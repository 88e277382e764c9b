//! Scenario documents.
//!
//! A scenario names one network, one parameter set and a list of sweep axes.
//! A study groups scenarios whose rows share one CSV and one chart.

use std::path::Path;

use enaqt::{
    build_archetype, AncillaMode, AncillaWiring, Archetype, CoherenceScope, CouplingMode, IntegratorOptions,
    ModelParams, NetworkSpec,
};
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AncillaConfig {
    pub mode: AncillaMode,
    /// 1-based sites for individual ancillas; all sites when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<usize>>,
    #[serde(default)]
    pub open: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchetypeConfig {
    pub archetype: Archetype,
    pub n_sites: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ancilla: Option<AncillaConfig>,
}

/// Either an archetype shorthand or a full network description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetworkConfig {
    Archetype(ArchetypeConfig),
    Explicit(NetworkSpec),
}

impl NetworkConfig {
    pub fn archetype(archetype: Archetype, n_sites: usize) -> Self {
        Self::Archetype(ArchetypeConfig { archetype, n_sites, ancilla: None })
    }

    pub fn with_ancilla(self, mode: AncillaMode, open: bool) -> Self {
        match self {
            Self::Archetype(mut a) => {
                a.ancilla = Some(AncillaConfig { mode, sites: None, open });
                Self::Archetype(a)
            }
            other => other,
        }
    }

    pub fn build(&self) -> enaqt::Result<NetworkSpec> {
        match self {
            Self::Explicit(spec) => Ok(spec.clone()),
            Self::Archetype(a) => {
                let spec = build_archetype(a.archetype, a.n_sites)?;
                let Some(anc) = &a.ancilla else { return Ok(spec) };
                let wiring = match anc.mode {
                    AncillaMode::Communal => AncillaWiring::communal(a.n_sites, anc.open),
                    AncillaMode::Individual => {
                        let all: Vec<usize> = (1..=a.n_sites).collect();
                        AncillaWiring::individual(a.n_sites, anc.sites.as_deref().unwrap_or(&all), anc.open)?
                    }
                };
                spec.with_ancilla(wiring)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AxisParam {
    D,
    /// `J = R · γ↓`.
    R,
    Q,
    /// `Γ↓ = ratio · Γ↑`.
    #[serde(rename = "Gamma_ratio")]
    GammaRatio,
    /// Record times; switches the scenario to trajectories.
    #[serde(rename = "t")]
    Time,
}

impl AxisParam {
    pub fn name(self) -> &'static str {
        match self {
            AxisParam::D => "D",
            AxisParam::R => "R",
            AxisParam::Q => "Q",
            AxisParam::GammaRatio => "Gamma_ratio",
            AxisParam::Time => "t",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: AxisParam,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    /// D only: the axis becomes `[0, D*]` with `D*` the steady-state SEP
    /// maximizer over this grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimal_over: Option<Vec<f64>>,
    /// Network on which `D*` is searched; the scenario's own when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<NetworkConfig>,
    /// R only: also set `Q = R · γ↓`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub tie_q: bool,
}

impl Axis {
    pub fn values(param: AxisParam, values: Vec<f64>) -> Self {
        Self { param, values, optimal_over: None, reference: None, tie_q: false }
    }

    pub fn optimal_d(grid: Vec<f64>, reference: Option<NetworkConfig>) -> Self {
        Self { param: AxisParam::D, values: Vec::new(), optimal_over: Some(grid), reference, tie_q: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Sep,
    Sepi,
    CoherenceL1,
    Witness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    /// `|↑⟩/|↓⟩` on the first ancilla, compared on the ancillas.
    Ancilla,
    /// `|↑⟩/|↓⟩` on the source site, compared on the system.
    System,
    /// Seeded random qubit state and its complement on the first ancilla.
    RandomAncilla,
    /// Seeded random qubit state and its complement on the source site.
    RandomSystem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairKind>,
    /// Horizon of the witness run in steady-state scenarios.
    #[serde(default = "default_witness_t")]
    pub t_final: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_witness_t() -> f64 {
    5.0
}

fn default_points() -> usize {
    400
}

impl Default for WitnessConfig {
    fn default() -> Self {
        Self { pair: None, t_final: default_witness_t(), points: default_points() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum SteadyMode {
    /// Asymptotic projection when small enough, otherwise NullSpace, otherwise LongTime.
    #[default]
    Auto,
    Asymptotic,
    NullSpace,
    LongTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_observables")]
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub coherence_scope: CoherenceScope,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessConfig>,
    #[serde(default)]
    pub steady_state_method: SteadyMode,
}

fn default_observables() -> Vec<Observable> {
    vec![Observable::Sep, Observable::Sepi, Observable::CoherenceL1]
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            observables: default_observables(),
            coherence_scope: CoherenceScope::Full,
            witness: None,
            steady_state_method: SteadyMode::Auto,
        }
    }
}

impl Outputs {
    pub fn wants(&self, o: Observable) -> bool {
        self.observables.contains(&o)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotSpec {
    pub x: String,
    pub y: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_x: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub network: NetworkConfig,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default = "default_mode")]
    pub coupling_mode: CouplingMode,
    #[serde(default)]
    pub sweep: Vec<Axis>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub integrator: IntegratorOptions,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PlotSpec>,
}

fn default_mode() -> CouplingMode {
    CouplingMode::Coherent
}

pub const COLUMNS: [&str; 11] =
    ["scenario", "D", "R", "Q", "Gamma_up", "Gamma_down", "t", "sep", "sepi", "coherence_l1", "witness"];

fn check_grid(name: &str, axis: &str, values: &[f64], min: f64) -> Result<()> {
    if values.is_empty() {
        return Err(ExperimentError::invalid(name, format!("axis {axis} has an empty grid")));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < min) {
        return Err(ExperimentError::invalid(name, format!("axis {axis} value {v} must be finite and >= {min}")));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ExperimentError::invalid(name, format!("axis {axis} grid must be strictly increasing")));
    }
    Ok(())
}

impl Scenario {
    pub fn new(name: impl Into<String>, network: NetworkConfig) -> Self {
        Self {
            name: name.into(),
            network,
            params: ModelParams::default(),
            coupling_mode: CouplingMode::Coherent,
            sweep: Vec::new(),
            outputs: Outputs::default(),
            integrator: IntegratorOptions::default(),
            seed: 0,
            plot: None,
        }
    }

    pub fn axis(&self, param: AxisParam) -> Option<&Axis> {
        self.sweep.iter().find(|a| a.param == param)
    }

    pub fn is_trajectory(&self) -> bool {
        self.axis(AxisParam::Time).is_some()
    }

    /// Checks the document and fills implied grid points (D = 0).
    pub fn resolve(mut self) -> Result<Self> {
        let name = self.name.clone();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
            return Err(ExperimentError::invalid(&name, "name must be nonempty and use [A-Za-z0-9_.-]"));
        }
        let spec = self.network.build().map_err(|e| ExperimentError::invalid(&name, e.to_string()))?;
        self.params.validate(spec.n_sites()).map_err(|e| ExperimentError::invalid(&name, e.to_string()))?;
        self.integrator.validate().map_err(|e| ExperimentError::invalid(&name, e.to_string()))?;
        if self.coupling_mode != CouplingMode::Coherent && spec.ancilla().is_none() {
            return Err(ExperimentError::invalid(&name, "incoherent and mixed coupling need an ancilla"));
        }
        let n_axes = self.sweep.len();
        for (k, axis) in self.sweep.iter_mut().enumerate() {
            let label = axis.param.name();
            if axis.tie_q && axis.param != AxisParam::R {
                return Err(ExperimentError::invalid(&name, "tie_q applies to the R axis only"));
            }
            if axis.reference.is_some() && axis.optimal_over.is_none() {
                return Err(ExperimentError::invalid(&name, "reference needs optimal_over"));
            }
            match (&axis.optimal_over, axis.values.is_empty()) {
                (Some(_), false) => return Err(ExperimentError::invalid(&name, "give either values or optimal_over")),
                (Some(grid), true) => {
                    if axis.param != AxisParam::D {
                        return Err(ExperimentError::invalid(&name, "optimal_over applies to the D axis only"));
                    }
                    check_grid(&name, label, grid, 0.0)?;
                    if let Some(r) = &axis.reference {
                        r.build().map_err(|e| ExperimentError::invalid(&name, e.to_string()))?;
                    }
                }
                (None, _) => {
                    let min = if axis.param == AxisParam::R { f64::MIN_POSITIVE } else { 0.0 };
                    check_grid(&name, label, &axis.values, min)?;
                    if axis.param == AxisParam::D && axis.values[0] != 0.0 {
                        axis.values.insert(0, 0.0);
                    }
                }
            }
            if axis.param == AxisParam::Time && k + 1 != n_axes {
                return Err(ExperimentError::invalid(&name, "the t axis must come last"));
            }
        }
        for (i, a) in self.sweep.iter().enumerate() {
            if self.sweep[..i].iter().any(|b| b.param == a.param) {
                return Err(ExperimentError::invalid(&name, format!("axis {} appears twice", a.param.name())));
            }
        }
        if self.axis(AxisParam::GammaRatio).is_some() && self.coupling_mode == CouplingMode::Coherent {
            return Err(ExperimentError::invalid(&name, "Gamma_ratio has no effect in coherent mode"));
        }
        let wants_witness = self.outputs.wants(Observable::Witness);
        if wants_witness && self.outputs.witness.is_none() {
            self.outputs.witness = Some(WitnessConfig::default());
        }
        if let Some(w) = &mut self.outputs.witness {
            if !wants_witness {
                self.outputs.observables.push(Observable::Witness);
            }
            if w.pair.is_none() {
                w.pair = Some(if spec.ancilla().is_some() { PairKind::Ancilla } else { PairKind::System });
            }
            if matches!(w.pair, Some(PairKind::Ancilla | PairKind::RandomAncilla)) && spec.ancilla().is_none() {
                return Err(ExperimentError::invalid(&name, "ancilla witness pair needs an ancilla"));
            }
            if !(w.t_final.is_finite() && w.t_final > 0.0) || w.points < 2 {
                return Err(ExperimentError::invalid(&name, "witness needs t_final > 0 and at least 2 points"));
            }
        }
        if let Some(p) = &self.plot {
            for col in [&p.x, &p.y] {
                if !COLUMNS[1..].contains(&col.as_str()) {
                    return Err(ExperimentError::invalid(&name, format!("unknown plot column {col}")));
                }
            }
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Study {
    pub name: String,
    pub scenarios: Vec<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PlotSpec>,
}

impl Study {
    pub fn single(scenario: Scenario) -> Self {
        Self { name: scenario.name.clone(), plot: scenario.plot.clone(), scenarios: vec![scenario] }
    }

    /// Accepts a study (an object with `scenarios`) or a lone scenario.
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.get("scenarios").is_some() {
            serde_json::from_value(value)
        } else {
            serde_json::from_value(value).map(Self::single)
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        Self::from_json(&text).map_err(|source| ExperimentError::Parse { path: path.to_path_buf(), source })
    }

    pub fn resolve(self) -> Result<Self> {
        if self.scenarios.is_empty() {
            return Err(ExperimentError::invalid(&self.name, "study has no scenarios"));
        }
        let scenarios = self.scenarios.into_iter().map(Scenario::resolve).collect::<Result<Vec<_>>>()?;
        let plot = self.plot.or_else(|| scenarios[0].plot.clone());
        Ok(Self { name: self.name, scenarios, plot })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scenario_parses_with_defaults() {
        let s: Scenario = serde_json::from_str(
            r#"{"name": "x", "network": {"archetype": "Loop", "n_sites": 3},
                "sweep": [{"param": "D", "values": [0.1, 1.0]}]}"#,
        )
        .unwrap();
        let s = s.resolve().unwrap();
        assert_eq!(s.sweep[0].values, vec![0.0, 0.1, 1.0]);
        assert_eq!(s.params, ModelParams::default());
        assert_eq!(s.outputs.observables, default_observables());
        assert!(!s.is_trajectory());
    }

    #[test]
    fn explicit_network_is_accepted() {
        let s: Scenario = serde_json::from_str(
            r#"{"name": "x", "network": {"n_sites": 2, "adjacency": [[false, true], [true, false]], "sink_site": 2}}"#,
        )
        .unwrap();
        assert!(matches!(s.network, NetworkConfig::Explicit(_)));
        assert_eq!(s.network.build().unwrap().edge_count(), 1);
    }

    #[test]
    fn invalid_documents_are_rejected() {
        let base = Scenario::new("x", NetworkConfig::archetype(Archetype::Loop, 3));
        let mut s = base.clone();
        s.sweep = vec![Axis::values(AxisParam::D, vec![1.0, 0.5])];
        assert!(s.resolve().is_err());
        let mut s = base.clone();
        s.sweep = vec![Axis::values(AxisParam::Time, vec![1.0]), Axis::values(AxisParam::D, vec![1.0])];
        assert!(s.resolve().is_err());
        let mut s = base.clone();
        s.sweep = vec![Axis::values(AxisParam::R, vec![])];
        assert!(s.resolve().is_err());
        let mut s = base.clone();
        s.coupling_mode = CouplingMode::Incoherent;
        assert!(s.resolve().is_err());
        let mut s = base.clone();
        s.name = "a b".into();
        assert!(s.resolve().is_err());
        let mut s = base.clone();
        s.outputs.witness = Some(WitnessConfig { pair: Some(PairKind::Ancilla), ..Default::default() });
        assert!(s.resolve().is_err());
        let mut s = base;
        s.plot = Some(PlotSpec { x: "D".into(), y: "nonsense".into(), log_x: None });
        assert!(s.resolve().is_err());
        assert!(serde_json::from_str::<Scenario>(r#"{"name": "x", "network": {"archetype": "Loop", "n_sites": 3}, "bogus": 1}"#).is_err());
    }

    #[test]
    fn witness_defaults_follow_the_network() {
        let mut s = Scenario::new("x", NetworkConfig::archetype(Archetype::Loop, 3));
        s.outputs.observables.push(Observable::Witness);
        let s = s.resolve().unwrap();
        assert_eq!(s.outputs.witness.unwrap().pair, Some(PairKind::System));
        let mut s = Scenario::new(
            "y",
            NetworkConfig::archetype(Archetype::Loop, 3).with_ancilla(AncillaMode::Communal, false),
        );
        s.outputs.witness = Some(WitnessConfig::default());
        let s = s.resolve().unwrap();
        assert!(s.outputs.wants(Observable::Witness));
        assert_eq!(s.outputs.witness.unwrap().pair, Some(PairKind::Ancilla));
    }

    #[test]
    fn study_or_scenario_documents() {
        let one = r#"{"name": "x", "network": {"archetype": "Loop", "n_sites": 3}}"#;
        assert_eq!(Study::from_json(one).unwrap().scenarios.len(), 1);
        let many = format!(r#"{{"name": "s", "scenarios": [{one}, {one}]}}"#);
        assert_eq!(Study::from_json(&many).unwrap().scenarios.len(), 2);
    }
}
