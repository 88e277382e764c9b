//! Model parameters and the Lindblad generator
//!
//! ```text
//! ∂ρ = −i[H, ρ] + Σ_k γ_k (L_k ρ L_k† − ½{L_k† L_k, ρ})
//! ```
//!
//! assembled from a [`NetworkSpec`]. The generator keeps the dense operators
//! for inspection and a compressed-row copy of every term for propagation; the
//! action on ρ never forms the dim²×dim² superoperator unless asked to.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::operator::{embed, embed_product, heisenberg_term, pauli, CMatrix, Op, Register, C64};
use crate::sparse::SparseMatrix;
use crate::topology::NetworkSpec;

/// Largest basis for which [`Generator::explicit_superoperator`] is built.
pub const SUPEROPERATOR_MAX_DIM: usize = 128;

/// Rates and couplings, in units of the qubit frequency ω.
///
/// JSON keys follow the usual symbols (`J`, `Q`, `D`, `N`, `Gamma_up`, ...);
/// omitted keys take the defaults of [`ModelParams::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Intra-system hopping `J`.
    #[serde(rename = "J")]
    pub hopping: f64,
    /// Coherent system–ancilla coupling `Q`.
    #[serde(rename = "Q")]
    pub ancilla_coupling: f64,
    /// Dephasing rate `D`.
    #[serde(rename = "D")]
    pub dephasing: f64,
    /// Incoherent pump rate `γ↑`.
    pub gamma_up: f64,
    /// Incoherent loss rate `γ↓`.
    pub gamma_down: f64,
    /// Per-site thermal occupations `N_i`; empty means all zero.
    #[serde(rename = "N")]
    pub occupation: Vec<f64>,
    #[serde(rename = "gamma_A_up")]
    pub ancilla_gamma_up: f64,
    #[serde(rename = "gamma_A_down")]
    pub ancilla_gamma_down: f64,
    #[serde(rename = "N_A")]
    pub ancilla_occupation: f64,
    /// Incoherent ancilla → system transfer rate `Γ↑`.
    #[serde(rename = "Gamma_up")]
    pub exchange_up: f64,
    /// Incoherent system → ancilla transfer rate `Γ↓`.
    #[serde(rename = "Gamma_down")]
    pub exchange_down: f64,
    /// Sink absorption rate `γ_S`.
    #[serde(rename = "gamma_S")]
    pub sink_rate: f64,
}

impl Default for ModelParams {
    /// One incoherent scale γ = 1 shared by the pump, loss, ancilla and sink
    /// rates; `J = 1`, no dephasing, cold baths, no ancilla coupling.
    fn default() -> Self {
        Self {
            hopping: 1.0,
            ancilla_coupling: 0.0,
            dephasing: 0.0,
            gamma_up: 1.0,
            gamma_down: 1.0,
            occupation: Vec::new(),
            ancilla_gamma_up: 1.0,
            ancilla_gamma_down: 1.0,
            ancilla_occupation: 0.0,
            exchange_up: 0.0,
            exchange_down: 0.0,
            sink_rate: 1.0,
        }
    }
}

impl ModelParams {
    /// `R = J / γ↓`; infinite when there is no loss.
    pub fn ratio(&self) -> f64 {
        if self.gamma_down == 0.0 {
            f64::INFINITY
        } else {
            self.hopping / self.gamma_down
        }
    }

    pub fn occupation_at(&self, site: usize) -> f64 {
        self.occupation.get(site).copied().unwrap_or(0.0)
    }

    pub fn validate(&self, n_sites: usize) -> Result<()> {
        let finite = [("J", self.hopping), ("Q", self.ancilla_coupling)];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name, reason: format!("{v} is not finite") });
            }
        }
        let non_negative = [
            ("D", self.dephasing),
            ("gamma_up", self.gamma_up),
            ("gamma_down", self.gamma_down),
            ("gamma_A_up", self.ancilla_gamma_up),
            ("gamma_A_down", self.ancilla_gamma_down),
            ("N_A", self.ancilla_occupation),
            ("Gamma_up", self.exchange_up),
            ("Gamma_down", self.exchange_down),
            ("gamma_S", self.sink_rate),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter { name, reason: format!("{v} must be finite and >= 0") });
            }
        }
        if !self.occupation.is_empty() && self.occupation.len() != n_sites {
            return Err(Error::InvalidParameter {
                name: "N",
                reason: format!("expected {n_sites} occupations, got {}", self.occupation.len()),
            });
        }
        if let Some(v) = self.occupation.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter { name: "N", reason: format!("{v} must be finite and >= 0") });
        }
        Ok(())
    }
}

/// Bath at dimensionless inverse temperature `β = ω / (k_B T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalOccupation {
    pub beta: f64,
}

impl ThermalOccupation {
    /// Mean excitation number `1 / (e^β − 1)`; zero at `β = +∞`.
    pub fn occupation(&self) -> f64 {
        if self.beta == f64::INFINITY {
            0.0
        } else {
            1.0 / self.beta.exp_m1()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CouplingMode {
    /// `Q` in the Hamiltonian, no incoherent exchange.
    Coherent,
    /// Incoherent exchange only; the Hamiltonian is built with `Q = 0`.
    Incoherent,
    /// Both.
    Mixed,
}

/// Physical origin of a jump operator. Indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Dephasing { site: usize },
    Pump { site: usize },
    Loss { site: usize },
    AncillaPump { ancilla: usize },
    AncillaLoss { ancilla: usize },
    Sink,
    ExchangeUp { site: usize, ancilla: usize },
    ExchangeDown { site: usize, ancilla: usize },
}

impl Channel {
    /// Whether this channel can create excitations (pumps from a bath).
    pub fn is_pump(&self) -> bool {
        matches!(self, Channel::Pump { .. } | Channel::AncillaPump { .. })
    }
}

/// Which dissipator families are present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ActiveChannels {
    pub dephasing: bool,
    pub damping: bool,
    pub ancilla_damping: bool,
    pub sink: bool,
    pub exchange: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpTerm {
    pub channel: Channel,
    pub op: Op,
    pub rate: f64,
}

/// Sparse copy of every term, on some basis.
#[derive(Debug)]
struct Compiled {
    hamiltonian: SparseMatrix,
    jumps: Vec<SparseMatrix>,
    decay: Vec<SparseMatrix>,
    h_eff: SparseMatrix,
    rates: Vec<f64>,
}

impl Compiled {
    fn new(hamiltonian: SparseMatrix, jumps: Vec<SparseMatrix>, decay: Vec<SparseMatrix>, rates: Vec<f64>) -> Self {
        // H_eff = H − (i/2) Σ γ L†L
        let n = hamiltonian.n_rows();
        let mut trip: Vec<_> = hamiltonian.triplets().collect();
        for (d, &g) in decay.iter().zip(&rates) {
            trip.extend(d.triplets().map(|(r, c, v)| (r, c, v * C64::new(0.0, -0.5 * g))));
        }
        let h_eff = SparseMatrix::from_triplets(n, n, trip);
        Self { hamiltonian, jumps, decay, h_eff, rates }
    }
}

/// The assembled right-hand side of the master equation.
#[derive(Debug, Clone)]
pub struct Generator {
    register: Register,
    hamiltonian: Arc<Op>,
    jumps: Arc<Vec<JumpTerm>>,
    active: ActiveChannels,
    initial_state: Option<usize>,
    full: Arc<Compiled>,
    basis: Arc<Basis>,
    compiled: Arc<Compiled>,
}

impl Generator {
    /// Generator from an explicit Hamiltonian and jump list, on the full basis.
    pub fn from_parts(hamiltonian: Op, jumps: Vec<JumpTerm>) -> Result<Self> {
        let register = hamiltonian.register();
        for j in &jumps {
            if j.op.register() != register {
                return Err(Error::RegisterMismatch);
            }
            if !(j.rate.is_finite() && j.rate >= 0.0) {
                return Err(Error::InvalidParameter { name: "rate", reason: format!("{} must be >= 0", j.rate) });
            }
        }
        let mut active = ActiveChannels::default();
        for j in &jumps {
            match j.channel {
                Channel::Dephasing { .. } => active.dephasing = true,
                Channel::Pump { .. } | Channel::Loss { .. } => active.damping = true,
                Channel::AncillaPump { .. } | Channel::AncillaLoss { .. } => active.ancilla_damping = true,
                Channel::Sink => active.sink = true,
                Channel::ExchangeUp { .. } | Channel::ExchangeDown { .. } => active.exchange = true,
            }
        }
        let h = SparseMatrix::from_dense(hamiltonian.matrix());
        let ls: Vec<SparseMatrix> = jumps.iter().map(|j| SparseMatrix::from_dense(j.op.matrix())).collect();
        let decay = ls.iter().map(SparseMatrix::adjoint_times_self).collect();
        let rates = jumps.iter().map(|j| j.rate).collect();
        let full = Arc::new(Compiled::new(h, ls, decay, rates));
        Ok(Self {
            register,
            hamiltonian: Arc::new(hamiltonian),
            jumps: Arc::new(jumps),
            active,
            initial_state: None,
            full: full.clone(),
            basis: Arc::new(Basis::full(register)),
            compiled: full,
        })
    }

    pub fn register(&self) -> Register {
        self.register
    }

    pub fn hamiltonian(&self) -> &Op {
        &self.hamiltonian
    }

    pub fn jump_terms(&self) -> &[JumpTerm] {
        &self.jumps
    }

    pub fn active_channels(&self) -> ActiveChannels {
        self.active
    }

    /// Basis the generator currently acts on.
    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Full-register index of the transport initial state, when the generator
    /// was built from a network.
    pub fn initial_state_index(&self) -> Option<usize> {
        self.initial_state
    }

    /// Smallest positive rate among the dissipators.
    pub fn min_positive_rate(&self) -> Option<f64> {
        self.jumps.iter().map(|j| j.rate).filter(|&r| r > 0.0).reduce(f64::min)
    }

    /// Same generator acting on a subspace it leaves invariant.
    pub fn restrict(&self, basis: Basis) -> Result<Self> {
        if basis.register() != self.register {
            return Err(Error::RegisterMismatch);
        }
        if basis.is_full() {
            return Ok(Self { basis: Arc::new(basis), compiled: self.full.clone(), ..self.clone() });
        }
        let f = &self.full;
        let h = f.hamiltonian.restrict(&basis)?;
        let jumps = f.jumps.iter().map(|l| l.restrict(&basis)).collect::<Result<Vec<_>>>()?;
        let decay = f.decay.iter().map(|d| d.restrict(&basis)).collect::<Result<Vec<_>>>()?;
        let compiled = Compiled::new(h, jumps, decay, f.rates.clone());
        Ok(Self { basis: Arc::new(basis), compiled: Arc::new(compiled), ..self.clone() })
    }

    /// Smallest coordinate subspace containing `seeds` (full-register basis
    /// states) that every term of the generator maps into itself.
    pub fn closure(&self, seeds: &[usize]) -> Basis {
        let dim = self.register.dim();
        let f = &self.full;
        let mut next: Vec<Vec<usize>> = vec![Vec::new(); dim];
        let terms = std::iter::once(&f.hamiltonian).chain(&f.jumps).chain(&f.decay);
        for m in terms {
            for (r, c, _) in m.triplets() {
                next[c].push(r);
            }
        }
        let mut seen = vec![false; dim];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &s in seeds {
            if s < dim && !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for &r in &next[s] {
                if !seen[r] {
                    seen[r] = true;
                    queue.push_back(r);
                }
            }
        }
        Basis::from_states(self.register, (0..dim).filter(|&s| seen[s]).collect())
    }

    /// `∂ρ` for a matrix expressed on [`Generator::basis`].
    pub fn apply_matrix(&self, rho: &CMatrix) -> Result<CMatrix> {
        let n = self.dim();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: rho.nrows() });
        }
        let mut out = CMatrix::zeros(n, n);
        let mut scratch = CMatrix::zeros(n, n);
        self.apply_into(rho, &mut out, &mut scratch);
        Ok(out)
    }

    /// Allocation-free kernel: `out = L(rho)`; `scratch` is clobbered.
    pub fn apply_into(&self, rho: &CMatrix, out: &mut CMatrix, scratch: &mut CMatrix) {
        let c = &self.compiled;
        out.fill(C64::new(0.0, 0.0));
        c.h_eff.left_mul_acc(C64::new(0.0, -1.0), rho, out);
        c.h_eff.right_mul_adjoint_acc(C64::new(0.0, 1.0), rho, out);
        for (l, &g) in c.jumps.iter().zip(&c.rates) {
            scratch.fill(C64::new(0.0, 0.0));
            l.left_mul_acc(C64::new(1.0, 0.0), rho, scratch);
            l.right_mul_adjoint_acc(C64::new(g, 0.0), scratch, out);
        }
    }

    /// Visits every nonzero of the column-stacked superoperator whose row and
    /// column pairs are both kept by `index`; `index(i, j)` maps a matrix
    /// coordinate to its position in the vectorized space.
    pub(crate) fn for_each_superoperator_entry(
        &self,
        index: impl Fn(usize, usize) -> Option<usize>,
        mut visit: impl FnMut(usize, usize, C64),
    ) {
        let c = &self.compiled;
        let n = self.dim();
        let minus_i = C64::new(0.0, -1.0);
        for (i, k, v) in c.h_eff.triplets() {
            for j in 0..n {
                if let (Some(r), Some(col)) = (index(i, j), index(k, j)) {
                    visit(r, col, minus_i * v);
                }
            }
            // ρ H_eff†: entry (j, i) of the result picks ρ(j, k)·conj(H(i, k))
            for j in 0..n {
                if let (Some(r), Some(col)) = (index(j, i), index(j, k)) {
                    visit(r, col, -minus_i * v.conj());
                }
            }
        }
        for (l, &g) in c.jumps.iter().zip(&c.rates) {
            for (i, k, v) in l.triplets() {
                for (j, m, w) in l.triplets() {
                    if let (Some(r), Some(col)) = (index(i, j), index(k, m)) {
                        visit(r, col, v * w.conj() * g);
                    }
                }
            }
        }
    }

    /// Column-stacked superoperator `S` with `S · vec(ρ) = vec(L(ρ))`.
    pub fn explicit_superoperator(&self) -> Result<SparseMatrix> {
        let n = self.dim();
        if n > SUPEROPERATOR_MAX_DIM {
            return Err(Error::SuperoperatorTooLarge { dim: n, max: SUPEROPERATOR_MAX_DIM });
        }
        let mut trip = Vec::new();
        self.for_each_superoperator_entry(|i, j| Some(i + j * n), |r, c, v| trip.push((r, c, v)));
        Ok(SparseMatrix::from_triplets(n * n, n * n, trip))
    }
}

fn system_register(spec: &NetworkSpec) -> Result<Register> {
    Register::new(spec.n_sites(), spec.n_ancillas(), true)
}

fn hamiltonian_with(spec: &NetworkSpec, hopping: f64, ancilla_coupling: f64) -> Result<Op> {
    let reg = system_register(spec)?;
    let mut h = CMatrix::zeros(reg.dim(), reg.dim());
    let z = pauli::z();
    for q in reg.system_qubits().chain(reg.ancilla_qubits()) {
        h += embed(&z, q, reg)?.into_matrix();
    }
    if hopping != 0.0 {
        for (i, j) in spec.edges() {
            h += heisenberg_term(i, j, reg)?.into_matrix() * C64::new(hopping, 0.0);
        }
    }
    if let (Some(w), true) = (spec.ancilla(), ancilla_coupling != 0.0) {
        for (i, a) in w.pairs() {
            h += heisenberg_term(i, reg.ancilla_qubit(a), reg)?.into_matrix() * C64::new(ancilla_coupling, 0.0);
        }
    }
    Op::new(h, reg)
}

/// Free `σ_z` terms on system and ancilla qubits, `J σ^i·σ^j` once per edge and
/// `Q σ^i·σ^α` per wired pair. The sink has no Hamiltonian term.
pub fn build_hamiltonian(spec: &NetworkSpec, params: &ModelParams) -> Result<Op> {
    params.validate(spec.n_sites())?;
    hamiltonian_with(spec, params.hopping, params.ancilla_coupling)
}

pub fn build_generator(spec: &NetworkSpec, params: &ModelParams, mode: CouplingMode) -> Result<Generator> {
    params.validate(spec.n_sites())?;
    let wiring = spec.ancilla();
    if mode != CouplingMode::Coherent && wiring.is_none() {
        return Err(Error::MissingAncilla);
    }
    let q = if mode == CouplingMode::Incoherent { 0.0 } else { params.ancilla_coupling };
    let (ex_up, ex_down) = if mode == CouplingMode::Coherent {
        (0.0, 0.0)
    } else {
        (params.exchange_up, params.exchange_down)
    };
    let hamiltonian = hamiltonian_with(spec, params.hopping, q)?;
    let reg = hamiltonian.register();
    let (z, plus, minus) = (pauli::z(), pauli::plus(), pauli::minus());

    let mut jumps = Vec::new();
    let mut push = |channel: Channel, rate: f64, op: Result<Op>| -> Result<()> {
        if rate > 0.0 {
            jumps.push(JumpTerm { channel, op: op?, rate });
        }
        Ok(())
    };
    for site in reg.system_qubits() {
        push(Channel::Dephasing { site }, params.dephasing, embed(&z, site, reg))?;
    }
    for site in reg.system_qubits() {
        let n = params.occupation_at(site);
        push(Channel::Pump { site }, params.gamma_up * n, embed(&plus, site, reg))?;
        push(Channel::Loss { site }, params.gamma_down * (n + 1.0), embed(&minus, site, reg))?;
    }
    if let Some(w) = wiring.filter(|w| w.is_open()) {
        let n = params.ancilla_occupation;
        for ancilla in 0..w.n_ancillas() {
            let q = reg.ancilla_qubit(ancilla);
            push(Channel::AncillaPump { ancilla }, params.ancilla_gamma_up * n, embed(&plus, q, reg))?;
            push(Channel::AncillaLoss { ancilla }, params.ancilla_gamma_down * (n + 1.0), embed(&minus, q, reg))?;
        }
    }
    let sink = reg.sink_qubit().expect("network registers carry a sink");
    let attach = spec.sink_site() - 1;
    push(Channel::Sink, params.sink_rate, embed_product(&[(&plus, sink), (&minus, attach)], reg))?;
    if let Some(w) = wiring {
        for (site, ancilla) in w.pairs() {
            let a = reg.ancilla_qubit(ancilla);
            push(Channel::ExchangeUp { site, ancilla }, ex_up, embed_product(&[(&plus, site), (&minus, a)], reg))?;
            push(Channel::ExchangeDown { site, ancilla }, ex_down, embed_product(&[(&minus, site), (&plus, a)], reg))?;
        }
    }

    let mut generator = Generator::from_parts(hamiltonian, jumps)?;
    generator.initial_state = Some(reg.product_index(&[spec.source_site() - 1])?);
    Ok(generator)
}
