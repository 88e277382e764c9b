//! Density matrices, propagation and steady states.

mod integrator;
mod steady;

use std::sync::Arc;

use nalgebra::DVector;

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::generator::Generator;
use crate::observables;
use crate::operator::{CMatrix, Register, C64};
use crate::topology::NetworkSpec;

pub use integrator::IntegratorOptions;
pub use steady::{asymptotic_state, steady_state, SteadyStateMethod, SteadyStateOptions};

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Density matrix expressed on a coordinate subspace of its register.
///
/// Entries outside the basis are zero. Most states live on the full basis;
/// propagation moves them onto the smallest subspace the generator keeps
/// invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    basis: Arc<Basis>,
}

impl DensityMatrix {
    /// Validated state on the full register.
    pub fn new(matrix: CMatrix, register: Register) -> Result<Self> {
        Self::on_basis(matrix, Arc::new(Basis::full(register)))
    }

    /// Validated state on a subspace.
    pub fn on_basis(matrix: CMatrix, basis: Arc<Basis>) -> Result<Self> {
        let rho = Self::on_basis_unchecked(matrix, basis)?;
        rho.check_invariants().map_err(|e| match e {
            Error::InvariantViolation { what, value, .. } => Error::InvalidState(format!("{what} = {value:e}")),
            other => other,
        })?;
        Ok(rho)
    }

    pub(crate) fn on_basis_unchecked(matrix: CMatrix, basis: Arc<Basis>) -> Result<Self> {
        let n = basis.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: matrix.nrows() });
        }
        Ok(Self { matrix, basis })
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector on the full register.
    pub fn pure(psi: &DVector<C64>, register: Register) -> Result<Self> {
        if psi.len() != register.dim() {
            return Err(Error::DimensionMismatch { expected: register.dim(), got: psi.len() });
        }
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("state vector norm {norm} is not 1")));
        }
        Self::new(psi * psi.adjoint(), register)
    }

    /// Projector onto the computational state with exactly `excited` up.
    pub fn product(register: Register, excited: &[usize]) -> Result<Self> {
        let s = register.product_index(excited)?;
        let basis = Basis::from_states(register, vec![s]);
        Ok(Self { matrix: CMatrix::from_element(1, 1, C64::new(1.0, 0.0)), basis: Arc::new(basis) })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn register(&self) -> Register {
        self.basis.register()
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.register().dim()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Population of a full-register computational state.
    pub fn population(&self, state: usize) -> f64 {
        self.basis.position(state).map_or(0.0, |i| self.matrix[(i, i)].re)
    }

    /// Matrix element `⟨a|ρ|b⟩` for full-register states.
    pub fn element(&self, a: usize, b: usize) -> C64 {
        match (self.basis.position(a), self.basis.position(b)) {
            (Some(i), Some(j)) => self.matrix[(i, j)],
            _ => C64::new(0.0, 0.0),
        }
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        if self.matrix.nrows() == 0 {
            return 0.0;
        }
        let h = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn check_invariants_at(&self, t: f64) -> Result<()> {
        let herm = self.hermiticity_residual();
        if herm.is_nan() || herm > HERMITICITY_TOL {
            return Err(Error::InvariantViolation { t, what: "hermiticity residual", value: herm });
        }
        let drift = (self.trace() - C64::new(1.0, 0.0)).norm();
        if drift.is_nan() || drift > TRACE_TOL {
            return Err(Error::InvariantViolation { t, what: "trace drift", value: drift });
        }
        let min = self.min_eigenvalue();
        if min.is_nan() || min < -POSITIVITY_TOL {
            return Err(Error::InvariantViolation { t, what: "minimum eigenvalue", value: min });
        }
        Ok(())
    }

    /// Hermiticity within 1e-10, unit trace within 1e-9, eigenvalues above -1e-8.
    pub fn check_invariants(&self) -> Result<()> {
        self.check_invariants_at(0.0)
    }

    /// Full-register states carrying weight.
    pub fn support(&self) -> Vec<usize> {
        let n = self.matrix.nrows();
        (0..n)
            .filter(|&i| (0..n).any(|j| self.matrix[(i, j)] != C64::new(0.0, 0.0)))
            .map(|i| self.basis.state(i))
            .collect()
    }

    /// Same state on a larger (or equal) basis.
    pub fn lift(&self, basis: Arc<Basis>) -> Result<Self> {
        if basis.register() != self.register() {
            return Err(Error::RegisterMismatch);
        }
        if *basis == *self.basis {
            return Ok(Self { matrix: self.matrix.clone(), basis });
        }
        if !self.basis.is_subset_of(&basis) {
            return Err(Error::InvalidState("target basis does not contain the state's basis".into()));
        }
        let pos: Vec<usize> = self.basis.states().iter().map(|&s| basis.position(s).expect("subset")).collect();
        let mut m = CMatrix::zeros(basis.len(), basis.len());
        for (j, &pj) in pos.iter().enumerate() {
            for (i, &pi) in pos.iter().enumerate() {
                m[(pi, pj)] = self.matrix[(i, j)];
            }
        }
        Ok(Self { matrix: m, basis })
    }

    pub fn to_full(&self) -> Self {
        self.lift(Arc::new(Basis::full(self.register()))).expect("full basis contains every basis")
    }

    /// Same state on a smaller basis that contains its support.
    pub fn compress(&self, basis: Arc<Basis>) -> Result<Self> {
        if basis.register() != self.register() {
            return Err(Error::RegisterMismatch);
        }
        if self.support().iter().any(|&s| !basis.contains(s)) {
            return Err(Error::InvalidState("state has weight outside the target basis".into()));
        }
        let n = basis.len();
        let m = CMatrix::from_fn(n, n, |i, j| self.element(basis.state(i), basis.state(j)));
        Ok(Self { matrix: m, basis })
    }

    /// Either lifts or compresses onto `basis`.
    pub fn express_on(&self, basis: Arc<Basis>) -> Result<Self> {
        if self.basis.is_subset_of(&basis) {
            self.lift(basis)
        } else {
            self.compress(basis)
        }
    }
}

/// Source site excited; all other qubits, ancillas and the sink in `|↓⟩`.
pub fn initial_state(spec: &NetworkSpec) -> Result<DensityMatrix> {
    let reg = Register::new(spec.n_sites(), spec.n_ancillas(), true)?;
    DensityMatrix::product(reg, &[spec.source_site() - 1])
}

/// Observables recorded at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub t: f64,
    /// `None` when the register has no sink.
    pub sep: Option<f64>,
    pub coherence_l1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub records: Vec<Record>,
    pub snapshots: Option<Vec<DensityMatrix>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub(crate) fn validate_grid(t_final: f64, times: &[f64]) -> Result<()> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::InvalidTimeGrid(format!("t_final = {t_final} must be positive")));
    }
    for w in times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidTimeGrid(format!("times not strictly increasing at {}", w[1])));
        }
    }
    if let Some(&t) = times.iter().find(|&&t| !(0.0..=t_final).contains(&t)) {
        return Err(Error::InvalidTimeGrid(format!("record time {t} outside [0, {t_final}]")));
    }
    Ok(())
}

/// Propagates `rho0` and hands the state at every record time to `observe`.
///
/// The generator is first restricted to the smallest invariant subspace
/// containing the support of `rho0`; states passed to `observe` live there.
pub fn evolve_with<F>(
    rho0: &DensityMatrix,
    gen: &Generator,
    t_final: f64,
    record_times: &[f64],
    opts: &IntegratorOptions,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(f64, &DensityMatrix) -> Result<()>,
{
    opts.validate()?;
    validate_grid(t_final, record_times)?;
    if rho0.register() != gen.register() {
        return Err(Error::RegisterMismatch);
    }
    let closure = gen.closure(&rho0.support());
    let gen = if *gen.basis().as_ref() == closure { gen.clone() } else { gen.restrict(closure)? };
    let basis = gen.basis().clone();
    let start = rho0.express_on(basis.clone())?;
    integrator::integrate(&gen, start.into_matrix(), t_final, record_times, opts, |t, m| {
        let rho = DensityMatrix::on_basis_unchecked(m, basis.clone())?;
        rho.check_invariants_at(t)?;
        observe(t, &rho)
    })
}

fn record(t: f64, rho: &DensityMatrix) -> Record {
    Record { t, sep: observables::sep(rho).ok(), coherence_l1: observables::coherence_l1(rho) }
}

/// SEP and l1-coherence at each record time.
pub fn evolve(
    rho0: &DensityMatrix,
    gen: &Generator,
    t_final: f64,
    record_times: &[f64],
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let mut records = Vec::with_capacity(record_times.len());
    evolve_with(rho0, gen, t_final, record_times, opts, |t, rho| {
        records.push(record(t, rho));
        Ok(())
    })?;
    Ok(Trajectory { times: record_times.to_vec(), records, snapshots: None })
}

/// As [`evolve`], also keeping the states.
pub fn evolve_snapshots(
    rho0: &DensityMatrix,
    gen: &Generator,
    t_final: f64,
    record_times: &[f64],
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let mut records = Vec::with_capacity(record_times.len());
    let mut snapshots = Vec::with_capacity(record_times.len());
    evolve_with(rho0, gen, t_final, record_times, opts, |t, rho| {
        records.push(record(t, rho));
        snapshots.push(rho.clone());
        Ok(())
    })?;
    Ok(Trajectory { times: record_times.to_vec(), records, snapshots: Some(snapshots) })
}
