//! Stationary and asymptotic states.
//!
//! Every term of the generator shifts the excitation number of ket and bra
//! by the same amount, so the superoperator is block diagonal in the
//! difference Δ = n(ket) − n(bra). Populations live in the Δ = 0 block, which
//! is the only one solved here.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::integrator::{integrate, IntegratorOptions};
use super::DensityMatrix;
use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::generator::Generator;
use crate::operator::{CMatrix, C64};

/// Largest Δ = 0 block handed to the LU solver.
pub const NULLSPACE_MAX_SIZE: usize = 1600;
/// Largest block handed to the SVD in [`asymptotic_state`].
pub const ASYMPTOTIC_MAX_SIZE: usize = 700;
/// Relative pivot or singular value below which a direction counts as null.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SteadyStateMethod {
    NullSpace,
    LongTime,
}

impl SteadyStateMethod {
    /// NullSpace up to dimension 64, LongTime beyond.
    pub fn auto(gen: &Generator) -> Self {
        if gen.dim() <= 64 {
            Self::NullSpace
        } else {
            Self::LongTime
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteadyStateOptions {
    pub integrator: IntegratorOptions,
    /// Frobenius norm of the generator action accepted as stationary.
    pub residual_tol: f64,
    /// LongTime cutoff; `None` means 50 / (smallest positive rate).
    pub horizon: Option<f64>,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self { integrator: IntegratorOptions::default(), residual_tol: 1e-8, horizon: None }
    }
}

impl SteadyStateOptions {
    pub fn horizon_for(&self, gen: &Generator) -> f64 {
        self.horizon.unwrap_or_else(|| 50.0 / gen.min_positive_rate().unwrap_or(1.0))
    }
}

/// Positions of the pairs (i, j) with n(i) − n(j) = Δ, column-major.
struct Sector {
    n: usize,
    index: Vec<Option<usize>>,
    pairs: Vec<(usize, usize)>,
}

impl Sector {
    fn new(basis: &Basis, delta: i64) -> Self {
        let n = basis.len();
        let exc = basis.excitations();
        let mut index = vec![None; n * n];
        let mut pairs = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if exc[i] as i64 - exc[j] as i64 == delta {
                    index[i + j * n] = Some(pairs.len());
                    pairs.push((i, j));
                }
            }
        }
        Self { n, index, pairs }
    }

    fn len(&self) -> usize {
        self.pairs.len()
    }

    fn block(&self, gen: &Generator) -> DMatrix<C64> {
        let m = self.len();
        let mut a = DMatrix::zeros(m, m);
        let n = self.n;
        gen.for_each_superoperator_entry(|i, j| self.index[i + j * n], |r, c, v| a[(r, c)] += v);
        a
    }

    fn gather(&self, rho: &CMatrix) -> DVector<C64> {
        DVector::from_iterator(self.len(), self.pairs.iter().map(|&(i, j)| rho[(i, j)]))
    }

    fn scatter(&self, v: &DVector<C64>, rho: &mut CMatrix) {
        for (&(i, j), x) in self.pairs.iter().zip(v.iter()) {
            rho[(i, j)] = *x;
        }
    }
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn finish(gen: &Generator, rho: CMatrix, tol: f64) -> Result<DensityMatrix> {
    let rho = hermitian_part(&rho);
    let residual = gen.apply_matrix(&rho)?.norm();
    if !(residual < tol) {
        return Err(Error::NoSteadyState);
    }
    DensityMatrix::on_basis(rho, gen.basis().clone())
}

fn null_space(gen: &Generator, opts: &SteadyStateOptions) -> Result<DensityMatrix> {
    let sector = Sector::new(gen.basis(), 0);
    let m = sector.len();
    if m > NULLSPACE_MAX_SIZE {
        return Err(Error::SolverTooLarge { size: m, max: NULLSPACE_MAX_SIZE });
    }
    let mut a = sector.block(gen);
    let lu = a.clone().full_piv_lu();
    let pivots: Vec<f64> = lu.u().diagonal().iter().map(|z| z.norm()).collect();
    let largest = pivots.iter().copied().fold(0.0, f64::max);
    let nullity = pivots.iter().filter(|&&p| p <= RANK_TOL * largest).count();
    match nullity {
        0 => return Err(Error::NoSteadyState),
        1 => {}
        k => return Err(Error::SteadyStateNotUnique(k)),
    }
    // the diagonal rows sum to zero, so one of them can carry the trace condition
    let n = sector.n;
    let row = sector.index[0].expect("diagonal pairs belong to the Δ = 0 sector");
    a.row_mut(row).fill(C64::new(0.0, 0.0));
    for i in 0..n {
        a[(row, sector.index[i + i * n].expect("diagonal"))] = C64::new(1.0, 0.0);
    }
    let mut rhs = DVector::zeros(m);
    rhs[row] = C64::new(1.0, 0.0);
    let x = a.full_piv_lu().solve(&rhs).ok_or(Error::NoSteadyState)?;
    let mut rho = CMatrix::zeros(n, n);
    sector.scatter(&x, &mut rho);
    finish(gen, rho, opts.residual_tol)
}

fn long_time(gen: &Generator, opts: &SteadyStateOptions) -> Result<DensityMatrix> {
    let start = gen
        .initial_state_index()
        .ok_or_else(|| Error::InvalidState("generator carries no initial state".into()))?;
    let basis = gen.closure(&[start]);
    let gen = gen.restrict(basis)?;
    let n = gen.dim();
    let mut rho = CMatrix::zeros(n, n);
    let p = gen.basis().position(start).expect("closure contains its seed");
    rho[(p, p)] = C64::new(1.0, 0.0);

    let horizon = opts.horizon_for(&gen);
    let chunk = horizon / 50.0;
    let mut t = 0.0;
    let mut residual = gen.apply_matrix(&rho)?.norm();
    while residual >= opts.residual_tol {
        if t >= horizon {
            return Err(Error::HorizonExceeded { horizon, residual });
        }
        let mut next = None;
        integrate(&gen, rho, chunk, &[chunk], &opts.integrator, |_, y| {
            next = Some(y);
            Ok(())
        })?;
        rho = next.expect("integrator emits the final record");
        t += chunk;
        residual = gen.apply_matrix(&rho)?.norm();
    }
    let rho = DensityMatrix::on_basis_unchecked(hermitian_part(&rho), gen.basis().clone())?;
    rho.check_invariants_at(t)?;
    Ok(rho)
}

/// Stationary state of `gen` on its current basis.
///
/// NullSpace requires a one-dimensional kernel in the population sector;
/// LongTime integrates from the transport initial state.
pub fn steady_state(gen: &Generator, method: SteadyStateMethod, opts: &SteadyStateOptions) -> Result<DensityMatrix> {
    opts.integrator.validate()?;
    match method {
        SteadyStateMethod::NullSpace => null_space(gen, opts),
        SteadyStateMethod::LongTime => long_time(gen, opts),
    }
}

/// `lim_{t→∞} e^{tL} ρ0`, obtained by projecting `rho0` onto the kernel of
/// the generator along its range. Unlike [`steady_state`] this is well
/// defined when several stationary states exist, e.g. a zero-temperature
/// network where the excitation ends either in the sink or in the baths.
pub fn asymptotic_state(gen: &Generator, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    if rho0.register() != gen.register() {
        return Err(Error::RegisterMismatch);
    }
    let basis = gen.closure(&rho0.support());
    let gen = gen.restrict(basis)?;
    let rho = rho0.express_on(gen.basis().clone())?;
    let n = gen.dim();
    let exc = gen.basis().excitations();

    let mut deltas: Vec<i64> = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let d = exc[i] as i64 - exc[j] as i64;
            if rho.matrix()[(i, j)] != C64::new(0.0, 0.0) && !deltas.contains(&d) {
                deltas.push(d);
            }
        }
    }
    deltas.sort_unstable();

    let mut out = CMatrix::zeros(n, n);
    for delta in deltas {
        let sector = Sector::new(gen.basis(), delta);
        let m = sector.len();
        if m > ASYMPTOTIC_MAX_SIZE {
            return Err(Error::SolverTooLarge { size: m, max: ASYMPTOTIC_MAX_SIZE });
        }
        let svd = sector.block(&gen).svd(true, true);
        let u = svd.u.as_ref().expect("requested U");
        let v_t = svd.v_t.as_ref().expect("requested V^H");
        let largest = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let null: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&k| svd.singular_values[k] <= RANK_TOL * largest.max(1.0))
            .collect();
        if null.is_empty() {
            continue;
        }
        let k = null.len();
        let kernel = DMatrix::from_fn(m, k, |r, c| v_t[(null[c], r)].conj());
        let left = DMatrix::from_fn(m, k, |r, c| u[(r, null[c])]);
        let overlap = left.adjoint() * &kernel;
        let inv = overlap.try_inverse().ok_or(Error::NoSteadyState)?;
        let x = &kernel * (inv * (left.adjoint() * sector.gather(rho.matrix())));
        sector.scatter(&x, &mut out);
    }
    let out = DensityMatrix::on_basis_unchecked(hermitian_part(&out), gen.basis().clone())?;
    out.check_invariants_at(f64::INFINITY)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve_with, initial_state};
    use crate::generator::{build_generator, Channel, CouplingMode, JumpTerm, ModelParams};
    use crate::observables::{sep, trace_distance};
    use crate::operator::{embed, pauli, Op, Register};
    use crate::topology::{build_archetype, Archetype};

    fn thermal_qubit(gamma: f64, occupation: f64) -> Generator {
        let reg = Register::new(1, 0, false).unwrap();
        let jumps = vec![
            JumpTerm { channel: Channel::Pump { site: 0 }, op: embed(&pauli::plus(), 0, reg).unwrap(), rate: gamma * occupation },
            JumpTerm { channel: Channel::Loss { site: 0 }, op: embed(&pauli::minus(), 0, reg).unwrap(), rate: gamma * (occupation + 1.0) },
        ];
        Generator::from_parts(Op::new(pauli::z(), reg).unwrap(), jumps).unwrap()
    }

    #[test]
    fn loss_only_relaxes_to_ground() {
        let g = thermal_qubit(1.0, 0.0);
        let rho = steady_state(&g, SteadyStateMethod::NullSpace, &SteadyStateOptions::default()).unwrap();
        assert!((rho.population(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_balance() {
        // Oracle: detailed balance γN·P_g = γ(N+1)·P_e gives P_e = N/(2N+1).
        for n in [0.5, 1.0, 3.0] {
            let g = thermal_qubit(0.7, n);
            let rho = steady_state(&g, SteadyStateMethod::NullSpace, &SteadyStateOptions::default()).unwrap();
            assert!((rho.population(0) - n / (2.0 * n + 1.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_temperature_network_kernel_is_degenerate() {
        let spec = build_archetype(Archetype::Loop, 3).unwrap();
        let g = build_generator(&spec, &ModelParams { hopping: 2.0, dephasing: 0.3, ..Default::default() }, CouplingMode::Coherent).unwrap();
        let r = steady_state(&g, SteadyStateMethod::NullSpace, &SteadyStateOptions::default());
        assert!(matches!(r, Err(Error::SteadyStateNotUnique(2))));
    }

    #[test]
    fn zero_temperature_bookkeeping() {
        // Oracle: the excitation ends either in the sink or in a local bath.
        // The bath share is γ↓ ∫ Σ_i P_i(t) dt, integrated here by Simpson's rule
        // over a fine trajectory.
        let spec = build_archetype(Archetype::MaximallyConnected, 3).unwrap();
        let p = ModelParams { hopping: 2.0, dephasing: 0.5, gamma_down: 0.4, ..Default::default() };
        let g = build_generator(&spec, &p, CouplingMode::Coherent).unwrap();
        let rho0 = initial_state(&spec).unwrap();
        let reg = g.register();
        let (t_final, steps) = (80.0, 16000);
        let h = t_final / steps as f64;
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * h).collect();
        let mut occupied = Vec::new();
        let opts = IntegratorOptions { rel_tol: 1e-10, abs_tol: 1e-12, ..Default::default() };
        evolve_with(&rho0, &g, t_final, &times, &opts, |_, rho| {
            let n: f64 = reg.system_qubits().map(|q| rho.population(reg.product_index(&[q]).unwrap())).sum();
            occupied.push(n);
            Ok(())
        })
        .unwrap();
        let simpson: f64 = occupied
            .iter()
            .enumerate()
            .map(|(k, v)| v * if k == 0 || k == steps { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 })
            .sum::<f64>()
            * h
            / 3.0;
        let lost = p.gamma_down * simpson;

        let asym = asymptotic_state(&g, &rho0).unwrap();
        assert!((sep(&asym).unwrap() + lost - 1.0).abs() < 1e-6);
        let ground_or_sink: f64 = [reg.product_index(&[]).unwrap(), reg.product_index(&[reg.sink_qubit().unwrap()]).unwrap()]
            .iter()
            .map(|&s| asym.population(s))
            .sum();
        assert!((ground_or_sink - 1.0).abs() < 1e-10);

        let long = steady_state(&g, SteadyStateMethod::LongTime, &SteadyStateOptions::default()).unwrap();
        assert!(trace_distance(&long, &asym).unwrap() < 1e-6);
    }

    #[test]
    fn null_space_and_long_time_agree() {
        let spec = build_archetype(Archetype::MaximallyConnected, 3).unwrap();
        let p = ModelParams { hopping: 1.5, dephasing: 0.4, occupation: vec![1.0, 0.0, 0.0], ..Default::default() };
        let g = build_generator(&spec, &p, CouplingMode::Coherent).unwrap();
        // the sink fills on a time scale well beyond 50 / (slowest rate)
        let opts = SteadyStateOptions { horizon: Some(2000.0), ..Default::default() };
        let a = steady_state(&g, SteadyStateMethod::NullSpace, &opts).unwrap();
        let b = steady_state(&g, SteadyStateMethod::LongTime, &opts).unwrap();
        assert!(trace_distance(&a, &b).unwrap() < 1e-6);
        assert!(g.apply_matrix(a.matrix()).unwrap().norm() < 1e-8);
        // a warm bath keeps refilling the network, so the sink ends up full
        assert!((sep(&a).unwrap() - 1.0).abs() < 1e-8);
        let c = asymptotic_state(&g, &initial_state(&spec).unwrap()).unwrap();
        assert!(trace_distance(&a, &c).unwrap() < 1e-8);
    }

    #[test]
    fn horizon_is_reported() {
        let spec = build_archetype(Archetype::Linear, 3).unwrap();
        let g = build_generator(&spec, &ModelParams { hopping: 3.0, ..Default::default() }, CouplingMode::Coherent).unwrap();
        let opts = SteadyStateOptions { horizon: Some(0.5), ..Default::default() };
        assert!(matches!(steady_state(&g, SteadyStateMethod::LongTime, &opts), Err(Error::HorizonExceeded { .. })));
    }

    #[test]
    fn asymptotic_state_of_decoupled_coherence() {
        // An undamped qubit keeps its populations; the coherence of |+⟩
        // dephases away.
        let reg = Register::new(1, 0, false).unwrap();
        let deph = JumpTerm { channel: Channel::Dephasing { site: 0 }, op: embed(&pauli::z(), 0, reg).unwrap(), rate: 0.3 };
        let g = Generator::from_parts(Op::new(pauli::z(), reg).unwrap(), vec![deph]).unwrap();
        let half = C64::new(0.5, 0.0);
        let plus = DensityMatrix::new(CMatrix::from_element(2, 2, half), reg).unwrap();
        let out = asymptotic_state(&g, &plus).unwrap().to_full();
        let expect = CMatrix::from_diagonal_element(2, 2, half);
        assert!(crate::operator::max_abs_diff(out.matrix(), &expect) < 1e-12);
    }
}
