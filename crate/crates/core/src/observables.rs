//! Figures of merit: sink population, l1-coherence, trace distance and a
//! trace-distance memory witness.

use std::sync::Arc;

use nalgebra::DVector;

use crate::basis::Basis;
use crate::dynamics::{evolve_with, DensityMatrix, IntegratorOptions};
use crate::error::{Error, Result};
use crate::generator::Generator;
use crate::operator::{CMatrix, Register, C64};
use crate::topology::NetworkSpec;

/// Reduced state on `keep` (register qubit indices, any order).
///
/// Kept qubits retain their relative order, so the reduction of system,
/// ancilla and sink qubits is again laid out system-first.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let reg = rho.register();
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() {
        return Err(Error::InvalidRegister("partial trace must keep at least one qubit".into()));
    }
    for &q in &keep {
        reg.check_qubit(q)?;
    }
    let n_sys = keep.iter().filter(|&&q| q < reg.n_system()).count();
    let n_anc = keep.iter().filter(|q| reg.ancilla_qubits().contains(q)).count();
    let sink = reg.sink_qubit().is_some_and(|s| keep.contains(&s));
    let sub = Register::subsystem(n_sys, n_anc, sink)?;

    let kept_mask: usize = keep.iter().map(|&q| 1usize << reg.bit(q)).sum();
    let reduce = |state: usize| -> usize {
        keep.iter().fold(0, |acc, &q| (acc << 1) | ((state >> reg.bit(q)) & 1))
    };
    let basis = rho.basis();
    let rest: Vec<usize> = basis.states().iter().map(|&s| s & !kept_mask).collect();
    let red: Vec<usize> = basis.states().iter().map(|&s| reduce(s)).collect();
    let d = sub.dim();
    let mut out = CMatrix::zeros(d, d);
    let m = rho.matrix();
    for j in 0..basis.len() {
        for i in 0..basis.len() {
            if rest[i] == rest[j] {
                out[(red[i], red[j])] += m[(i, j)];
            }
        }
    }
    DensityMatrix::on_basis_unchecked(out, Arc::new(Basis::full(sub)))
}

/// Probability that the sink qubit is excited.
pub fn sep(rho: &DensityMatrix) -> Result<f64> {
    let reg = rho.register();
    let sink = reg.sink_qubit().ok_or(Error::NoSink)?;
    let basis = rho.basis();
    Ok((0..basis.len())
        .filter(|&i| reg.is_excited(basis.state(i), sink))
        .map(|i| rho.matrix()[(i, i)].re)
        .sum())
}

/// `SEP(D) − SEP(0)`.
pub fn sepi(sep_at_d: f64, sep_at_zero: f64) -> f64 {
    sep_at_d - sep_at_zero
}

/// `Σ_{i≠j} |ρ_ij|` in the computational basis.
pub fn coherence_l1(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    let mut total = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j {
                total += m[(i, j)].norm();
            }
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
pub enum CoherenceScope {
    /// System, ancilla and sink together.
    #[default]
    Full,
    /// Reduced state of the system qubits.
    System,
}

pub fn coherence_l1_scoped(rho: &DensityMatrix, scope: CoherenceScope) -> Result<f64> {
    match scope {
        CoherenceScope::Full => Ok(coherence_l1(rho)),
        CoherenceScope::System => {
            let keep: Vec<usize> = rho.register().system_qubits().collect();
            Ok(coherence_l1(&partial_trace(rho, &keep)?))
        }
    }
}

/// `½ Σ |λ|` over the eigenvalues of `rho1 − rho2`.
pub fn trace_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    if rho1.register() != rho2.register() {
        return Err(Error::RegisterMismatch);
    }
    let diff = if rho1.basis() == rho2.basis() {
        rho1.matrix() - rho2.matrix()
    } else {
        let mut states = rho1.basis().states().to_vec();
        states.extend_from_slice(rho2.basis().states());
        let union = Arc::new(Basis::from_states(rho1.register(), states));
        rho1.lift(union.clone())?.into_matrix() - rho2.lift(union)?.into_matrix()
    };
    if diff.nrows() == 0 {
        return Ok(0.0);
    }
    let herm = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
    Ok(0.5 * herm.symmetric_eigenvalues().iter().map(|v| v.abs()).sum::<f64>())
}

/// Subsystem on which the two witness states are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Probe {
    Ancilla,
    System,
    /// The whole register; the distance is then contractive for any
    /// Lindblad generator and the witness vanishes.
    Full,
}

impl Probe {
    pub fn qubits(&self, reg: Register) -> Result<Vec<usize>> {
        match self {
            Probe::Ancilla if reg.n_ancilla() == 0 => Err(Error::NoAncilla),
            Probe::Ancilla => Ok(reg.ancilla_qubits().collect()),
            Probe::System => Ok(reg.system_qubits().collect()),
            Probe::Full => Ok((0..reg.n_qubits()).collect()),
        }
    }

    pub fn reduce(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        match self {
            Probe::Full => Ok(rho.clone()),
            _ => partial_trace(rho, &self.qubits(rho.register())?),
        }
    }
}

/// Two initial states evolved side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessPair {
    rho_a: DensityMatrix,
    rho_b: DensityMatrix,
    probe: Probe,
}

fn network_register(spec: &NetworkSpec) -> Result<Register> {
    Register::new(spec.n_sites(), spec.n_ancillas(), true)
}

impl WitnessPair {
    pub fn new(rho_a: DensityMatrix, rho_b: DensityMatrix, probe: Probe) -> Result<Self> {
        if rho_a.register() != rho_b.register() {
            return Err(Error::RegisterMismatch);
        }
        let d0 = trace_distance(&probe.reduce(&rho_a)?, &probe.reduce(&rho_b)?)?;
        if d0 <= 1e-12 {
            return Err(Error::DegeneratePair);
        }
        Ok(Self { rho_a, rho_b, probe })
    }

    /// `|ψ⟩` and its orthogonal complement on `qubit`; every other qubit
    /// stays as in the transport initial state.
    pub fn on_qubit(spec: &NetworkSpec, qubit: usize, psi: [C64; 2], probe: Probe) -> Result<Self> {
        let reg = network_register(spec)?;
        reg.check_qubit(qubit)?;
        let norm = (psi[0].norm_sqr() + psi[1].norm_sqr()).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("single-qubit state must be nonzero".into()));
        }
        let psi = [psi[0] / norm, psi[1] / norm];
        let perp = [-psi[1].conj(), psi[0].conj()];
        let source = spec.source_site() - 1;
        let rest: Vec<usize> = if qubit == source { vec![] } else { vec![source] };
        let base = reg.product_index(&rest)?;
        let bit = 1usize << reg.bit(qubit);
        let up = base & !bit;
        let down = base | bit;
        let state = |amp: [C64; 2]| {
            let mut v = DVector::zeros(reg.dim());
            v[up] = amp[0];
            v[down] = amp[1];
            DensityMatrix::pure(&v, reg)
        };
        Self::new(state(psi)?, state(perp)?, probe)
    }

    /// `|↑⟩` vs `|↓⟩` on the (first) ancilla, judged on the ancilla.
    pub fn ancilla_seeded(spec: &NetworkSpec) -> Result<Self> {
        let reg = network_register(spec)?;
        if reg.n_ancilla() == 0 {
            return Err(Error::NoAncilla);
        }
        let one = C64::new(1.0, 0.0);
        Self::on_qubit(spec, reg.ancilla_qubit(0), [one, C64::new(0.0, 0.0)], Probe::Ancilla)
    }

    /// `|↑⟩` vs `|↓⟩` on the source site, judged on the system.
    pub fn system_seeded(spec: &NetworkSpec) -> Result<Self> {
        let one = C64::new(1.0, 0.0);
        Self::on_qubit(spec, spec.source_site() - 1, [one, C64::new(0.0, 0.0)], Probe::System)
    }

    pub fn states(&self) -> (&DensityMatrix, &DensityMatrix) {
        (&self.rho_a, &self.rho_b)
    }

    pub fn probe(&self) -> Probe {
        self.probe
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessResult {
    /// Sum of the positive increments of the distance series.
    pub value: f64,
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
}

/// Sum of positive increments of `series`.
pub fn positive_increments(series: &[f64]) -> f64 {
    series.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum()
}

/// `points` equally spaced times on `[0, t_final]`.
pub fn uniform_grid(t_final: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![t_final],
        _ => (0..points).map(|k| t_final * k as f64 / (points - 1) as f64).collect(),
    }
}

/// Evolves both states of `pair` and accumulates the growth of the distance
/// between their probe reductions over `grid`.
pub fn nonmarkov_witness(
    gen: &Generator,
    pair: &WitnessPair,
    t_final: f64,
    grid: &[f64],
    opts: &IntegratorOptions,
) -> Result<WitnessResult> {
    let run = |rho0: &DensityMatrix| -> Result<Vec<DensityMatrix>> {
        let mut out = Vec::with_capacity(grid.len());
        evolve_with(rho0, gen, t_final, grid, opts, |_, rho| {
            out.push(pair.probe.reduce(rho)?);
            Ok(())
        })?;
        Ok(out)
    };
    let (a, b) = rayon::join(|| run(&pair.rho_a), || run(&pair.rho_b));
    let (a, b) = (a?, b?);
    let distances = a.iter().zip(&b).map(|(x, y)| trace_distance(x, y)).collect::<Result<Vec<_>>>()?;
    Ok(WitnessResult { value: positive_increments(&distances), times: grid.to_vec(), distances })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::initial_state;
    use crate::generator::{build_generator, Channel, CouplingMode, JumpTerm, ModelParams};
    use crate::operator::{embed, pauli, Op};
    use crate::topology::{build_archetype, AncillaWiring, Archetype};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn qubit(m: [f64; 4]) -> DensityMatrix {
        let reg = Register::new(1, 0, false).unwrap();
        DensityMatrix::new(CMatrix::from_row_slice(2, 2, &m.map(c)), reg).unwrap()
    }

    #[test]
    fn trace_distance_examples() {
        let zero = qubit([1.0, 0.0, 0.0, 0.0]);
        let one = qubit([0.0, 0.0, 0.0, 1.0]);
        let plus = qubit([0.5, 0.5, 0.5, 0.5]);
        assert_eq!(trace_distance(&zero, &zero).unwrap(), 0.0);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-14);
        // Oracle: ρ0 − ρ+ = [[½, −½], [−½, −½]] has eigenvalues ±1/√2.
        assert!((trace_distance(&zero, &plus).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn coherence_examples() {
        assert_eq!(coherence_l1(&qubit([0.3, 0.0, 0.0, 0.7])), 0.0);
        assert!((coherence_l1(&qubit([0.5, 0.5, 0.5, 0.5])) - 1.0).abs() < 1e-15);
        let reg = Register::new(2, 0, false).unwrap();
        let mut v = DVector::zeros(4);
        v[0] = c(0.5f64.sqrt());
        v[3] = c(0.5f64.sqrt());
        let bell = DensityMatrix::pure(&v, reg).unwrap();
        assert!((coherence_l1(&bell) - 1.0).abs() < 1e-15);
        let reduced = partial_trace(&bell, &[1]).unwrap();
        assert!((reduced.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert_eq!(coherence_l1(&reduced), 0.0);
    }

    #[test]
    fn partial_trace_of_product() {
        let reg = Register::new(1, 0, true).unwrap();
        // ρ_A = diag(0.3, 0.7) ⊗ |+⟩⟨+|
        let a = CMatrix::from_row_slice(2, 2, &[c(0.3), c(0.0), c(0.0), c(0.7)]);
        let b = CMatrix::from_element(2, 2, c(0.5));
        let rho = DensityMatrix::new(a.kronecker(&b), reg).unwrap();
        let ra = partial_trace(&rho, &[0]).unwrap();
        assert_eq!(ra.matrix(), &a);
        let rb = partial_trace(&rho, &[1]).unwrap();
        assert!(crate::operator::max_abs_diff(rb.matrix(), &b) < 1e-15);
        assert!(partial_trace(&rho, &[]).is_err());
        assert!(partial_trace(&rho, &[2]).is_err());
    }

    #[test]
    fn sep_reads_sink_population() {
        let reg = Register::new(1, 0, true).unwrap();
        // sink reduced state diag(0.3, 0.7) in (excited, ground) order
        let site = CMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(1.0)]);
        let sink = CMatrix::from_row_slice(2, 2, &[c(0.3), c(0.0), c(0.0), c(0.7)]);
        let rho = DensityMatrix::new(site.kronecker(&sink), reg).unwrap();
        assert!((sep(&rho).unwrap() - 0.3).abs() < 1e-15);
        let full = DensityMatrix::product(reg, &[1]).unwrap();
        assert_eq!(sep(&full).unwrap(), 1.0);
        assert!(matches!(sep(&qubit([1.0, 0.0, 0.0, 0.0])), Err(Error::NoSink)));
        assert_eq!(sepi(0.8, 0.6), 0.8 - 0.6);
        assert_eq!(sepi(0.4, 0.4), 0.0);
    }

    #[test]
    fn system_scope_drops_sink_coherence() {
        let spec = build_archetype(Archetype::Linear, 2).unwrap();
        let rho = initial_state(&spec).unwrap();
        assert_eq!(coherence_l1_scoped(&rho, CoherenceScope::System).unwrap(), 0.0);
        let reg = rho.register();
        let mut v = DVector::zeros(reg.dim());
        v[reg.product_index(&[0]).unwrap()] = c(0.5f64.sqrt());
        v[reg.product_index(&[1]).unwrap()] = c(0.5f64.sqrt());
        let rho = DensityMatrix::pure(&v, reg).unwrap();
        assert!((coherence_l1_scoped(&rho, CoherenceScope::System).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn markovian_qubit_has_no_witness() {
        let reg = Register::new(1, 0, false).unwrap();
        let deph = JumpTerm { channel: Channel::Dephasing { site: 0 }, op: embed(&pauli::z(), 0, reg).unwrap(), rate: 0.4 };
        let g = Generator::from_parts(Op::new(pauli::z(), reg).unwrap(), vec![deph]).unwrap();
        let h = c(0.5);
        let plus = DensityMatrix::new(CMatrix::from_element(2, 2, h), reg).unwrap();
        let minus = DensityMatrix::new(CMatrix::from_row_slice(2, 2, &[h, -h, -h, h]), reg).unwrap();
        let pair = WitnessPair::new(plus, minus, Probe::Full).unwrap();
        let grid = uniform_grid(5.0, 200);
        let w = nonmarkov_witness(&g, &pair, 5.0, &grid, &IntegratorOptions::default()).unwrap();
        assert!(w.value < 1e-9);
        assert!((w.distances[0] - 1.0).abs() < 1e-12);
        // Oracle: the coherence decays as e^{−2Dt}
        let last = *w.distances.last().unwrap();
        assert!((last - (-0.8f64 * 5.0).exp()).abs() < 1e-7);
    }

    #[test]
    fn pair_construction() {
        let spec = build_archetype(Archetype::Loop, 3).unwrap();
        assert!(matches!(WitnessPair::ancilla_seeded(&spec), Err(Error::NoAncilla)));
        let pair = WitnessPair::system_seeded(&spec).unwrap();
        let (a, b) = pair.states();
        assert_eq!(a, &initial_state(&spec).unwrap().to_full());
        assert_eq!(b.population(0), 0.0);
        let a0 = initial_state(&spec).unwrap();
        assert!(matches!(WitnessPair::new(a0.clone(), a0, Probe::System), Err(Error::DegeneratePair)));

        let spec = spec.with_ancilla(AncillaWiring::communal(3, false)).unwrap();
        let pair = WitnessPair::ancilla_seeded(&spec).unwrap();
        let (a, b) = pair.states();
        let anc = a.register().ancilla_qubit(0);
        assert_eq!(a.population(a.register().product_index(&[0, anc]).unwrap()), 1.0);
        assert_eq!(b.population(b.register().product_index(&[0]).unwrap()), 1.0);
    }

    #[test]
    fn coherent_ancilla_revives_distance() {
        let spec = build_archetype(Archetype::MaximallyConnected, 3)
            .unwrap()
            .with_ancilla(AncillaWiring::communal(3, false))
            .unwrap();
        let p = ModelParams { hopping: 20.0, ancilla_coupling: 20.0, ..Default::default() };
        let g = build_generator(&spec, &p, CouplingMode::Coherent).unwrap();
        let pair = WitnessPair::ancilla_seeded(&spec).unwrap();
        let grid = uniform_grid(2.0, 400);
        let w = nonmarkov_witness(&g, &pair, 2.0, &grid, &IntegratorOptions::default()).unwrap();
        assert!(w.value > 1e-3);
    }

    #[test]
    fn grid_helpers() {
        assert_eq!(uniform_grid(1.0, 3), vec![0.0, 0.5, 1.0]);
        let w = positive_increments(&[1.0, 0.5, 0.7, 0.6, 0.9]);
        assert!((w - 0.5).abs() < 1e-15);
    }
}
