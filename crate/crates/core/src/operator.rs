//! Register layout and dense operator algebra.
//!
//! Qubits are ordered system sites first, then ancillas, then the sink. Qubit
//! `0` is the leftmost Kronecker factor, so it owns the most significant bit
//! of a basis index. Each qubit uses `|↑⟩ = 0`, `|↓⟩ = 1`, which makes
//! `σ_z = diag(1, -1)`, `σ_+ = |↑⟩⟨↓|` and `σ_- = |↓⟩⟨↑|`.

use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Largest register the dense operator layer will build (dim 512).
pub const MAX_QUBITS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Register {
    n_system: usize,
    n_ancilla: usize,
    has_sink: bool,
}

impl Register {
    pub fn new(n_system: usize, n_ancilla: usize, has_sink: bool) -> Result<Self> {
        if n_system == 0 {
            return Err(Error::InvalidRegister("at least one system qubit is required".into()));
        }
        Self::subsystem(n_system, n_ancilla, has_sink)
    }

    /// Layout of a reduced state; unlike [`Register::new`] it may hold no
    /// system qubit (e.g. the sink alone).
    pub fn subsystem(n_system: usize, n_ancilla: usize, has_sink: bool) -> Result<Self> {
        let n = n_system + n_ancilla + usize::from(has_sink);
        if n == 0 {
            return Err(Error::InvalidRegister("empty register".into()));
        }
        if n > MAX_QUBITS {
            return Err(Error::InvalidRegister(format!("{n} qubits exceeds the limit of {MAX_QUBITS}")));
        }
        Ok(Self { n_system, n_ancilla, has_sink })
    }

    pub fn n_system(&self) -> usize {
        self.n_system
    }

    pub fn n_ancilla(&self) -> usize {
        self.n_ancilla
    }

    pub fn has_sink(&self) -> bool {
        self.has_sink
    }

    pub fn n_qubits(&self) -> usize {
        self.n_system + self.n_ancilla + usize::from(self.has_sink)
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits()
    }

    pub fn system_qubits(&self) -> Range<usize> {
        0..self.n_system
    }

    pub fn ancilla_qubits(&self) -> Range<usize> {
        self.n_system..self.n_system + self.n_ancilla
    }

    pub fn ancilla_qubit(&self, ancilla: usize) -> usize {
        self.n_system + ancilla
    }

    pub fn sink_qubit(&self) -> Option<usize> {
        self.has_sink.then(|| self.n_system + self.n_ancilla)
    }

    /// Bit position of `qubit` inside a basis index.
    pub fn bit(&self, qubit: usize) -> usize {
        self.n_qubits() - 1 - qubit
    }

    pub fn is_excited(&self, state: usize, qubit: usize) -> bool {
        (state >> self.bit(qubit)) & 1 == 0
    }

    /// Number of excited qubits in a basis state.
    pub fn excitations(&self, state: usize) -> u32 {
        self.n_qubits() as u32 - state.count_ones()
    }

    /// Basis index of the product state with exactly `excited` up.
    pub fn product_index(&self, excited: &[usize]) -> Result<usize> {
        let mut state = self.dim() - 1;
        for &q in excited {
            self.check_qubit(q)?;
            state &= !(1 << self.bit(q));
        }
        Ok(state)
    }

    pub(crate) fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits() {
            Err(Error::QubitOutOfRange { index: q, n_qubits: self.n_qubits() })
        } else {
            Ok(())
        }
    }
}

pub mod pauli {
    use super::{CMatrix, C64};

    fn m(a: [[C64; 2]; 2]) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[a[0][0], a[0][1], a[1][0], a[1][1]])
    }

    const O: C64 = C64::new(0.0, 0.0);
    const I: C64 = C64::new(1.0, 0.0);
    const J: C64 = C64::new(0.0, 1.0);

    pub fn identity() -> CMatrix {
        m([[I, O], [O, I]])
    }

    pub fn x() -> CMatrix {
        m([[O, I], [I, O]])
    }

    pub fn y() -> CMatrix {
        m([[O, -J], [J, O]])
    }

    pub fn z() -> CMatrix {
        m([[I, O], [O, -I]])
    }

    /// Raising operator `|↑⟩⟨↓|`.
    pub fn plus() -> CMatrix {
        m([[O, I], [O, O]])
    }

    /// Lowering operator `|↓⟩⟨↑|`.
    pub fn minus() -> CMatrix {
        m([[O, O], [I, O]])
    }
}

/// A dense operator on the full register.
#[derive(Debug, Clone, PartialEq)]
pub struct Op {
    matrix: CMatrix,
    register: Register,
}

impl Op {
    pub fn new(matrix: CMatrix, register: Register) -> Result<Self> {
        let dim = register.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: matrix.nrows() });
        }
        Ok(Self { matrix, register })
    }

    pub fn zeros(register: Register) -> Self {
        let dim = register.dim();
        Self { matrix: CMatrix::zeros(dim, dim), register }
    }

    pub fn identity(register: Register) -> Self {
        let dim = register.dim();
        Self { matrix: CMatrix::identity(dim, dim), register }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn register(&self) -> Register {
        self.register
    }

    pub fn dagger(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), register: self.register }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { matrix: &self.matrix * factor, register: self.register }
    }

    pub fn add(&self, other: &Op) -> Result<Self> {
        self.same_register(other)?;
        Ok(Self { matrix: &self.matrix + &other.matrix, register: self.register })
    }

    pub fn sub(&self, other: &Op) -> Result<Self> {
        self.same_register(other)?;
        Ok(Self { matrix: &self.matrix - &other.matrix, register: self.register })
    }

    pub fn mul(&self, other: &Op) -> Result<Self> {
        self.same_register(other)?;
        Ok(Self { matrix: &self.matrix * &other.matrix, register: self.register })
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Largest entry of `A - A†` in modulus.
    pub fn hermiticity_residual(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    fn same_register(&self, other: &Op) -> Result<()> {
        if self.register == other.register {
            Ok(())
        } else {
            Err(Error::RegisterMismatch)
        }
    }
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn check_single_qubit(op: &CMatrix) -> Result<()> {
    if op.nrows() != 2 || op.ncols() != 2 {
        Err(Error::NotSingleQubit(op.nrows(), op.ncols()))
    } else {
        Ok(())
    }
}

/// Places a 2×2 operator on `qubit`, identity elsewhere.
pub fn embed(single_qubit_op: &CMatrix, qubit_index: usize, register: Register) -> Result<Op> {
    embed_product(&[(single_qubit_op, qubit_index)], register)
}

/// Tensor product of 2×2 factors on distinct qubits, identity elsewhere.
pub fn embed_product(factors: &[(&CMatrix, usize)], register: Register) -> Result<Op> {
    for (i, (op, q)) in factors.iter().enumerate() {
        check_single_qubit(op)?;
        register.check_qubit(*q)?;
        if factors[..i].iter().any(|(_, p)| p == q) {
            return Err(Error::SameQubit(*q));
        }
    }
    let dim = register.dim();
    let bits: Vec<usize> = factors.iter().map(|(_, q)| register.bit(*q)).collect();
    let mask: usize = bits.iter().map(|b| 1 << b).sum();
    let mut matrix = CMatrix::zeros(dim, dim);
    let k = factors.len();
    for col in 0..dim {
        let rest = col & !mask;
        // every row that agrees with `col` outside the factor qubits
        for combo in 0..(1usize << k) {
            let mut row = rest;
            let mut value = C64::new(1.0, 0.0);
            for (f, ((op, _), &b)) in factors.iter().zip(&bits).enumerate() {
                let r_bit = (combo >> f) & 1;
                let c_bit = (col >> b) & 1;
                value *= op[(r_bit, c_bit)];
                row |= r_bit << b;
            }
            if value != C64::new(0.0, 0.0) {
                matrix[(row, col)] = value;
            }
        }
    }
    Op::new(matrix, register)
}

/// `σ^i · σ^j = σ_x^i σ_x^j + σ_y^i σ_y^j + σ_z^i σ_z^j`.
pub fn heisenberg_term(i: usize, j: usize, register: Register) -> Result<Op> {
    if i == j {
        return Err(Error::SameQubit(i));
    }
    let mut total = Op::zeros(register);
    for p in [pauli::x(), pauli::y(), pauli::z()] {
        let term = embed_product(&[(&p, i), (&p, j)], register)?;
        total.matrix += term.matrix;
    }
    Ok(total)
}

pub fn commutator(a: &Op, b: &Op) -> Result<Op> {
    a.mul(b)?.sub(&b.mul(a)?)
}

pub fn anticommutator(a: &Op, b: &Op) -> Result<Op> {
    a.mul(b)?.add(&b.mul(a)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn reg(n: usize) -> Register {
        Register::new(n, 0, false).unwrap()
    }

    #[test]
    fn register_layout() {
        let r = Register::new(3, 2, true).unwrap();
        assert_eq!(r.n_qubits(), 6);
        assert_eq!(r.dim(), 64);
        assert_eq!(r.ancilla_qubits(), 3..5);
        assert_eq!(r.sink_qubit(), Some(5));
        let s = r.product_index(&[0]).unwrap();
        assert!(r.is_excited(s, 0));
        assert!(!r.is_excited(s, 5));
        assert_eq!(r.excitations(s), 1);
        assert!(Register::new(0, 1, true).is_err());
        assert!(Register::new(9, 1, false).is_err());
    }

    #[test]
    fn embed_single_qubit() {
        let z = embed(&pauli::z(), 0, reg(1)).unwrap();
        assert_eq!(z.matrix(), &CMatrix::from_diagonal(&nalgebra::dvector![c(1.0, 0.0), c(-1.0, 0.0)]));

        let x = embed(&pauli::x(), 1, reg(2)).unwrap();
        let mut expected = CMatrix::zeros(4, 4);
        for (r, col) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
            expected[(r, col)] = c(1.0, 0.0);
        }
        assert_eq!(x.matrix(), &expected);
    }

    #[test]
    fn raising_acts_on_ground_state() {
        let r = reg(2);
        let plus = embed(&pauli::plus(), 0, r).unwrap();
        let down_down = r.product_index(&[]).unwrap();
        let up_down = r.product_index(&[0]).unwrap();
        assert_eq!((down_down, up_down), (3, 1));
        let col = plus.matrix().column(down_down);
        for (i, v) in col.iter().enumerate() {
            assert_eq!(*v, if i == up_down { c(1.0, 0.0) } else { c(0.0, 0.0) });
        }
    }

    #[test]
    fn embed_errors() {
        assert!(matches!(embed(&pauli::x(), 2, reg(2)), Err(Error::QubitOutOfRange { .. })));
        let big = CMatrix::identity(3, 3);
        assert!(matches!(embed(&big, 0, reg(2)), Err(Error::NotSingleQubit(3, 3))));
    }

    #[test]
    fn heisenberg_two_qubits() {
        let h = heisenberg_term(0, 1, reg(2)).unwrap();
        let mut expected = CMatrix::zeros(4, 4);
        expected[(0, 0)] = c(1.0, 0.0);
        expected[(1, 1)] = c(-1.0, 0.0);
        expected[(2, 2)] = c(-1.0, 0.0);
        expected[(3, 3)] = c(1.0, 0.0);
        expected[(1, 2)] = c(2.0, 0.0);
        expected[(2, 1)] = c(2.0, 0.0);
        assert!(max_abs_diff(h.matrix(), &expected) < 1e-15);
        assert_eq!(h.trace(), c(0.0, 0.0));
        assert_eq!(h.hermiticity_residual(), 0.0);
        assert!(matches!(heisenberg_term(1, 1, reg(2)), Err(Error::SameQubit(1))));
    }

    #[test]
    fn heisenberg_is_symmetric_in_its_qubits() {
        let r = reg(4);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(heisenberg_term(i, j, r).unwrap(), heisenberg_term(j, i, r).unwrap());
                }
            }
        }
    }

    #[test]
    fn pauli_algebra() {
        let r = reg(1);
        let x = embed(&pauli::x(), 0, r).unwrap();
        let y = embed(&pauli::y(), 0, r).unwrap();
        let z = embed(&pauli::z(), 0, r).unwrap();
        let comm = commutator(&x, &y).unwrap();
        assert!(max_abs_diff(comm.matrix(), z.scale(c(0.0, 2.0)).matrix()) < 1e-15);
        assert_eq!(commutator(&x, &x).unwrap(), Op::zeros(r));
        assert_eq!(anticommutator(&x, &x).unwrap(), Op::identity(r).scale(c(2.0, 0.0)));
        let other = Op::identity(reg(2));
        assert!(matches!(commutator(&x, &other), Err(Error::RegisterMismatch)));
    }

    #[test]
    fn embedded_paulis_are_involutions() {
        let r = Register::new(2, 1, true).unwrap();
        for q in 0..r.n_qubits() {
            for p in [pauli::x(), pauli::y(), pauli::z()] {
                let e = embed(&p, q, r).unwrap();
                assert_eq!(e.mul(&e).unwrap(), Op::identity(r));
            }
        }
    }

    fn arb_2x2() -> impl Strategy<Value = CMatrix> {
        proptest::collection::vec(-1.0f64..1.0, 8).prop_map(|v| {
            CMatrix::from_row_slice(2, 2, &[c(v[0], v[1]), c(v[2], v[3]), c(v[4], v[5]), c(v[6], v[7])])
        })
    }

    proptest! {
        #[test]
        fn distinct_qubit_embeddings_commute(a in arb_2x2(), b in arb_2x2(), k in 0usize..3, m in 0usize..3) {
            prop_assume!(k != m);
            let r = reg(3);
            let ea = embed(&a, k, r).unwrap();
            let eb = embed(&b, m, r).unwrap();
            let diff = max_abs_diff(ea.mul(&eb).unwrap().matrix(), eb.mul(&ea).unwrap().matrix());
            prop_assert!(diff < 1e-14);
        }
    }
}
