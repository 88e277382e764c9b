//! Coordinate subspaces of a register.
//!
//! A [`Basis`] is an ordered subset of computational basis states. Density
//! matrices and compiled generators can live on such a subset when the
//! dynamics never leaves it, e.g. the zero- and one-excitation manifold of a
//! network without thermal pumping.

use crate::operator::Register;

const ABSENT: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct Basis {
    register: Register,
    states: Vec<usize>,
    lookup: Vec<u32>,
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        self.register == other.register && self.states == other.states
    }
}

impl Basis {
    pub fn full(register: Register) -> Self {
        let dim = register.dim();
        Self { register, states: (0..dim).collect(), lookup: (0..dim as u32).collect() }
    }

    /// Subset of basis states; duplicates are removed and the order is ascending.
    pub fn from_states(register: Register, mut states: Vec<usize>) -> Self {
        states.sort_unstable();
        states.dedup();
        states.retain(|&s| s < register.dim());
        let mut lookup = vec![ABSENT; register.dim()];
        for (i, &s) in states.iter().enumerate() {
            lookup[s] = i as u32;
        }
        Self { register, states, lookup }
    }

    /// All states with at most `max` excited qubits.
    pub fn excitation_truncated(register: Register, max: u32) -> Self {
        let states = (0..register.dim()).filter(|&s| register.excitations(s) <= max).collect();
        Self::from_states(register, states)
    }

    pub fn register(&self) -> Register {
        self.register
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.states.len() == self.register.dim()
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    /// Full-register index of the `i`-th basis element.
    pub fn state(&self, i: usize) -> usize {
        self.states[i]
    }

    /// Local position of a full-register state, if it belongs to the subset.
    pub fn position(&self, state: usize) -> Option<usize> {
        match self.lookup.get(state) {
            Some(&p) if p != ABSENT => Some(p as usize),
            _ => None,
        }
    }

    pub fn contains(&self, state: usize) -> bool {
        self.position(state).is_some()
    }

    /// Excitation count of each local basis element.
    pub fn excitations(&self) -> Vec<u32> {
        self.states.iter().map(|&s| self.register.excitations(s)).collect()
    }

    pub fn is_subset_of(&self, other: &Basis) -> bool {
        self.register == other.register && self.states.iter().all(|&s| other.contains(s))
    }
}
