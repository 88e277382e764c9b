//! Excitation transport across open qubit networks.
//!
//! A network of system qubits (optionally coupled to ancilla qubits) carries a
//! single seeded excitation towards a sink qubit. The joint density matrix
//! evolves under a Lindblad generator with dephasing, thermal damping, ancilla
//! damping, sink absorption and optional incoherent system–ancilla exchange.
//!
//! Module map:
//!
//! * [`topology`]: network configurations and the four archetypes.
//! * [`operator`]: register layout, Pauli embeddings, dense operator algebra.
//! * [`generator`]: model parameters and the assembled Lindblad generator.
//! * [`dynamics`]: density matrices, adaptive propagation and steady states.
//! * [`observables`]: sink population, coherence, trace distance, memory witness.

pub mod basis;
pub mod dynamics;
pub mod error;
pub mod generator;
pub mod observables;
pub mod operator;
mod sparse;
pub mod topology;

pub use basis::Basis;
pub use dynamics::{
    asymptotic_state, evolve, evolve_snapshots, evolve_with, initial_state, steady_state,
    DensityMatrix, IntegratorOptions, Record, SteadyStateMethod, SteadyStateOptions, Trajectory,
};
pub use error::{Error, Result};
pub use generator::{
    build_generator, build_hamiltonian, Channel, CouplingMode, Generator, JumpTerm, ModelParams,
    ThermalOccupation,
};
pub use observables::{
    coherence_l1, coherence_l1_scoped, nonmarkov_witness, partial_trace, sep, sepi,
    trace_distance, CoherenceScope, Probe, WitnessPair, WitnessResult,
};
pub use operator::{CMatrix, Op, Register, C64};
pub use sparse::SparseMatrix;
pub use topology::{build_archetype, has_critical_link, path_count, AncillaMode, AncillaWiring, Archetype, NetworkSpec};
