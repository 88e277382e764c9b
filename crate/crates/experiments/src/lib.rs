//! Scenario sweeps over the enaqt simulator, built-in figure presets and
//! CSV/SVG emission.

pub mod emit;
pub mod error;
pub mod presets;
pub mod scenario;
pub mod sweep;

pub use emit::{emit_all, emit_csv, emit_distances_csv, emit_metadata, emit_svg};
pub use error::{ExperimentError, Result};
pub use presets::{list_presets, preset};
pub use scenario::{
    AncillaConfig, ArchetypeConfig, Axis, AxisParam, NetworkConfig, Observable, Outputs, PairKind, PlotSpec,
    Scenario, SteadyMode, Study, WitnessConfig, COLUMNS,
};
pub use sweep::{run_scenario, run_study, DistanceRow, InvariantSummary, Row, SweepResult};
