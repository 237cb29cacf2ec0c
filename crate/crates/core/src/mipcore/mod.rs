//! Model representation, the solver seam and the monolithic formulation.

pub mod deterministic;
pub mod model;
pub mod solver;

pub use deterministic::{
    build_deterministic_equivalent, deterministic_equivalent, extract_first_stage, first_stage_columns, fix_first_stage, DeOptions,
    FirstStageColumns,
};
pub use model::{LinearModel, Row, RowSense, RowTag, VarKind, VarTag, Variable};
pub use solver::{HighsOracle, LpSession, SolveOptions, SolveResult, SolveStatus, SolverOracle};
