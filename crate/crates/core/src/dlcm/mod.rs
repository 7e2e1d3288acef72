//! Discrete Laplacian cell mechanics on a hexagonal population lattice.

pub mod cholesky;
pub mod grid;
pub mod growth;
pub mod laplacian;
pub mod lattice;

pub use grid::{CellId, EventKind, PopulationEvent, PopulationGrid, CAPACITY};
pub use growth::{
    movement_rates, simulate_growth, EventLog, GrowthOutcome, GrowthParams, GrowthStop,
    Movement, MovementFactors,
};
pub use laplacian::{assemble_laplacian, solve_nutrient, solve_pressure, LaplaceSolver, PressureField};
pub use lattice::Lattice;
