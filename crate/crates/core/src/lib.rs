//! Joint access/backhaul planning for mmWave small-cell networks: pick which
//! small-cell base stations (SCBSs) and backhaul aggregation nodes (BANs) to
//! deploy, trading deployment cost against uncovered subareas.

pub mod backhaul;
pub mod cli;
pub mod driver;
pub mod error;
pub mod instance;
pub mod lagrangian;
pub mod model;
pub mod oracle;
pub mod pareto;
pub mod radio;
pub mod report;
pub mod tabu;

pub use driver::{solve, solve_scenario, solve_single_tabu, solve_single_tabu_scenario, SolverConfig, SolverReport};
pub use error::{Error, Result};
pub use instance::Instance;
