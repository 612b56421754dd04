//! Circle packing into a strip of fixed width (or a disc) with the open
//! dimension minimized: a penalty formulation solved by L-BFGS, embedded in
//! a swap-based tabu search and an iterated local search.

pub mod driver;
pub mod error;
pub mod finisher;
pub mod io;
pub mod minimizer;
pub mod model;
pub mod penalty;
pub mod perturb;
pub mod svg;
pub mod tabu;
pub mod trace;

pub use driver::{default_dimension, finish_run, solve, solve_and_finish, Mode, RunResult, SolverParams};
pub use error::{Error, Result};
pub use finisher::{round_report, FinishConfig, Finished};
pub use io::{parse_instance, parse_solution, write_solution, Solution};
pub use minimizer::MinimizerConfig;
pub use model::{
    is_feasible, make_instance, random_layout, Circle, ContainerSpec, FeasibilityTolerance, Instance, Layout,
    Point,
};
pub use penalty::{evaluate, PenaltyReport};
pub use perturb::PerturbConfig;
pub use tabu::{TabuConfig, TabuOutcome};
pub use trace::{Event, NoTrace, Phase, TraceSink};
