//! Mild-form evolution on the torus: the monotone lower/upper iteration,
//! a Picard cross-check, free transport and the existence-time schedule.

mod ks;
mod schedule;
mod transport;

pub use ks::{
    solve_classical, solve_relativistic, BeginningReport, Evolution, Mode, SandwichCheck, SolveReport, Solver,
    SolverConfig,
};
pub use schedule::{estimate_d, loss_bound_constant, Schedule};
pub use transport::{advect, Interpolation, ShiftStencil};
