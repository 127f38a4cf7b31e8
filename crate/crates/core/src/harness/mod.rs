//! Experiment drivers: light-speed sweeps, rate verifiers for the
//! kinematic estimates, quadrature studies and the Newtonian-limit
//! experiment. Every random draw is fixed by the configured seed.

mod balance;
mod config;
mod fit;
mod involution;
mod limit;
mod pointwise;
mod scheme;

pub use config::{
    BalanceSection, Equation, GridSection, InvolutionSection, OutputSection, QuadratureSection, ScheduleSection,
    SolveSection, SweepConfig, SweepSection,
};
pub use fit::RateFit;
pub use pointwise::{
    conservation_check, gap_sweep, kernel_check, loss_sweep, sample_ball, sample_direction, sample_triples,
    verify_lemma1, ConservationReport, Estimate, KernelReport, Lemma1Report, SweepPoint,
};
pub use involution::{
    involution_discrepancy, verify_involution_measure, InvolutionLevel, InvolutionReport, InvolutionStudy, TestFunction,
};
pub use balance::{
    balance_level, detailed_balance_study, equilibrium, equilibrium_stationarity, interpolation_defect_bound,
    BalanceLevel, BalanceReport, BalanceStudy, StationarityReport, StationarityRun,
};
pub use limit::{newtonian_limit_experiment, LimitReport, LimitRow, LimitStatus, ResolutionCheck};
pub use scheme::SchemeCheck;
