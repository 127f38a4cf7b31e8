use serde::Serialize;

use crate::solver::SolveReport;

/// Largest allowed `gap_{n+1} / gap_n` once `n >= 2`.
pub const CONTRACTION: f64 = 0.9;
/// Relative gap to reach within [`MAX_ITERATIONS`].
pub const TARGET: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 25;
/// Sandwich slack relative to `max u0`.
pub const SLACK: f64 = 1e-12;

/// Monotone-iteration diagnostics of one Kaniel–Shinbrot solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SchemeCheck {
    pub iterations: usize,
    pub sandwich_worst: f64,
    /// Largest gap ratio from iteration 2 on.
    pub worst_contraction: f64,
    /// First iteration with `gap_n <= 1e-8 gap_0`.
    pub iterations_to_target: Option<usize>,
}

impl SchemeCheck {
    pub fn of(report: &SolveReport) -> Self {
        let (worst_contraction, iterations_to_target) = history_stats(&report.gap_history);
        SchemeCheck { iterations: report.iterations, sandwich_worst: report.sandwich_worst, worst_contraction, iterations_to_target }
    }

    pub fn passes(&self) -> bool {
        self.sandwich_worst <= SLACK
            && self.worst_contraction <= CONTRACTION
            && self.iterations_to_target.is_some_and(|n| n <= MAX_ITERATIONS)
    }
}

fn history_stats(h: &[f64]) -> (f64, Option<usize>) {
    let g0 = h.first().copied().unwrap_or(0.0);
    let worst = h.windows(2).skip(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    (worst, h.iter().position(|g| *g <= TARGET * g0))
}
