//! Shor period finding on the multiverse-network simulator: problem sizing,
//! `.qudot` program generation, continued-fraction period recovery and
//! success statistics.

pub mod arith;
mod period;
mod plan;
mod report;
mod run;

pub use period::{best_approximation, convergents, factors_from_period, recover_period, PeriodPolicy};
pub use plan::{generate_program, plan_instance, Plan, ShorError, ShorInstance, SizingPolicy};
pub use report::{classify_and_report, classify_counts, ReportRow, ShorReport};
pub use run::{
    dense_period_finding_state, factor, period_finding_state, run_direct, run_program, FactorError, FactorOptions,
    Factored,
};
