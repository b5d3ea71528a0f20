mod build;
mod ir;
mod profit;
mod schedule;

pub use build::{build_continuous_model, build_discrete_model, build_model};
pub use ir::{name, Constraint, ModelIR, Sense, Variable};
pub use profit::{job_cost, profit_breakdown, scenario_profit, ProfitBreakdown, ScenarioProfit};
pub(crate) use schedule::{compute_power, throughput};
pub use schedule::{extract_schedule, Schedule};
