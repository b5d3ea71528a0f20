//! Sweep the interconnection load cap and compare the finite-difference
//! marginal value of capacity with the aggregated shadow price.
//!
//! `cargo run --release --example interconnection_sweep`

use gridforge::analytics::{fd_sensitivity, Axis};
use gridforge::demo::demo_small;
use gridforge::solver::SolverConfig;

fn main() -> gridforge::Result<()> {
    let base = demo_small();
    let c = base.limits.load_cap;
    let grid: Vec<f64> = [0.85, 0.9, 0.95, 1.0, 1.05].iter().map(|f| f * c).collect();
    let report = fd_sensitivity(&[base], Axis::LoadCap, &grid, 0.01 * c, &SolverConfig::default())?;
    print!("{}", report.to_text());
    Ok(())
}
