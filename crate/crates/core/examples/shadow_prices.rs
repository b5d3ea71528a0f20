//! Shadow prices of the interconnection rows, read from the fixed-integer
//! re-solve of the optimal schedule. The cap is tightened so it binds.
//!
//! `cargo run --release --example shadow_prices`

use gridforge::analytics::{aggregate_duals, Axis};
use gridforge::demo::demo_small;
use gridforge::solver::SolverConfig;
use gridforge::solve_instance;

fn main() -> gridforge::Result<()> {
    let cfg = SolverConfig::default();
    let mut spec = demo_small();
    spec.limits.load_cap *= 0.9;
    let out = solve_instance(&spec, &cfg)?;
    let lp = out.shadow_prices(&cfg)?;
    if lp.degenerate {
        println!("note: degenerate basis, duals are one valid choice among several");
    }
    let ir = &out.model;
    for i in ir.row_family("load") {
        let y = lp.duals[i];
        if y.abs() > 1e-9 {
            println!("{:<14} {:>10.3}", ir.constraints[i].name, y);
        }
    }
    println!("d theta / d load_cap ~ {:.3}", aggregate_duals(ir, &lp.duals, Axis::LoadCap)?);
    println!("d theta / d ramp_cap ~ {:.3}", aggregate_duals(ir, &lp.duals, Axis::RampCap)?);
    Ok(())
}
