//! Write the optimization model in LP text format for an external solver.
//!
//! `cargo run --release --example export_lp > model.lp`

use gridforge::demo::demo_small;
use gridforge::formulation::build_model;

fn main() -> gridforge::Result<()> {
    let ir = build_model(&demo_small())?;
    eprintln!("{} variables, {} constraints, {} integer", ir.num_vars(), ir.num_constraints(), ir.num_integer());
    print!("{}", ir.to_lp_text());
    Ok(())
}
