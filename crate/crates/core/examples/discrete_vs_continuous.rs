//! Solve one day with discrete DVFS levels, then again with the continuous
//! range, and compare the worst-case profit and the chosen frequencies.
//!
//! `cargo run --release --example discrete_vs_continuous`

use gridforge::demo::demo_small;
use gridforge::model::DvfsMode;
use gridforge::solver::SolverConfig;
use gridforge::solve_instance;

fn main() -> gridforge::Result<()> {
    let cfg = SolverConfig::default();
    let discrete = demo_small();
    let mut continuous = discrete.clone();
    continuous.dvfs.mode = DvfsMode::Continuous;

    for (label, spec) in [("discrete", &discrete), ("continuous", &continuous)] {
        let out = solve_instance(spec, &cfg)?;
        let r = &out.report;
        println!(
            "{label:<10} theta {:>12.2?}  nodes {:>4}  binaries {:>3}  {:.2} s",
            r.objective, r.nodes, r.model.binaries, r.elapsed_s
        );
        if let Some(s) = &out.schedule {
            let a: Vec<String> = s.dvfs.iter().map(|x| format!("{x:.3}")).collect();
            println!("           a = [{}]", a.join(", "));
        }
    }
    Ok(())
}
