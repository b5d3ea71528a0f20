//! Solve the bundled 24-hour demo day and print the worst-case breakdown.
//!
//! `cargo run --release --example solve_demo [small]`

use gridforge::demo::{demo_day, demo_small};
use gridforge::solver::SolverConfig;
use gridforge::solve_instance;

fn main() -> gridforge::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRIDFORGE_LOG", "info")).init();
    let spec = match std::env::args().nth(1).as_deref() {
        Some("small") => demo_small(),
        _ => demo_day(),
    };
    let out = solve_instance(&spec, &SolverConfig::default())?;
    let r = &out.report;
    println!(
        "status {:?}  theta {:?}  bound {:?}  gap {:?}",
        r.status, r.objective, r.bound, r.gap
    );
    println!(
        "{} vars, {} rows, {} binaries; {} nodes, {} LP iterations, {:.2} s",
        r.model.variables, r.model.constraints, r.model.binaries, r.nodes, r.lp_iterations, r.elapsed_s
    );
    if let (Some(b), Some(s)) = (&r.breakdown, &out.schedule) {
        println!("reserve revenue {:.1}, FRP revenue {:.1}, job cost {:.1}", b.reserve_revenue, b.frp_revenue, b.job_cost);
        for (k, p) in b.per_scenario_profit.iter().enumerate() {
            println!("  scenario {:>2}: profit {:>12.2}  energy {:>10.2}", k + 1, p, b.energy_cost_s[k]);
        }
        println!("worst scenario {}", b.worst_scenario);
        println!("dvfs {:?}", s.dvfs);
        println!("unfinished {:?}", s.unfinished);
    }
    println!("in-sample violations: {}", r.in_sample_violations);
    Ok(())
}
