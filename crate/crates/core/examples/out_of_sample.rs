//! Fix a day-ahead schedule and replay it against fresh scenario draws.
//!
//! `cargo run --release --example out_of_sample [samples]`

use gridforge::demo::{demo_small, demo_small_generator};
use gridforge::evaluation::{oos_evaluate, oos_traces};
use gridforge::solver::SolverConfig;
use gridforge::{solve_instance, Error};

fn main() -> gridforge::Result<()> {
    let samples: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let spec = demo_small();
    let out = solve_instance(&spec, &SolverConfig::default())?;
    let schedule = out.schedule.ok_or_else(|| Error::Domain("no schedule to evaluate".into()))?;

    let gen = demo_small_generator();
    let r = oos_evaluate(&schedule, &spec, &gen, samples)?;
    println!("{} samples x {} periods ({}, seed {})", r.sample_count, r.periods, r.rng_algorithm, r.seed);
    println!("load  period rate {:.4}  incidence {:.4}  max excess {:.3} MW", r.period_violation_rate_load, r.scenario_incidence_load, r.max_exceedance_load);
    println!("ramp  period rate {:.4}  incidence {:.4}  max excess {:.3} MW", r.period_violation_rate_ramp, r.scenario_incidence_ramp, r.max_exceedance_ramp);
    println!("soc   period rate {:.4}", r.soc_violation_rate);

    let traces = oos_traces(&schedule, &spec, &gen, 3)?;
    for (k, tr) in traces.iter().enumerate() {
        println!("sample {}: {} violation events", k + 1, tr.violations.len());
    }
    Ok(())
}
