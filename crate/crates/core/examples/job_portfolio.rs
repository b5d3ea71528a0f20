//! Load a job portfolio from CSV, attach it to a day and report how much of
//! each job the schedule completes.
//!
//! `cargo run --release --example job_portfolio [jobs.csv]`

use gridforge::demo::{appendix_a_portfolio, demo_day};
use gridforge::model::{load_job_portfolio, load_job_portfolio_path, total_work, write_job_portfolio};
use gridforge::solver::SolverConfig;
use gridforge::solve_instance;

fn main() -> gridforge::Result<()> {
    let jobs = match std::env::args().nth(1) {
        Some(path) => load_job_portfolio_path(path)?,
        None => {
            // round trip through CSV
            let mut buf = Vec::new();
            write_job_portfolio(&appendix_a_portfolio(), &mut buf)?;
            print!("{}", String::from_utf8_lossy(&buf));
            load_job_portfolio(buf.as_slice())?
        }
    };
    let mut spec = demo_day();
    let horizon = spec.periods();
    spec.jobs = jobs.into_iter().filter(|j| j.deadline <= horizon).collect();
    println!("{} jobs fit the {horizon}-period day, {:.1} MWh of work", spec.jobs.len(), total_work(&spec.jobs));

    let out = solve_instance(&spec, &SolverConfig::default())?;
    if let Some(s) = &out.schedule {
        for (j, id) in s.job_ids.iter().enumerate() {
            let served: f64 = s.effective_rates[j].iter().sum::<f64>() * spec.dt();
            println!("{id:<18} served {served:>8.2}  unfinished {:>8.2}", s.unfinished[j]);
        }
    }
    Ok(())
}
