//! Value added and annualized net value of candidate battery fleets.
//!
//! `cargo run --release --example battery_sizing`

use gridforge::analytics::{sizing_study, SizingConfig};
use gridforge::demo::demo_small;
use gridforge::solver::SolverConfig;

fn main() -> gridforge::Result<()> {
    let sizing = SizingConfig {
        fleet_sizes: vec![0, 1, 2, 4],
        cycle_limits: vec![1.0],
        rates: vec![0.07],
        ..SizingConfig::default()
    };
    let table = sizing_study(&[demo_small()], &sizing, &SolverConfig::default())?;
    println!("baseline theta per day: {:?}", table.baseline_objectives);
    println!("{:<14} {:>5} {:>12} {:>12} {:>12}", "unit", "count", "VA raw", "VA corr", "net");
    for c in &table.cells {
        match &c.value {
            Some(v) => println!(
                "{:<14} {:>5} {:>12.1} {:>12.1} {:>12.1}",
                c.technology, c.units, v.value_added_raw, v.value_added_corrected, v.net_value
            ),
            None => println!("{:<14} {:>5}  skipped: {}", c.technology, c.units, c.note.as_deref().unwrap_or("")),
        }
    }
    table.write_csv(std::io::stdout())?;
    Ok(())
}
