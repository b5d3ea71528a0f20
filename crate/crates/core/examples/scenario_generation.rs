//! Draw seeded scenarios, build their robust envelope and show that the same
//! seed reproduces the same draws.
//!
//! `cargo run --release --example scenario_generation [seed]`

use gridforge::demo::demo_day_generator;
use gridforge::model::TimeGrid;
use gridforge::scenario::{build_envelope, generate_scenarios, RNG_ALGORITHM};

fn main() -> gridforge::Result<()> {
    let mut gen = demo_day_generator();
    if let Some(seed) = std::env::args().nth(1).and_then(|s| s.parse().ok()) {
        gen.seed = seed;
    }
    let grid = TimeGrid::hourly(gen.base_load.len());
    let cap = 112.0;
    let raw = generate_scenarios(&gen, &grid, cap)?;
    assert_eq!(raw, generate_scenarios(&gen, &grid, cap)?);
    println!("{} scenarios, {RNG_ALGORITHM}, seed {}", raw.len(), gen.seed);

    let env = build_envelope(raw.clone(), 0.02, cap)?;
    println!("{:>3} {:>9} {:>9} {:>9}", "t", "min", "max", "envelope");
    for t in 0..grid.periods {
        let loads = raw.iter().map(|s| s.fixed_load[t]);
        let lo = loads.clone().fold(f64::INFINITY, f64::min);
        let hi = loads.fold(f64::NEG_INFINITY, f64::max);
        println!("{:>3} {lo:>9.2} {hi:>9.2} {:>9.2}", t + 1, env[0].fixed_envelope[t]);
    }
    Ok(())
}
