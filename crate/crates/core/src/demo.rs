//! Bundled instances: the two demos, the reference job portfolio and a
//! seeded random-instance generator for tests and experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    BessSpec, CostWeights, DvfsConfig, DvfsMode, InstanceSpec, InterconnectionLimits, JobSpec, MarketPrices,
    TimeGrid,
};
use crate::scenario::{generate_scenarios, GeneratorConfig};

fn job(id: &str, release: usize, deadline: usize, work: f64, max_rate: f64, weight: f64) -> JobSpec {
    JobSpec {
        id: id.into(),
        release,
        deadline,
        work,
        max_rate,
        weight,
    }
}

/// The nine aggregate job classes of the 100 MW reference site (340 MWh).
pub fn appendix_a_portfolio() -> Vec<JobSpec> {
    vec![
        job("batch_analytics_1", 1, 8, 30.0, 6.0, 0.8),
        job("hpc_simulation", 3, 14, 60.0, 10.0, 2.0),
        job("ml_training_large", 6, 20, 70.0, 9.0, 2.5),
        job("data_backup", 1, 24, 25.0, 5.0, 0.5),
        job("batch_analytics_2", 12, 20, 30.0, 7.0, 1.0),
        job("ml_training_small", 10, 18, 20.0, 5.0, 1.5),
        job("hpc_evening", 16, 24, 40.0, 10.0, 1.8),
        job("data_processing", 1, 12, 35.0, 4.0, 2.2),
        job("preemptable", 1, 24, 30.0, 5.0, 0.1),
    ]
}

/// Cost weights of the reference case study.
pub fn reference_weights() -> CostWeights {
    CostWeights {
        c_dvfs: 1000.0,
        c_unfinished: 2000.0,
        c_tardy: 100.0,
        lambda_job: 1.0,
        lambda_deg: 1.0,
    }
}

/// The 36 MWh / 12 MW battery of the representative dispatch, 60% initial
/// and terminal state of charge.
pub fn reference_bess() -> BessSpec {
    BessSpec {
        energy_cap: 36.0,
        charge_cap: 12.0,
        discharge_cap: 12.0,
        eta_charge: 0.95,
        eta_discharge: 0.95,
        soc_min: 0.1,
        soc_max: 0.9,
        soc_init: 0.6,
        soc_terminal: Some(0.6),
        cycle_budget: 1.0,
        degradation_cost: 45.0,
    }
}

/// Commercial unit used by the sizing study.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UnitSpec {
    pub name: String,
    pub power_mw: f64,
    pub energy_mwh: f64,
    pub unit_cost: f64,
    pub round_trip_efficiency: f64,
}

impl UnitSpec {
    pub fn megapack_3() -> Self {
        UnitSpec {
            name: "megapack_3".into(),
            power_mw: 1.25,
            energy_mwh: 5.0,
            unit_cost: 1.0e6,
            round_trip_efficiency: 0.91,
        }
    }

    pub fn megapack_2xl() -> Self {
        UnitSpec {
            name: "megapack_2xl".into(),
            power_mw: 1.9,
            energy_mwh: 3.9,
            unit_cost: 1.2e6,
            round_trip_efficiency: 0.92,
        }
    }

    /// Battery parameters of one unit; the round trip is split evenly.
    pub fn to_bess(&self, template: &BessSpec) -> BessSpec {
        let eta = self.round_trip_efficiency.sqrt();
        BessSpec {
            energy_cap: self.energy_mwh,
            charge_cap: self.power_mw,
            discharge_cap: self.power_mw,
            eta_charge: eta,
            eta_discharge: eta,
            ..template.clone()
        }
    }
}

fn day_energy_prices() -> Vec<f64> {
    vec![
        32.0, 29.0, 27.0, 26.0, 27.0, 31.0, 38.0, 45.0, 42.0, 36.0, 30.0, 26.0, 24.0, 23.0, 25.0, 30.0, 40.0, 58.0,
        75.0, 82.0, 70.0, 55.0, 44.0, 37.0,
    ]
}

fn day_base_load() -> Vec<f64> {
    vec![
        70.0, 69.0, 68.5, 68.0, 68.5, 69.5, 71.0, 73.0, 75.0, 76.5, 77.5, 78.5, 79.5, 80.0, 80.0, 79.5, 78.5, 77.5,
        76.5, 75.5, 74.0, 72.5, 71.5, 70.5,
    ]
}

/// Generator behind `demo_day`.
pub fn demo_day_generator() -> GeneratorConfig {
    GeneratorConfig {
        seed: 20_240_601,
        scenario_count: 10,
        base_load: day_base_load(),
        load_noise_rel: 0.02,
        deploy_mean_reserve: 0.1,
        deploy_mean_frp_up: 0.2,
        deploy_mean_frp_down: 0.2,
        envelope_margin: 0.01,
        concentration: 5.0,
        vary_load: true,
    }
}

/// Desk-scale day: 24 hourly periods, the reference job portfolio, 10
/// scenarios, three DVFS levels and the reference battery.
pub fn demo_day() -> InstanceSpec {
    let t = 24;
    let grid = TimeGrid::hourly(t);
    let dc_power_cap = 112.0;
    let gen = demo_day_generator();
    let scenarios = generate_scenarios(&gen, &grid, dc_power_cap).expect("demo generator is valid");
    let energy = day_energy_prices();
    InstanceSpec {
        grid,
        limits: InterconnectionLimits {
            load_cap: 100.0,
            ramp_cap: 15.0,
            initial_net_load: None,
        },
        jobs: appendix_a_portfolio(),
        dvfs: DvfsConfig::discrete_even(0.95, 1.05, 3, 1.0, 0.35),
        bess: reference_bess(),
        bess_units: 1,
        prices: MarketPrices {
            reserve: energy.iter().map(|e| (0.25 * e).round()).collect(),
            frp_up: energy.iter().map(|e| (0.08 * e).round()).collect(),
            frp_down: energy.iter().map(|e| (0.06 * e).round()).collect(),
            energy,
        },
        weights: reference_weights(),
        scenarios,
        dc_power_cap,
    }
}

/// Generator behind `demo_small`.
pub fn demo_small_generator() -> GeneratorConfig {
    GeneratorConfig {
        seed: 42,
        scenario_count: 3,
        base_load: vec![40.0, 42.0, 45.0, 47.0, 44.0, 41.0],
        load_noise_rel: 0.03,
        deploy_mean_reserve: 0.2,
        deploy_mean_frp_up: 0.2,
        deploy_mean_frp_down: 0.2,
        envelope_margin: 0.01,
        concentration: 5.0,
        vary_load: true,
    }
}

/// Six-period instance with two jobs, three scenarios and three DVFS levels;
/// small enough to check by enumeration.
pub fn demo_small() -> InstanceSpec {
    let grid = TimeGrid::hourly(6);
    let dc_power_cap = 60.0;
    let scenarios = generate_scenarios(&demo_small_generator(), &grid, dc_power_cap).expect("demo generator is valid");
    InstanceSpec {
        grid,
        limits: InterconnectionLimits {
            load_cap: 56.0,
            ramp_cap: 10.0,
            initial_net_load: None,
        },
        jobs: vec![job("render", 1, 4, 12.0, 5.0, 1.0), job("etl", 2, 6, 10.0, 4.0, 1.5)],
        dvfs: DvfsConfig::discrete_even(0.95, 1.05, 3, 1.0, 0.35),
        bess: BessSpec {
            energy_cap: 8.0,
            charge_cap: 4.0,
            discharge_cap: 4.0,
            eta_charge: 0.95,
            eta_discharge: 0.95,
            soc_min: 0.1,
            soc_max: 0.9,
            soc_init: 0.5,
            soc_terminal: Some(0.5),
            cycle_budget: 1.0,
            degradation_cost: 45.0,
        },
        bess_units: 1,
        prices: MarketPrices {
            energy: vec![30.0, 28.0, 35.0, 60.0, 70.0, 45.0],
            reserve: vec![6.0, 6.0, 8.0, 12.0, 14.0, 9.0],
            frp_up: vec![3.0, 3.0, 3.0, 5.0, 6.0, 4.0],
            frp_down: vec![2.0, 2.0, 2.0, 3.0, 3.0, 2.0],
        },
        weights: reference_weights(),
        scenarios,
        dc_power_cap,
    }
}

/// Shape of a random instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomShape {
    pub periods: usize,
    pub jobs: usize,
    pub scenarios: usize,
    pub mode: DvfsMode,
    /// Number of DVFS levels in discrete mode (reference always included).
    pub levels: usize,
    pub bess: bool,
}

impl RandomShape {
    /// Binary count of the discrete model of this shape.
    pub fn binaries(&self) -> usize {
        let z = if self.mode == DvfsMode::Discrete { self.levels * self.periods } else { 0 };
        z + if self.bess { 2 * self.periods } else { 0 }
    }
}

/// A feasible random instance of the given shape. The base load is a smooth
/// walk and limits leave enough room that the idle schedule is feasible.
pub fn random_instance(seed: u64, shape: RandomShape) -> InstanceSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_len = shape.periods.max(1);
    let grid = TimeGrid::hourly(t_len);

    let mut base = Vec::with_capacity(t_len);
    let mut level: f64 = rng.random_range(20.0..40.0);
    for _ in 0..t_len {
        base.push(level);
        level = (level + rng.random_range(-3.0..3.0)).clamp(15.0, 45.0);
    }
    let peak = base.iter().copied().fold(0.0, f64::max);
    let dc_power_cap = peak * 1.15 + rng.random_range(5.0..15.0);

    let ao = 1.0;
    let phi = rng.random_range(0.2..0.5);
    let dvfs = match shape.mode {
        DvfsMode::Discrete => {
            let candidates = [0.9, 1.1, 0.95, 1.05];
            let mut levels = vec![ao];
            for &c in candidates.iter().take(shape.levels.saturating_sub(1)) {
                levels.push(c);
            }
            levels.sort_by(f64::total_cmp);
            DvfsConfig {
                mode: DvfsMode::Discrete,
                bounds: [levels[0], levels[levels.len() - 1]],
                levels,
                reference: ao,
                fixed_sensitive_fraction: phi,
            }
        }
        mode => DvfsConfig {
            mode,
            levels: vec![],
            bounds: [0.9, 1.1],
            reference: ao,
            fixed_sensitive_fraction: phi,
        },
    };

    let jobs = (0..shape.jobs)
        .map(|k| {
            let release = rng.random_range(1..=t_len);
            let deadline = rng.random_range(release..=t_len);
            let max_rate = rng.random_range(1.0..6.0);
            let window = (t_len - release + 1) as f64;
            JobSpec {
                id: format!("job{}", k + 1),
                release,
                deadline,
                work: rng.random_range(0.0..(max_rate * window * 1.1)),
                max_rate,
                weight: rng.random_range(0.1..2.0),
            }
        })
        .collect();

    let bess = if shape.bess {
        let init = rng.random_range(0.3..0.7);
        BessSpec {
            energy_cap: rng.random_range(5.0..15.0),
            charge_cap: rng.random_range(2.0..6.0),
            discharge_cap: rng.random_range(2.0..6.0),
            eta_charge: rng.random_range(0.88..0.99),
            eta_discharge: rng.random_range(0.88..0.99),
            soc_min: 0.1,
            soc_max: 0.9,
            soc_init: init,
            soc_terminal: if rng.random_bool(0.5) { Some(init - 0.1) } else { None },
            cycle_budget: rng.random_range(0.3..1.5),
            degradation_cost: rng.random_range(5.0..50.0),
        }
    } else {
        BessSpec::none()
    };

    let energy: Vec<f64> = (0..t_len).map(|_| rng.random_range(15.0..90.0)).collect();
    let prices = MarketPrices {
        reserve: (0..t_len).map(|_| rng.random_range(0.0..12.0)).collect(),
        frp_up: (0..t_len).map(|_| rng.random_range(0.0..8.0)).collect(),
        frp_down: (0..t_len).map(|_| rng.random_range(0.0..8.0)).collect(),
        energy,
    };
    let weights = CostWeights {
        c_dvfs: rng.random_range(50.0..500.0),
        c_unfinished: rng.random_range(100.0..300.0),
        c_tardy: rng.random_range(5.0..40.0),
        lambda_job: 1.0,
        lambda_deg: 1.0,
    };

    let gen = GeneratorConfig {
        seed: rng.random(),
        scenario_count: shape.scenarios.max(1),
        base_load: base,
        load_noise_rel: 0.04,
        deploy_mean_reserve: rng.random_range(0.0..0.4),
        deploy_mean_frp_up: rng.random_range(0.0..0.4),
        deploy_mean_frp_down: rng.random_range(0.0..0.4),
        envelope_margin: 0.01,
        concentration: 5.0,
        vary_load: true,
    };
    let scenarios = generate_scenarios(&gen, &grid, dc_power_cap).expect("generator config is valid");
    let env_peak = scenarios[0].fixed_envelope.iter().copied().fold(0.0, f64::max);
    let load_cap = env_peak * (1.0 + phi * 0.1) + rng.random_range(1.0..12.0);

    InstanceSpec {
        grid,
        limits: InterconnectionLimits {
            load_cap,
            ramp_cap: rng.random_range(12.0..20.0),
            initial_net_load: None,
        },
        jobs,
        dvfs,
        bess,
        bess_units: 1,
        prices,
        weights,
        scenarios,
        dc_power_cap,
    }
}
