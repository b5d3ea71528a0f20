//! Instance data: time grid, limits, jobs, DVFS, battery, prices, scenarios.
//!
//! Units are MW, MWh, hours and one unnamed currency throughout. Periods are
//! 1-based wherever they appear in public signatures.

mod jobs;
mod validate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use jobs::{load_job_portfolio, load_job_portfolio_path, total_work, write_job_portfolio};
pub use validate::{validate_instance, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub periods: usize,
    #[serde(default = "one")]
    pub dt: f64,
}

fn one() -> f64 {
    1.0
}

impl TimeGrid {
    pub fn hourly(periods: usize) -> Self {
        TimeGrid { periods, dt: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterconnectionLimits {
    pub load_cap: f64,
    pub ramp_cap: f64,
    /// Net load in the period before the horizon. When set, the first
    /// period's ramp is constrained against it; otherwise ramps start at t = 2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_net_load: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub id: String,
    pub release: usize,
    pub deadline: usize,
    pub work: f64,
    pub max_rate: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DvfsMode {
    Continuous,
    Discrete,
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DvfsConfig {
    pub mode: DvfsMode,
    /// Admissible scaling factors in discrete mode, non-decreasing.
    #[serde(default)]
    pub levels: Vec<f64>,
    /// `[a_lo, a_hi]` range in continuous mode.
    pub bounds: [f64; 2],
    pub reference: f64,
    /// Share of the fixed load that scales with the DVFS factor.
    pub fixed_sensitive_fraction: f64,
}

impl DvfsConfig {
    /// `n` evenly spaced levels over `[lo, hi]`, which must contain `reference`.
    pub fn discrete_even(lo: f64, hi: f64, n: usize, reference: f64, phi: f64) -> Self {
        let levels = if n <= 1 {
            vec![reference]
        } else {
            (0..n)
                .map(|k| {
                    let a = lo + (hi - lo) * k as f64 / (n - 1) as f64;
                    // snap rounding noise onto the reference point
                    if (a - reference).abs() < 1e-9 {
                        reference
                    } else {
                        a
                    }
                })
                .collect()
        };
        DvfsConfig {
            mode: DvfsMode::Discrete,
            levels,
            bounds: [lo.min(reference), hi.max(reference)],
            reference,
            fixed_sensitive_fraction: phi,
        }
    }

    /// Whether `a` is an operating point this configuration allows.
    pub fn admits(&self, a: f64) -> bool {
        const TOL: f64 = 1e-12;
        match self.mode {
            DvfsMode::Disabled => (a - self.reference).abs() <= TOL,
            DvfsMode::Continuous => a >= self.bounds[0] - TOL && a <= self.bounds[1] + TOL,
            DvfsMode::Discrete => self.levels.iter().any(|&l| (l - a).abs() <= TOL),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BessSpec {
    pub energy_cap: f64,
    pub charge_cap: f64,
    pub discharge_cap: f64,
    pub eta_charge: f64,
    pub eta_discharge: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub soc_init: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soc_terminal: Option<f64>,
    /// Preferred equivalent full cycles per day.
    pub cycle_budget: f64,
    /// Currency per MWh of throughput beyond the cycle budget.
    pub degradation_cost: f64,
}

impl BessSpec {
    pub fn none() -> Self {
        BessSpec {
            energy_cap: 0.0,
            charge_cap: 0.0,
            discharge_cap: 0.0,
            eta_charge: 1.0,
            eta_discharge: 1.0,
            soc_min: 0.0,
            soc_max: 1.0,
            soc_init: 0.0,
            soc_terminal: None,
            cycle_budget: 0.0,
            degradation_cost: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub c_dvfs: f64,
    pub c_unfinished: f64,
    pub c_tardy: f64,
    #[serde(default = "one")]
    pub lambda_job: f64,
    #[serde(default = "one")]
    pub lambda_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketPrices {
    pub energy: Vec<f64>,
    pub reserve: Vec<f64>,
    pub frp_up: Vec<f64>,
    pub frp_down: Vec<f64>,
}

impl MarketPrices {
    pub fn flat(periods: usize, energy: f64) -> Self {
        MarketPrices {
            energy: vec![energy; periods],
            reserve: vec![0.0; periods],
            frp_up: vec![0.0; periods],
            frp_down: vec![0.0; periods],
        }
    }

    pub fn mean_energy(&self) -> f64 {
        if self.energy.is_empty() {
            0.0
        } else {
            self.energy.iter().sum::<f64>() / self.energy.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub fixed_load: Vec<f64>,
    pub fixed_envelope: Vec<f64>,
    pub deploy_reserve: Vec<f64>,
    pub deploy_frp_up: Vec<f64>,
    pub deploy_frp_down: Vec<f64>,
}

impl Scenario {
    /// Scenario with the given load as its own envelope and no deployment.
    pub fn deterministic(fixed_load: Vec<f64>) -> Self {
        let t = fixed_load.len();
        Scenario {
            fixed_envelope: fixed_load.clone(),
            fixed_load,
            deploy_reserve: vec![0.0; t],
            deploy_frp_up: vec![0.0; t],
            deploy_frp_down: vec![0.0; t],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub grid: TimeGrid,
    pub limits: InterconnectionLimits,
    #[serde(default)]
    pub jobs: Vec<JobSpec>,
    pub dvfs: DvfsConfig,
    pub bess: BessSpec,
    #[serde(default = "one_unit")]
    pub bess_units: u32,
    pub prices: MarketPrices,
    pub weights: CostWeights,
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
    pub dc_power_cap: f64,
}

fn one_unit() -> u32 {
    1
}

impl InstanceSpec {
    pub fn periods(&self) -> usize {
        self.grid.periods
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt
    }

    /// Fleet energy capacity: one equivalent battery of `bess_units` units.
    pub fn fleet_energy_cap(&self) -> f64 {
        self.bess.energy_cap * self.bess_units as f64
    }

    pub fn fleet_charge_cap(&self) -> f64 {
        self.bess.charge_cap * self.bess_units as f64
    }

    pub fn fleet_discharge_cap(&self) -> f64 {
        self.bess.discharge_cap * self.bess_units as f64
    }

    pub fn has_bess(&self) -> bool {
        self.fleet_energy_cap() > 0.0
    }

    /// Return `self` if it passes validation.
    pub fn validated(self) -> Result<Self> {
        validate_instance(&self).map_err(Error::Invalid)?;
        Ok(self)
    }
}

/// Conservative fixed load of `scenario` at period `t` (1-based) under DVFS
/// factor `a`: the envelope plus the DVFS-sensitive share of the forecast.
pub fn conservative_fixed_load(scenario: &Scenario, t: usize, a: f64, dvfs: &DvfsConfig) -> Result<f64> {
    if !dvfs.admits(a) {
        return Err(Error::domain(format!("DVFS factor {a} is not admissible")));
    }
    if t == 0 || t > scenario.fixed_load.len() || t > scenario.fixed_envelope.len() {
        return Err(Error::domain(format!("period {t} outside the scenario horizon")));
    }
    Ok(fixed_load_at(scenario, t - 1, a, dvfs))
}

/// Unchecked form with a 0-based period index.
pub(crate) fn fixed_load_at(scenario: &Scenario, t0: usize, a: f64, dvfs: &DvfsConfig) -> f64 {
    let ao = dvfs.reference;
    scenario.fixed_envelope[t0]
        + dvfs.fixed_sensitive_fraction * (a - ao) / ao * scenario.fixed_load[t0]
}

/// Hardware capacity left for schedulable jobs at period `t` (1-based).
/// Negative values are returned as-is.
pub fn flexible_headroom(spec: &InstanceSpec, scenario: &Scenario, t: usize, a: f64) -> Result<f64> {
    Ok(spec.dc_power_cap - conservative_fixed_load(scenario, t, a, &spec.dvfs)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dvfs() -> DvfsConfig {
        DvfsConfig {
            mode: DvfsMode::Continuous,
            levels: vec![],
            bounds: [0.8, 1.2],
            reference: 1.0,
            fixed_sensitive_fraction: 0.35,
        }
    }

    fn scen() -> Scenario {
        Scenario {
            fixed_load: vec![80.0],
            fixed_envelope: vec![85.0],
            deploy_reserve: vec![0.0],
            deploy_frp_up: vec![0.0],
            deploy_frp_down: vec![0.0],
        }
    }

    #[test]
    fn conservative_load_adds_scaled_forecast() {
        let v = conservative_fixed_load(&scen(), 1, 1.2, &dvfs()).unwrap();
        // 85 + 0.35 * 0.2 * 80
        assert!((v - 90.6).abs() < 1e-12);
        assert_eq!(conservative_fixed_load(&scen(), 1, 1.0, &dvfs()).unwrap(), 85.0);
        let mut d = dvfs();
        d.fixed_sensitive_fraction = 1e-15;
        assert!((conservative_fixed_load(&scen(), 1, 0.8, &d).unwrap() - 85.0).abs() < 1e-9);
    }

    #[test]
    fn inadmissible_factor_is_domain_error() {
        assert!(matches!(
            conservative_fixed_load(&scen(), 1, 1.3, &dvfs()),
            Err(Error::Domain(_))
        ));
        assert!(conservative_fixed_load(&scen(), 2, 1.0, &dvfs()).is_err());
    }

    #[test]
    fn even_levels_include_endpoints() {
        let d = DvfsConfig::discrete_even(0.95, 1.05, 3, 1.0, 0.35);
        assert_eq!(d.levels.len(), 3);
        assert!(d.admits(1.0) && d.admits(0.95) && !d.admits(0.97));
    }
}
