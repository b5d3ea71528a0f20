//! Scenario sampling, series ingestion and the fixed-load envelope.

use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Scenario, TimeGrid};

/// Identifies the sampling algorithm in run manifests.
pub const RNG_ALGORITHM: &str = "chacha8-stream-per-scenario/v1";

/// XORed into the seed for out-of-sample draws so they never reuse the
/// training streams.
pub const OOS_DOMAIN_TAG: u64 = 0x6f6f_735f_6576_616c;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub scenario_count: usize,
    pub base_load: Vec<f64>,
    pub load_noise_rel: f64,
    pub deploy_mean_reserve: f64,
    pub deploy_mean_frp_up: f64,
    pub deploy_mean_frp_down: f64,
    #[serde(default = "default_margin")]
    pub envelope_margin: f64,
    /// Beta concentration (alpha + beta) of deployment draws.
    #[serde(default = "default_concentration")]
    pub concentration: f64,
    /// Whether fresh draws perturb the fixed load as well as deployments.
    #[serde(default = "yes")]
    pub vary_load: bool,
}

fn default_margin() -> f64 {
    0.01
}
fn default_concentration() -> f64 {
    5.0
}
fn yes() -> bool {
    true
}

impl GeneratorConfig {
    pub fn new(seed: u64, scenario_count: usize, base_load: Vec<f64>) -> Self {
        GeneratorConfig {
            seed,
            scenario_count,
            base_load,
            load_noise_rel: 0.0,
            deploy_mean_reserve: 0.0,
            deploy_mean_frp_up: 0.0,
            deploy_mean_frp_down: 0.0,
            envelope_margin: default_margin(),
            concentration: default_concentration(),
            vary_load: true,
        }
    }

    fn check(&self, grid: &TimeGrid) -> Result<()> {
        if self.scenario_count < 1 {
            return Err(Error::domain("scenario_count must be at least 1"));
        }
        if self.base_load.len() != grid.periods {
            return Err(Error::domain(format!(
                "base_load has {} entries, horizon is {}",
                self.base_load.len(),
                grid.periods
            )));
        }
        if !(self.load_noise_rel >= 0.0) || !(self.envelope_margin >= 0.0) || !(self.concentration > 0.0) {
            return Err(Error::domain("noise, margin and concentration must be nonnegative"));
        }
        for m in [self.deploy_mean_reserve, self.deploy_mean_frp_up, self.deploy_mean_frp_down] {
            if !(0.0..=1.0).contains(&m) {
                return Err(Error::domain(format!("deployment mean {m} outside [0,1]")));
            }
        }
        Ok(())
    }
}

enum Factor {
    Const(f64),
    Beta(Beta<f64>),
}

impl Factor {
    fn new(mean: f64, concentration: f64) -> Result<Self> {
        if mean <= 0.0 || mean >= 1.0 {
            return Ok(Factor::Const(mean.clamp(0.0, 1.0)));
        }
        Beta::new(mean * concentration, (1.0 - mean) * concentration)
            .map(Factor::Beta)
            .map_err(|e| Error::domain(format!("deployment distribution: {e}")))
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Factor::Const(c) => *c,
            Factor::Beta(b) => b.sample(rng).clamp(0.0, 1.0),
        }
    }
}

/// Draw `count` scenarios from stream `seed`; each scenario's envelope is its
/// own load.
fn draw(cfg: &GeneratorConfig, periods: usize, count: usize, seed: u64, vary_load: bool) -> Result<Vec<Scenario>> {
    let res = Factor::new(cfg.deploy_mean_reserve, cfg.concentration)?;
    let up = Factor::new(cfg.deploy_mean_frp_up, cfg.concentration)?;
    let dn = Factor::new(cfg.deploy_mean_frp_down, cfg.concentration)?;
    let out = (0..count)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let mut sc = Scenario {
                fixed_load: Vec::with_capacity(periods),
                fixed_envelope: Vec::new(),
                deploy_reserve: Vec::with_capacity(periods),
                deploy_frp_up: Vec::with_capacity(periods),
                deploy_frp_down: Vec::with_capacity(periods),
            };
            for t in 0..periods {
                let u: f64 = if cfg.load_noise_rel > 0.0 {
                    rng.random_range(-cfg.load_noise_rel..=cfg.load_noise_rel)
                } else {
                    0.0
                };
                let u = if vary_load { u } else { 0.0 };
                sc.fixed_load.push((cfg.base_load[t] * (1.0 + u)).max(0.0));
                sc.deploy_reserve.push(res.draw(&mut rng));
                sc.deploy_frp_up.push(up.draw(&mut rng));
                sc.deploy_frp_down.push(dn.draw(&mut rng));
            }
            sc.fixed_envelope = sc.fixed_load.clone();
            sc
        })
        .collect();
    Ok(out)
}

/// Sample training scenarios and apply the shared conservative envelope.
pub fn generate_scenarios(cfg: &GeneratorConfig, grid: &TimeGrid, dc_power_cap: f64) -> Result<Vec<Scenario>> {
    cfg.check(grid)?;
    let raw = draw(cfg, grid.periods, cfg.scenario_count, cfg.seed, true)?;
    build_envelope(raw, cfg.envelope_margin, dc_power_cap)
}

/// Fresh realizations for out-of-sample testing, drawn from a stream disjoint
/// from [`generate_scenarios`]. Each carries its realized load as envelope.
pub fn sample_out_of_sample(cfg: &GeneratorConfig, grid: &TimeGrid, count: usize) -> Result<Vec<Scenario>> {
    cfg.check(grid)?;
    if count < 1 {
        return Err(Error::domain("sample count must be at least 1"));
    }
    draw(cfg, grid.periods, count, cfg.seed ^ OOS_DOMAIN_TAG, cfg.vary_load)
}

/// Overwrite every envelope with `max_s load[s,t] + epsilon * dc_power_cap`.
pub fn build_envelope(mut scenarios: Vec<Scenario>, epsilon: f64, dc_power_cap: f64) -> Result<Vec<Scenario>> {
    let Some(first) = scenarios.first() else {
        return Err(Error::domain("cannot build an envelope from zero scenarios"));
    };
    let periods = first.fixed_load.len();
    if scenarios.iter().any(|s| s.fixed_load.len() != periods) {
        return Err(Error::domain("scenarios have inconsistent horizons"));
    }
    let env: Vec<f64> = (0..periods)
        .map(|t| {
            scenarios
                .iter()
                .map(|s| s.fixed_load[t])
                .fold(f64::NEG_INFINITY, f64::max)
                + epsilon * dc_power_cap
        })
        .collect();
    for s in &mut scenarios {
        s.fixed_envelope.clone_from(&env);
    }
    Ok(scenarios)
}

/// Read a `t,value` CSV (t is 1-based) into a series of `expected_len` values.
pub fn ingest_series_csv<R: Read>(source: R, expected_len: usize) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(ti), Some(vi)) = (col("t"), col("value")) else {
        return Err(Error::Parse {
            row: 0,
            message: "header must contain `t` and `value`".into(),
        });
    };
    let mut out: Vec<Option<f64>> = vec![None; expected_len];
    let mut rows = 0usize;
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        rows += 1;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let t: usize = field(ti).parse().map_err(|_| Error::Parse {
            row,
            message: format!("period `{}` is not an integer", field(ti)),
        })?;
        let v: f64 = field(vi).parse().map_err(|_| Error::Parse {
            row,
            message: format!("value `{}` is not numeric", field(vi)),
        })?;
        if t == 0 || t > expected_len {
            return Err(Error::Parse {
                row,
                message: format!("period t={t} outside 1..={expected_len}"),
            });
        }
        if out[t - 1].is_some() {
            return Err(Error::Parse {
                row,
                message: format!("duplicate period t={t}"),
            });
        }
        out[t - 1] = Some(v);
    }
    if rows != expected_len {
        return Err(Error::domain(format!("series has {rows} rows, expected {expected_len}")));
    }
    out.into_iter()
        .enumerate()
        .map(|(t, v)| {
            v.ok_or_else(|| Error::Parse {
                row: 0,
                message: format!("missing period t={}", t + 1),
            })
        })
        .collect()
}

pub fn ingest_series_csv_path(path: impl AsRef<Path>, expected_len: usize) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_series_csv(f, expected_len)
}
