//! Open-loop replay of a fixed schedule and out-of-sample violation
//! statistics. The schedule is never adjusted; limit breaches are recorded.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::{compute_power, Schedule};
use crate::model::{InstanceSpec, Scenario};
use crate::scenario::{sample_out_of_sample, GeneratorConfig};

/// Absolute tolerance (MW, MW/h, SOC fraction) below which an exceedance is
/// not recorded.
pub const VIOLATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Load,
    RampUp,
    RampDown,
    SocLow,
    SocHigh,
}

impl ViolationKind {
    pub fn label(self) -> &'static str {
        match self {
            ViolationKind::Load => "load",
            ViolationKind::RampUp => "ramp_up",
            ViolationKind::RampDown => "ramp_down",
            ViolationKind::SocLow => "soc_low",
            ViolationKind::SocHigh => "soc_high",
        }
    }

    fn is_ramp(self) -> bool {
        matches!(self, ViolationKind::RampUp | ViolationKind::RampDown)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViolationEvent {
    /// 1-based period.
    pub period: usize,
    pub kind: ViolationKind,
    pub exceedance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayTrace {
    pub net_load: Vec<f64>,
    /// Stored energy (MWh) at the end of each period.
    pub energy: Vec<f64>,
    /// State of charge fraction at the end of each period; zero without storage.
    pub soc: Vec<f64>,
    pub compute_power: Vec<f64>,
    pub violations: Vec<ViolationEvent>,
}

impl ReplayTrace {
    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    /// Write `t,D,soc,P,violations` rows; violations are `;`-joined labels.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["t", "D", "soc", "P", "violations"])?;
        for i in 0..self.net_load.len() {
            let labels: Vec<&str> = self
                .violations
                .iter()
                .filter(|v| v.period == i + 1)
                .map(|v| v.kind.label())
                .collect();
            w.write_record([
                (i + 1).to_string(),
                self.net_load[i].to_string(),
                self.soc[i].to_string(),
                self.compute_power[i].to_string(),
                labels.join(";"),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }
}

fn check_lengths(schedule: &Schedule, scenario: &Scenario, spec: &InstanceSpec) -> Result<()> {
    schedule.check_dims(spec)?;
    let t = spec.periods();
    let series = [
        &scenario.fixed_load,
        &scenario.fixed_envelope,
        &scenario.deploy_reserve,
        &scenario.deploy_frp_up,
        &scenario.deploy_frp_down,
    ];
    if series.iter().any(|s| s.len() != t) {
        return Err(Error::domain("scenario length does not match the horizon"));
    }
    Ok(())
}

/// Replay `schedule` against `scenario`.
pub fn replay(schedule: &Schedule, scenario: &Scenario, spec: &InstanceSpec) -> Result<ReplayTrace> {
    check_lengths(schedule, scenario, spec)?;
    let t_len = spec.periods();
    let dt = spec.dt();
    let lim = &spec.limits;
    let b = &spec.bess;
    let cap = spec.fleet_energy_cap();
    let mut trace = ReplayTrace {
        net_load: Vec::with_capacity(t_len),
        energy: Vec::with_capacity(t_len),
        soc: Vec::with_capacity(t_len),
        compute_power: Vec::with_capacity(t_len),
        violations: Vec::new(),
    };
    let push = |trace: &mut ReplayTrace, period, kind, exceedance: f64| {
        if exceedance > VIOLATION_TOL {
            trace.violations.push(ViolationEvent {
                period,
                kind,
                exceedance,
            });
        }
    };

    let mut energy = b.soc_init * cap;
    let mut prev = lim.initial_net_load;
    for i in 0..t_len {
        let t = i + 1;
        let p = compute_power(schedule, scenario, spec, i);
        let d = p + schedule.bess_charge[i] - schedule.bess_discharge[i];
        push(&mut trace, t, ViolationKind::Load, d - lim.load_cap);
        if let Some(prev) = prev {
            push(&mut trace, t, ViolationKind::RampUp, d - prev - lim.ramp_cap);
            push(&mut trace, t, ViolationKind::RampDown, prev - d - lim.ramp_cap);
        }
        prev = Some(d);

        let soc = if cap > 0.0 {
            energy += dt
                * (b.eta_charge * (schedule.bess_charge[i] + scenario.deploy_frp_up[i] * schedule.frp_up_offer[i])
                    - (schedule.bess_discharge[i]
                        + scenario.deploy_frp_down[i] * schedule.frp_down_offer[i]
                        + scenario.deploy_reserve[i] * schedule.reserve_offer[i])
                        / b.eta_discharge);
            let soc = energy / cap;
            push(&mut trace, t, ViolationKind::SocLow, b.soc_min - soc);
            push(&mut trace, t, ViolationKind::SocHigh, soc - b.soc_max);
            soc
        } else {
            0.0
        };
        trace.compute_power.push(p);
        trace.net_load.push(d);
        trace.energy.push(energy);
        trace.soc.push(soc);
    }
    Ok(trace)
}

/// Aggregated out-of-sample violation statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OosReport {
    pub sample_count: usize,
    pub periods: usize,
    /// Violating (period, sample) pairs over `periods * sample_count`.
    pub period_violation_rate_load: f64,
    /// Pairs with an up or down ramp breach over `periods * sample_count`.
    pub period_violation_rate_ramp: f64,
    pub scenario_incidence_load: f64,
    pub scenario_incidence_ramp: f64,
    pub max_exceedance_load: f64,
    pub max_exceedance_ramp: f64,
    /// Pairs with an SOC-bound breach over `periods * sample_count`.
    pub soc_violation_rate: f64,
    pub rng_algorithm: String,
    pub seed: u64,
}

#[derive(Default)]
struct Tally {
    load_pairs: usize,
    ramp_pairs: usize,
    soc_pairs: usize,
    load_scen: usize,
    ramp_scen: usize,
    max_load: f64,
    max_ramp: f64,
}

fn tally(trace: &ReplayTrace) -> Tally {
    let mut t = Tally::default();
    let n = trace.net_load.len();
    let mut load = vec![false; n];
    let mut ramp = vec![false; n];
    let mut soc = vec![false; n];
    for v in &trace.violations {
        let i = v.period - 1;
        match v.kind {
            ViolationKind::Load => {
                load[i] = true;
                t.max_load = t.max_load.max(v.exceedance);
            }
            k if k.is_ramp() => {
                ramp[i] = true;
                t.max_ramp = t.max_ramp.max(v.exceedance);
            }
            _ => soc[i] = true,
        }
    }
    t.load_pairs = load.iter().filter(|&&x| x).count();
    t.ramp_pairs = ramp.iter().filter(|&&x| x).count();
    t.soc_pairs = soc.iter().filter(|&&x| x).count();
    t.load_scen = usize::from(t.load_pairs > 0);
    t.ramp_scen = usize::from(t.ramp_pairs > 0);
    t
}

/// Summarize replays of one schedule over `scenarios`.
pub fn summarize(schedule: &Schedule, spec: &InstanceSpec, scenarios: &[Scenario]) -> Result<OosReport> {
    if scenarios.is_empty() {
        return Err(Error::domain("sample_count must be at least 1"));
    }
    let traces = scenarios
        .par_iter()
        .map(|s| replay(schedule, s, spec).map(|tr| tally(&tr)))
        .collect::<Result<Vec<_>>>()?;
    let n = scenarios.len();
    let pairs = (n * spec.periods()) as f64;
    let sum = |f: fn(&Tally) -> usize| traces.iter().map(f).sum::<usize>() as f64;
    Ok(OosReport {
        sample_count: n,
        periods: spec.periods(),
        period_violation_rate_load: sum(|t| t.load_pairs) / pairs,
        period_violation_rate_ramp: sum(|t| t.ramp_pairs) / pairs,
        scenario_incidence_load: sum(|t| t.load_scen) / n as f64,
        scenario_incidence_ramp: sum(|t| t.ramp_scen) / n as f64,
        max_exceedance_load: traces.iter().map(|t| t.max_load).fold(0.0, f64::max),
        max_exceedance_ramp: traces.iter().map(|t| t.max_ramp).fold(0.0, f64::max),
        soc_violation_rate: sum(|t| t.soc_pairs) / pairs,
        rng_algorithm: String::new(),
        seed: 0,
    })
}

/// Draw `sample_count` fresh scenarios from `generator` on the evaluation
/// stream and replay `schedule` against each.
pub fn oos_evaluate(
    schedule: &Schedule,
    spec: &InstanceSpec,
    generator: &GeneratorConfig,
    sample_count: usize,
) -> Result<OosReport> {
    if sample_count < 1 {
        return Err(Error::domain("sample_count must be at least 1"));
    }
    let scenarios = sample_out_of_sample(generator, &spec.grid, sample_count)?;
    let mut report = summarize(schedule, spec, &scenarios)?;
    report.rng_algorithm = crate::scenario::RNG_ALGORITHM.to_string();
    report.seed = generator.seed;
    Ok(report)
}

/// Replays of `schedule` against `sample_count` fresh evaluation draws, in
/// sample order.
pub fn oos_traces(
    schedule: &Schedule,
    spec: &InstanceSpec,
    generator: &GeneratorConfig,
    sample_count: usize,
) -> Result<Vec<ReplayTrace>> {
    let scenarios = sample_out_of_sample(generator, &spec.grid, sample_count)?;
    scenarios.par_iter().map(|s| replay(schedule, s, spec)).collect()
}
