use serde::{Deserialize, Serialize};

use super::ir::{name, ModelIR};
use crate::error::{Error, Result};
use crate::model::{fixed_load_at, DvfsMode, InstanceSpec, Scenario};

/// First-stage decisions recovered from a solved model. Per-period series
/// are indexed by `t - 1`; job series by job position then period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub dvfs: Vec<f64>,
    /// Selected level (1-based) per period, discrete mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dvfs_level: Option<Vec<usize>>,
    pub job_ids: Vec<String>,
    /// Scheduled execution rates `w[j][t]`.
    pub job_rates: Vec<Vec<f64>>,
    /// DVFS-adjusted service `(a_t / a_o) w[j][t]`.
    pub effective_rates: Vec<Vec<f64>>,
    pub unfinished: Vec<f64>,
    pub bess_charge: Vec<f64>,
    pub bess_discharge: Vec<f64>,
    pub reserve_offer: Vec<f64>,
    pub frp_up_offer: Vec<f64>,
    pub frp_down_offer: Vec<f64>,
    pub mode_charge: Vec<f64>,
    pub mode_discharge: Vec<f64>,
}

impl Schedule {
    /// No jobs served, no battery action, DVFS at its reference.
    pub fn idle(spec: &InstanceSpec) -> Self {
        let t = spec.periods();
        let j = spec.jobs.len();
        Schedule {
            dvfs: vec![spec.dvfs.reference; t],
            dvfs_level: None,
            job_ids: spec.jobs.iter().map(|x| x.id.clone()).collect(),
            job_rates: vec![vec![0.0; t]; j],
            effective_rates: vec![vec![0.0; t]; j],
            unfinished: spec.jobs.iter().map(|x| x.work).collect(),
            bess_charge: vec![0.0; t],
            bess_discharge: vec![0.0; t],
            reserve_offer: vec![0.0; t],
            frp_up_offer: vec![0.0; t],
            frp_down_offer: vec![0.0; t],
            mode_charge: vec![0.0; t],
            mode_discharge: vec![0.0; t],
        }
    }

    pub fn periods(&self) -> usize {
        self.dvfs.len()
    }

    /// Total schedulable-job power at 0-based period `i`.
    pub fn job_power(&self, i: usize) -> f64 {
        self.effective_rates.iter().map(|r| r[i]).sum()
    }

    pub(crate) fn check_dims(&self, spec: &InstanceSpec) -> Result<()> {
        let t = spec.periods();
        let j = spec.jobs.len();
        let series = [
            &self.dvfs,
            &self.bess_charge,
            &self.bess_discharge,
            &self.reserve_offer,
            &self.frp_up_offer,
            &self.frp_down_offer,
        ];
        if series.iter().any(|s| s.len() != t)
            || self.job_rates.len() != j
            || self.effective_rates.len() != j
            || self.unfinished.len() != j
            || self.effective_rates.iter().any(|r| r.len() != t)
        {
            return Err(Error::domain("schedule dimensions do not match the instance"));
        }
        Ok(())
    }
}

/// Compute power `P` at 0-based period `i` under `scenario`: conservative
/// fixed load at the scheduled DVFS factor plus job power.
pub(crate) fn compute_power(schedule: &Schedule, scenario: &Scenario, spec: &InstanceSpec, i: usize) -> f64 {
    fixed_load_at(scenario, i, schedule.dvfs[i], &spec.dvfs) + schedule.job_power(i)
}

/// Battery throughput (MWh) of `schedule` under `scenario`.
pub(crate) fn throughput(schedule: &Schedule, scenario: &Scenario, dt: f64) -> f64 {
    (0..schedule.periods())
        .map(|i| {
            dt * (schedule.bess_charge[i]
                + scenario.deploy_frp_up[i] * schedule.frp_up_offer[i]
                + schedule.bess_discharge[i]
                + scenario.deploy_reserve[i] * schedule.reserve_offer[i]
                + scenario.deploy_frp_down[i] * schedule.frp_down_offer[i])
        })
        .sum()
}

fn value(ir: &ModelIR, x: &[f64], n: &str) -> Result<f64> {
    Ok(x[ir.require_var(n)?])
}

fn value_or_zero(ir: &ModelIR, x: &[f64], n: &str) -> f64 {
    ir.var(n).map(|j| x[j]).unwrap_or(0.0)
}

/// Map a primal vector of a model built from `spec` back to a [`Schedule`].
pub fn extract_schedule(ir: &ModelIR, primal: &[f64], spec: &InstanceSpec) -> Result<Schedule> {
    if primal.is_empty() {
        return Err(Error::Extraction("no primal solution (infeasible, unbounded or failed solve)".into()));
    }
    if primal.len() != ir.num_vars() {
        return Err(Error::Extraction(format!(
            "primal has {} entries, model has {} variables",
            primal.len(),
            ir.num_vars()
        )));
    }
    let x = primal;
    let t_len = spec.periods();
    let ao = spec.dvfs.reference;
    let mut sch = Schedule::idle(spec);
    let discrete = spec.dvfs.mode == DvfsMode::Discrete;
    if discrete != ir.var(&name("z", &[1, 1])).is_some() && t_len > 0 {
        return Err(Error::Extraction("model kind does not match dvfs.mode".into()));
    }

    if discrete {
        let levels = &spec.dvfs.levels;
        let mut chosen = Vec::with_capacity(t_len);
        for t in 1..=t_len {
            let mut best = (0usize, f64::NEG_INFINITY);
            for l in 1..=levels.len() {
                let z = value(ir, x, &name("z", &[l, t]))?;
                if z > best.1 {
                    best = (l, z);
                }
            }
            chosen.push(best.0);
            sch.dvfs[t - 1] = levels[best.0 - 1];
        }
        for (jx, _) in spec.jobs.iter().enumerate() {
            for t in 1..=t_len {
                let (mut w, mut v) = (0.0, 0.0);
                for (lx, &al) in levels.iter().enumerate() {
                    let wl = value(ir, x, &name("w", &[jx + 1, lx + 1, t]))?;
                    w += wl;
                    v += al / ao * wl;
                }
                sch.job_rates[jx][t - 1] = w;
                sch.effective_rates[jx][t - 1] = v;
            }
        }
        sch.dvfs_level = Some(chosen);
    } else {
        for t in 1..=t_len {
            sch.dvfs[t - 1] = value(ir, x, &name("a", &[t]))?;
        }
        for (jx, _) in spec.jobs.iter().enumerate() {
            for t in 1..=t_len {
                let v = value(ir, x, &name("v", &[jx + 1, t]))?;
                let a = sch.dvfs[t - 1];
                sch.effective_rates[jx][t - 1] = v;
                sch.job_rates[jx][t - 1] = if a > 0.0 { v * ao / a } else { 0.0 };
            }
        }
    }
    for (jx, _) in spec.jobs.iter().enumerate() {
        sch.unfinished[jx] = value(ir, x, &name("ell", &[jx + 1]))?;
    }
    for t in 1..=t_len {
        let i = t - 1;
        sch.bess_charge[i] = value_or_zero(ir, x, &name("ch", &[t]));
        sch.bess_discharge[i] = value_or_zero(ir, x, &name("dis", &[t]));
        sch.reserve_offer[i] = value_or_zero(ir, x, &name("res", &[t]));
        sch.frp_up_offer[i] = value_or_zero(ir, x, &name("fup", &[t]));
        sch.frp_down_offer[i] = value_or_zero(ir, x, &name("fdn", &[t]));
        sch.mode_charge[i] = value_or_zero(ir, x, &name("mode_ch", &[t]));
        sch.mode_discharge[i] = value_or_zero(ir, x, &name("mode_dis", &[t]));
    }
    Ok(sch)
}
