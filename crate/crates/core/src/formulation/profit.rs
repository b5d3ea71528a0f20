use serde::{Deserialize, Serialize};

use super::schedule::{compute_power, throughput, Schedule};
use crate::error::{Error, Result};
use crate::model::{InstanceSpec, Scenario};

/// Profit of one schedule under one scenario, priced term by term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioProfit {
    pub reserve_revenue: f64,
    pub frp_revenue: f64,
    pub energy_cost: f64,
    pub job_cost: f64,
    pub degradation_cost: f64,
    /// Battery throughput in MWh.
    pub throughput: f64,
    /// Cycles beyond the budget, `max(0, EFC - budget)`.
    pub cycle_slack: f64,
    pub profit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitBreakdown {
    pub reserve_revenue: f64,
    pub frp_revenue: f64,
    pub energy_cost_s: Vec<f64>,
    pub job_cost: f64,
    pub degradation_cost_s: Vec<f64>,
    pub per_scenario_profit: Vec<f64>,
    pub worst_case: f64,
    /// 1-based index of the scenario attaining the worst case.
    pub worst_scenario: usize,
}

impl ProfitBreakdown {
    pub fn as_revenue(&self) -> f64 {
        self.reserve_revenue + self.frp_revenue
    }
}

/// Workload-quality cost: tardy service, unfinished work, DVFS deviation.
pub fn job_cost(schedule: &Schedule, spec: &InstanceSpec) -> f64 {
    let w = &spec.weights;
    let dt = spec.dt();
    let ao = spec.dvfs.reference;
    let mut cost = 0.0;
    for (jx, job) in spec.jobs.iter().enumerate() {
        for t in (job.deadline + 1)..=spec.periods() {
            cost += w.c_tardy * job.weight * (t - job.deadline) as f64 * schedule.effective_rates[jx][t - 1] * dt;
        }
        cost += w.c_unfinished * job.weight * schedule.unfinished[jx] * dt;
    }
    cost + w.c_dvfs * schedule.dvfs.iter().map(|a| (a - ao).abs()).sum::<f64>()
}

/// Price `schedule` under `scenario`.
pub fn scenario_profit(schedule: &Schedule, scenario: &Scenario, spec: &InstanceSpec) -> Result<ScenarioProfit> {
    schedule.check_dims(spec)?;
    let t_len = spec.periods();
    if [
        &scenario.fixed_load,
        &scenario.fixed_envelope,
        &scenario.deploy_reserve,
        &scenario.deploy_frp_up,
        &scenario.deploy_frp_down,
    ]
    .iter()
    .any(|s| s.len() != t_len)
    {
        return Err(Error::domain("scenario length does not match the horizon"));
    }
    let dt = spec.dt();
    let p = &spec.prices;
    let mut reserve_revenue = 0.0;
    let mut frp_revenue = 0.0;
    let mut energy_cost = 0.0;
    for i in 0..t_len {
        reserve_revenue += p.reserve[i] * schedule.reserve_offer[i] * dt;
        frp_revenue += (p.frp_up[i] * schedule.frp_up_offer[i] + p.frp_down[i] * schedule.frp_down_offer[i]) * dt;
        let d = schedule.bess_charge[i] - schedule.bess_discharge[i] + compute_power(schedule, scenario, spec, i);
        energy_cost += p.energy[i]
            * dt
            * (d - scenario.deploy_reserve[i] * schedule.reserve_offer[i]
                + scenario.deploy_frp_up[i] * schedule.frp_up_offer[i]
                - scenario.deploy_frp_down[i] * schedule.frp_down_offer[i]);
    }
    let jc = job_cost(schedule, spec);
    let cap = spec.fleet_energy_cap();
    let thr = throughput(schedule, scenario, dt);
    let (cycle_slack, degradation_cost) = if cap > 0.0 {
        let slack = (thr / (2.0 * cap) - spec.bess.cycle_budget).max(0.0);
        (slack, spec.bess.degradation_cost * 2.0 * cap * slack)
    } else {
        (0.0, 0.0)
    };
    let w = &spec.weights;
    let profit = reserve_revenue + frp_revenue - energy_cost - w.lambda_job * jc - w.lambda_deg * degradation_cost;
    Ok(ScenarioProfit {
        reserve_revenue,
        frp_revenue,
        energy_cost,
        job_cost: jc,
        degradation_cost,
        throughput: thr,
        cycle_slack,
        profit,
    })
}

/// Price `schedule` under every scenario of `spec`.
pub fn profit_breakdown(schedule: &Schedule, spec: &InstanceSpec) -> Result<ProfitBreakdown> {
    if spec.scenarios.is_empty() {
        return Err(Error::domain("instance has no scenarios"));
    }
    let entries = spec
        .scenarios
        .iter()
        .map(|s| scenario_profit(schedule, s, spec))
        .collect::<Result<Vec<_>>>()?;
    let per: Vec<f64> = entries.iter().map(|e| e.profit).collect();
    let (worst_idx, worst) = per
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    Ok(ProfitBreakdown {
        reserve_revenue: entries[0].reserve_revenue,
        frp_revenue: entries[0].frp_revenue,
        energy_cost_s: entries.iter().map(|e| e.energy_cost).collect(),
        job_cost: entries[0].job_cost,
        degradation_cost_s: entries.iter().map(|e| e.degradation_cost).collect(),
        per_scenario_profit: per,
        worst_case: worst,
        worst_scenario: worst_idx + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        BessSpec, CostWeights, DvfsConfig, DvfsMode, InterconnectionLimits, MarketPrices, TimeGrid,
    };

    fn flat_day() -> InstanceSpec {
        InstanceSpec {
            grid: TimeGrid::hourly(24),
            limits: InterconnectionLimits {
                load_cap: 100.0,
                ramp_cap: 10.0,
                initial_net_load: None,
            },
            jobs: vec![],
            dvfs: DvfsConfig {
                mode: DvfsMode::Disabled,
                levels: vec![],
                bounds: [1.0, 1.0],
                reference: 1.0,
                fixed_sensitive_fraction: 0.35,
            },
            bess: BessSpec {
                energy_cap: 36.0,
                charge_cap: 12.0,
                discharge_cap: 12.0,
                eta_charge: 0.95,
                eta_discharge: 0.95,
                soc_min: 0.1,
                soc_max: 0.9,
                soc_init: 0.6,
                soc_terminal: None,
                cycle_budget: 1.0,
                degradation_cost: 45.0,
            },
            bess_units: 1,
            prices: MarketPrices::flat(24, 10.0),
            weights: CostWeights {
                c_dvfs: 1000.0,
                c_unfinished: 2000.0,
                c_tardy: 100.0,
                lambda_job: 1.0,
                lambda_deg: 1.0,
            },
            scenarios: vec![Scenario::deterministic(vec![50.0; 24])],
            dc_power_cap: 120.0,
        }
    }

    #[test]
    fn idle_day_pays_energy_only() {
        let spec = flat_day();
        let p = scenario_profit(&Schedule::idle(&spec), &spec.scenarios[0], &spec).unwrap();
        assert_eq!(p.profit, -12000.0);
        assert_eq!((p.reserve_revenue, p.frp_revenue), (0.0, 0.0));
    }

    #[test]
    fn reserve_offer_and_deployment() {
        let mut spec = flat_day();
        spec.prices.reserve[0] = 5.0;
        let mut sch = Schedule::idle(&spec);
        sch.reserve_offer[0] = 10.0;
        let base = scenario_profit(&sch, &spec.scenarios[0], &spec).unwrap();
        assert_eq!(base.reserve_revenue, 50.0);
        assert_eq!(base.energy_cost, 12000.0);
        let mut deployed = spec.scenarios[0].clone();
        deployed.deploy_reserve[0] = 1.0;
        let d = scenario_profit(&sch, &deployed, &spec).unwrap();
        assert_eq!(base.energy_cost - d.energy_cost, 100.0);
    }

    #[test]
    fn excess_cycling_is_charged() {
        let spec = flat_day();
        let mut sch = Schedule::idle(&spec);
        for i in 0..6 {
            sch.bess_charge[i] = 12.0;
            sch.bess_discharge[i + 6] = 12.0;
        }
        // 144 MWh throughput over 2 * 36 = 72 per cycle: 2 cycles, 1 over budget.
        let p = scenario_profit(&sch, &spec.scenarios[0], &spec).unwrap();
        assert_eq!(p.throughput, 144.0);
        assert_eq!(p.cycle_slack, 1.0);
        assert_eq!(p.degradation_cost, 45.0 * 72.0);
    }

    #[test]
    fn worst_case_is_minimum() {
        let mut spec = flat_day();
        spec.scenarios.push(Scenario::deterministic(vec![55.0; 24]));
        let b = profit_breakdown(&Schedule::idle(&spec), &spec).unwrap();
        assert_eq!(b.per_scenario_profit, vec![-12000.0, -13200.0]);
        assert_eq!((b.worst_case, b.worst_scenario), (-13200.0, 2));
    }

    #[test]
    fn length_mismatch_is_domain_error() {
        let spec = flat_day();
        let short = Scenario::deterministic(vec![50.0; 23]);
        assert!(matches!(
            scenario_profit(&Schedule::idle(&spec), &short, &spec),
            Err(Error::Domain(_))
        ));
    }
}
