use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{DvfsMode, InstanceSpec};

/// One violated invariant, located by a path such as `jobs[2].deadline`.
/// Indices are 0-based like override paths; period messages carry `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn check(&mut self, ok: bool, path: impl Into<String>, message: impl Into<String>) {
        if !ok {
            self.0.push(Violation {
                path: path.into(),
                message: message.into(),
            });
        }
    }

    fn finite(&mut self, x: f64, path: &str) -> bool {
        self.check(x.is_finite(), path, "must be finite");
        x.is_finite()
    }

    fn series(&mut self, xs: &[f64], len: usize, path: &str) -> bool {
        self.check(xs.len() == len, path, format!("length {} but horizon is {len}", xs.len()));
        let bad = xs.iter().position(|x| !x.is_finite());
        if let Some(i) = bad {
            self.check(false, format!("{path}[{i}]"), format!("must be finite (t={})", i + 1));
        }
        xs.len() == len && bad.is_none()
    }
}

/// Check every type invariant of `spec`; all violations are reported.
pub fn validate_instance(spec: &InstanceSpec) -> Result<(), Vec<Violation>> {
    let mut c = Collector(Vec::new());
    let t_len = spec.grid.periods;

    c.check(t_len >= 1, "grid.periods", "must be at least 1");
    c.check(spec.grid.dt > 0.0 && spec.grid.dt.is_finite(), "grid.dt", "must be positive");
    c.check(spec.limits.load_cap > 0.0, "limits.load_cap", "must be positive");
    c.check(spec.limits.ramp_cap > 0.0, "limits.ramp_cap", "must be positive");
    if let Some(d0) = spec.limits.initial_net_load {
        c.finite(d0, "limits.initial_net_load");
    }
    c.check(spec.dc_power_cap > 0.0 && spec.dc_power_cap.is_finite(), "dc_power_cap", "must be positive");

    let mut ids = HashSet::new();
    for (k, j) in spec.jobs.iter().enumerate() {
        let p = format!("jobs[{k}]");
        c.check(ids.insert(j.id.as_str()), format!("{p}.id"), format!("duplicate job id `{}`", j.id));
        c.check(j.release >= 1, format!("{p}.release"), format!("job `{}` released before period 1", j.id));
        c.check(
            j.release <= j.deadline,
            format!("{p}.deadline"),
            format!("job `{}` has deadline {} before release {}", j.id, j.deadline, j.release),
        );
        c.check(j.deadline <= t_len, format!("{p}.deadline"), format!("job `{}` deadline beyond horizon", j.id));
        c.check(j.work >= 0.0 && j.work.is_finite(), format!("{p}.work"), "must be nonnegative");
        c.check(j.max_rate > 0.0 && j.max_rate.is_finite(), format!("{p}.max_rate"), "must be positive");
        c.check(j.weight >= 0.0 && j.weight.is_finite(), format!("{p}.weight"), "must be nonnegative");
    }

    let d = &spec.dvfs;
    let phi = d.fixed_sensitive_fraction;
    c.check(phi > 0.0 && phi < 1.0, "dvfs.fixed_sensitive_fraction", "must lie in (0,1)");
    c.check(d.reference > 0.0 && d.reference.is_finite(), "dvfs.reference", "must be positive");
    let [lo, hi] = d.bounds;
    c.check(lo <= hi && lo.is_finite() && hi.is_finite(), "dvfs.bounds", "must be finite with lower <= upper");
    c.check(lo > 0.0, "dvfs.bounds", "scaling factors must be positive");
    match d.mode {
        DvfsMode::Continuous => {
            c.check(d.reference >= lo && d.reference <= hi, "dvfs.reference", "outside dvfs.bounds");
        }
        DvfsMode::Discrete => {
            c.check(!d.levels.is_empty(), "dvfs.levels", "discrete mode needs at least one level");
            c.check(d.levels.windows(2).all(|w| w[0] <= w[1]), "dvfs.levels", "must be sorted non-decreasing");
            c.check(d.levels.contains(&d.reference), "dvfs.reference", "not among dvfs.levels");
            for (k, &l) in d.levels.iter().enumerate() {
                c.check(l >= lo && l <= hi, format!("dvfs.levels[{k}]"), "outside dvfs.bounds");
            }
        }
        DvfsMode::Disabled => {}
    }

    let b = &spec.bess;
    for (v, p) in [
        (b.energy_cap, "bess.energy_cap"),
        (b.charge_cap, "bess.charge_cap"),
        (b.discharge_cap, "bess.discharge_cap"),
        (b.cycle_budget, "bess.cycle_budget"),
        (b.degradation_cost, "bess.degradation_cost"),
    ] {
        c.check(v >= 0.0 && v.is_finite(), p, "must be nonnegative");
    }
    for (v, p) in [(b.eta_charge, "bess.eta_charge"), (b.eta_discharge, "bess.eta_discharge")] {
        c.check(v > 0.0 && v <= 1.0, p, "must lie in (0,1]");
    }
    c.check(
        0.0 <= b.soc_min && b.soc_min <= b.soc_init && b.soc_init <= b.soc_max && b.soc_max <= 1.0,
        "bess.soc_init",
        "need 0 <= soc_min <= soc_init <= soc_max <= 1",
    );
    if let Some(e) = b.soc_terminal {
        c.check(e >= b.soc_min && e <= b.soc_max, "bess.soc_terminal", "outside [soc_min, soc_max]");
    }

    let w = &spec.weights;
    for (v, p) in [
        (w.c_dvfs, "weights.c_dvfs"),
        (w.c_unfinished, "weights.c_unfinished"),
        (w.c_tardy, "weights.c_tardy"),
        (w.lambda_job, "weights.lambda_job"),
        (w.lambda_deg, "weights.lambda_deg"),
    ] {
        c.check(v >= 0.0 && v.is_finite(), p, "must be nonnegative");
    }

    let pr = &spec.prices;
    c.series(&pr.energy, t_len, "prices.energy");
    for (xs, p) in [(&pr.reserve, "prices.reserve"), (&pr.frp_up, "prices.frp_up"), (&pr.frp_down, "prices.frp_down")] {
        if c.series(xs, t_len, p) {
            if let Some(i) = xs.iter().position(|&x| x < 0.0) {
                c.check(false, format!("{p}[{i}]"), format!("capacity prices must be nonnegative (t={})", i + 1));
            }
        }
    }

    c.check(!spec.scenarios.is_empty(), "scenarios", "at least one scenario is required");
    for (s, sc) in spec.scenarios.iter().enumerate() {
        let p = format!("scenarios[{s}]");
        let ok_load = c.series(&sc.fixed_load, t_len, &format!("{p}.fixed_load"));
        let ok_env = c.series(&sc.fixed_envelope, t_len, &format!("{p}.fixed_envelope"));
        if ok_load && ok_env {
            for t in 0..t_len {
                c.check(
                    sc.fixed_envelope[t] >= sc.fixed_load[t],
                    format!("{p}.fixed_envelope[{t}]"),
                    format!("envelope below fixed load (t={})", t + 1),
                );
            }
        }
        for (xs, name) in [
            (&sc.deploy_reserve, "deploy_reserve"),
            (&sc.deploy_frp_up, "deploy_frp_up"),
            (&sc.deploy_frp_down, "deploy_frp_down"),
        ] {
            let path = format!("{p}.{name}");
            if c.series(xs, t_len, &path) {
                for (t, &x) in xs.iter().enumerate() {
                    c.check(
                        (0.0..=1.0).contains(&x),
                        format!("{path}[{t}]"),
                        format!("deployment factor outside [0,1] (t={})", t + 1),
                    );
                }
            }
        }
    }

    if c.0.is_empty() {
        Ok(())
    } else {
        Err(c.0)
    }
}
