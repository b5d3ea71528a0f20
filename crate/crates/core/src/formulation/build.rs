//! Deterministic-equivalent builders.
//!
//! Both builders share the grid, market, battery and robust blocks and differ
//! only in how DVFS and job service enter the model:
//!
//! * continuous: effective service `v[j,t]`, factor `a[t]`, deviation
//!   epigraph `u[t]`;
//! * discrete: level binaries `z[l,t]`, per-level rates `w[j,l,t]`.
//!
//! Variable families: `a`, `u`, `v`, `z`, `w`, `ell`, `pjob`, `ch`, `dis`,
//! `res`, `fup`, `fdn`, `mode_ch`, `mode_dis`, `P`, `D`, `EB`, `ellc`,
//! `asrev`, `jobcost`, `theta`. Row families: `rate`, `dev_up`, `dev_dn`,
//! `sos`, `wind`, `alink`, `work_lo`, `work_hi`, `pjob_def`, `chlim`,
//! `dislim`, `excl`, `bal`, `net`, `load`, `ramp_up`, `ramp_dn`, `ebal`,
//! `term`, `cycle`, `asrev_def`, `jobcost_def`, `profit`.

use super::ir::{name, ModelIR, Sense};
use crate::error::{Error, Result};
use crate::model::{DvfsMode, InstanceSpec};

const INF: f64 = f64::INFINITY;

/// Build the effective-service-rate LP (continuous or disabled DVFS).
/// Battery mode indicators are continuous in `[0,1]`.
pub fn build_continuous_model(spec: &InstanceSpec) -> Result<ModelIR> {
    if spec.dvfs.mode == DvfsMode::Discrete {
        return Err(Error::WrongBuilder(
            "discrete DVFS needs build_discrete_model".into(),
        ));
    }
    Ok(Builder::new(spec, false).build())
}

/// Build the discrete-DVFS MILP with level and battery-mode binaries.
pub fn build_discrete_model(spec: &InstanceSpec) -> Result<ModelIR> {
    if spec.dvfs.mode != DvfsMode::Discrete {
        return Err(Error::WrongBuilder(
            "build_discrete_model requires dvfs.mode = discrete".into(),
        ));
    }
    Ok(Builder::new(spec, true).build())
}

/// Dispatch on `spec.dvfs.mode`.
pub fn build_model(spec: &InstanceSpec) -> Result<ModelIR> {
    match spec.dvfs.mode {
        DvfsMode::Discrete => build_discrete_model(spec),
        _ => build_continuous_model(spec),
    }
}

struct Builder<'a> {
    spec: &'a InstanceSpec,
    discrete: bool,
    ir: ModelIR,
    t_len: usize,
    dt: f64,
    /// Per-job, per-period terms (1-based t at index t-1) expressing the
    /// effective service delivered to job j.
    svc: Vec<Vec<Vec<(usize, f64)>>>,
    /// DVFS deviation cost terms (without c1).
    dev: Vec<(usize, f64)>,
    /// `z[l,t]` columns indexed `[l][t]` (discrete only).
    level_binaries: Vec<Vec<usize>>,
}

struct Bess {
    ch: Vec<usize>,
    dis: Vec<usize>,
    res: Vec<usize>,
    fup: Vec<usize>,
    fdn: Vec<usize>,
}

impl<'a> Builder<'a> {
    fn new(spec: &'a InstanceSpec, discrete: bool) -> Self {
        Builder {
            spec,
            discrete,
            ir: ModelIR::new(),
            t_len: spec.periods(),
            dt: spec.dt(),
            svc: Vec::new(),
            dev: Vec::new(),
            level_binaries: Vec::new(),
        }
    }

    fn build(mut self) -> ModelIR {
        let spec = self.spec;
        let a_vars = if self.discrete {
            self.discrete_compute()
        } else {
            self.continuous_compute()
        };
        let ell = self.jobs_block();
        let pjob = self.pjob_block();
        let bess = self.bess_first_stage();

        let theta = self.ir.add_var("theta".into(), -INF, INF);
        let asrev = self.ir.add_var("asrev".into(), -INF, INF);
        let jobcost = self.ir.add_var("jobcost".into(), -INF, INF);
        self.asrev_row(asrev, bess.as_ref());
        self.jobcost_row(jobcost, &ell);

        for s in 0..spec.scenarios.len() {
            self.scenario_block(s, &a_vars, &pjob, bess.as_ref(), theta, asrev, jobcost);
        }
        self.ir.set_objective(vec![(theta, 1.0)]);
        self.ir
    }

    /// Continuous or disabled DVFS; returns the `a[t]` columns.
    fn continuous_compute(&mut self) -> Vec<usize> {
        let spec = self.spec;
        let d = &spec.dvfs;
        let ao = d.reference;
        let disabled = d.mode == DvfsMode::Disabled;
        let (lo, hi) = if disabled { (ao, ao) } else { (d.bounds[0], d.bounds[1]) };
        let a: Vec<usize> = (1..=self.t_len)
            .map(|t| self.ir.add_var(name("a", &[t]), lo, hi))
            .collect();
        if !disabled {
            for t in 1..=self.t_len {
                let u = self.ir.add_var(name("u", &[t]), 0.0, INF);
                self.ir.add_constraint(name("dev_up", &[t]), vec![(u, 1.0), (a[t - 1], -1.0)], Sense::Ge, -ao);
                self.ir.add_constraint(name("dev_dn", &[t]), vec![(u, 1.0), (a[t - 1], 1.0)], Sense::Ge, ao);
                self.dev.push((u, 1.0));
            }
        }
        for (jx, job) in spec.jobs.iter().enumerate() {
            let j = jx + 1;
            let mut per_t = Vec::with_capacity(self.t_len);
            for t in 1..=self.t_len {
                let open = t >= job.release;
                let ub = if !open {
                    0.0
                } else if disabled {
                    job.max_rate
                } else {
                    job.max_rate * hi / ao
                };
                let v = self.ir.add_var(name("v", &[j, t]), 0.0, ub);
                if open && !disabled {
                    self.ir.add_constraint(
                        name("rate", &[j, t]),
                        vec![(v, 1.0), (a[t - 1], -job.max_rate / ao)],
                        Sense::Le,
                        0.0,
                    );
                }
                per_t.push(vec![(v, 1.0)]);
            }
            self.svc.push(per_t);
        }
        a
    }

    /// Discrete DVFS; returns the `a[t]` columns (linked to the level binaries).
    fn discrete_compute(&mut self) -> Vec<usize> {
        let spec = self.spec;
        let d = &spec.dvfs;
        let ao = d.reference;
        let levels = &d.levels;
        let lo = levels.iter().copied().fold(INF, f64::min);
        let hi = levels.iter().copied().fold(-INF, f64::max);
        let mut z = vec![Vec::with_capacity(self.t_len); levels.len()];
        for t in 1..=self.t_len {
            for (lx, zl) in z.iter_mut().enumerate() {
                zl.push(self.ir.add_binary(name("z", &[lx + 1, t])));
            }
        }
        let mut a = Vec::with_capacity(self.t_len);
        for t in 1..=self.t_len {
            let at = self.ir.add_var(name("a", &[t]), lo, hi);
            a.push(at);
            let sos: Vec<(usize, f64)> = z.iter().map(|zl| (zl[t - 1], 1.0)).collect();
            self.ir.add_constraint(name("sos", &[t]), sos, Sense::Eq, 1.0);
            let mut link = vec![(at, 1.0)];
            for (lx, zl) in z.iter().enumerate() {
                link.push((zl[t - 1], -levels[lx]));
                let cost = (levels[lx] - ao).abs();
                if cost > 0.0 {
                    self.dev.push((zl[t - 1], cost));
                }
            }
            self.ir.add_constraint(name("alink", &[t]), link, Sense::Eq, 0.0);
        }
        for (jx, job) in spec.jobs.iter().enumerate() {
            let j = jx + 1;
            let mut per_t = Vec::with_capacity(self.t_len);
            for t in 1..=self.t_len {
                let open = t >= job.release;
                let mut terms = Vec::with_capacity(levels.len());
                for (lx, &al) in levels.iter().enumerate() {
                    let w = self.ir.add_var(
                        name("w", &[j, lx + 1, t]),
                        0.0,
                        if open { job.max_rate } else { 0.0 },
                    );
                    if open {
                        self.ir.add_constraint(
                            name("wind", &[j, lx + 1, t]),
                            vec![(w, 1.0), (z[lx][t - 1], -job.max_rate)],
                            Sense::Le,
                            0.0,
                        );
                    }
                    terms.push((w, al / ao));
                }
                per_t.push(terms);
            }
            self.svc.push(per_t);
        }
        self.level_binaries = z;
        a
    }

    /// Unfinished work and the two work-window rows per job.
    fn jobs_block(&mut self) -> Vec<usize> {
        let spec = self.spec;
        let mut ell = Vec::with_capacity(spec.jobs.len());
        for (jx, job) in spec.jobs.iter().enumerate() {
            let j = jx + 1;
            let l = self.ir.add_var(name("ell", &[j]), 0.0, job.work);
            ell.push(l);
            let mut served: Vec<(usize, f64)> = Vec::new();
            for per in &self.svc[jx] {
                served.extend(per.iter().map(|&(c, k)| (c, k * self.dt)));
            }
            let mut lo = served.clone();
            lo.push((l, 1.0));
            self.ir.add_constraint(name("work_lo", &[j]), lo, Sense::Ge, job.work);
            self.ir.add_constraint(name("work_hi", &[j]), served, Sense::Le, job.work);
        }
        ell
    }

    /// Aggregate schedulable-job power per period.
    fn pjob_block(&mut self) -> Vec<usize> {
        let mut pjob = Vec::with_capacity(self.t_len);
        for t in 1..=self.t_len {
            // free: the defining row already keeps it nonnegative
            let p = self.ir.add_var(name("pjob", &[t]), -INF, INF);
            let mut row = vec![(p, 1.0)];
            for per_job in &self.svc {
                row.extend(per_job[t - 1].iter().map(|&(c, k)| (c, -k)));
            }
            self.ir.add_constraint(name("pjob_def", &[t]), row, Sense::Eq, 0.0);
            pjob.push(p);
        }
        pjob
    }

    fn bess_first_stage(&mut self) -> Option<Bess> {
        let spec = self.spec;
        if !spec.has_bess() {
            return None;
        }
        let pa = spec.fleet_charge_cap();
        let pb = spec.fleet_discharge_cap();
        let mut b = Bess {
            ch: vec![],
            dis: vec![],
            res: vec![],
            fup: vec![],
            fdn: vec![],
        };
        for t in 1..=self.t_len {
            // power caps come from chlim/dislim with mode <= 1; repeating them
            // as bounds only adds degenerate vertices
            let ch = self.ir.add_var(name("ch", &[t]), 0.0, INF);
            let dis = self.ir.add_var(name("dis", &[t]), 0.0, INF);
            let res = self.ir.add_var(name("res", &[t]), 0.0, INF);
            let fup = self.ir.add_var(name("fup", &[t]), 0.0, INF);
            let fdn = self.ir.add_var(name("fdn", &[t]), 0.0, INF);
            let (mc, md) = if self.discrete {
                (
                    self.ir.add_binary(name("mode_ch", &[t])),
                    self.ir.add_binary(name("mode_dis", &[t])),
                )
            } else {
                (
                    self.ir.add_var(name("mode_ch", &[t]), 0.0, 1.0),
                    self.ir.add_var(name("mode_dis", &[t]), 0.0, 1.0),
                )
            };
            self.ir.add_constraint(name("chlim", &[t]), vec![(ch, 1.0), (fup, 1.0), (mc, -pa)], Sense::Le, 0.0);
            self.ir.add_constraint(
                name("dislim", &[t]),
                vec![(dis, 1.0), (res, 1.0), (fdn, 1.0), (md, -pb)],
                Sense::Le,
                0.0,
            );
            self.ir.add_constraint(name("excl", &[t]), vec![(mc, 1.0), (md, 1.0)], Sense::Le, 1.0);
            b.ch.push(ch);
            b.dis.push(dis);
            b.res.push(res);
            b.fup.push(fup);
            b.fdn.push(fdn);
        }
        Some(b)
    }

    fn asrev_row(&mut self, asrev: usize, bess: Option<&Bess>) {
        let mut row = vec![(asrev, 1.0)];
        if let Some(b) = bess {
            let p = &self.spec.prices;
            for t in 0..self.t_len {
                row.push((b.res[t], -p.reserve[t] * self.dt));
                row.push((b.fup[t], -p.frp_up[t] * self.dt));
                row.push((b.fdn[t], -p.frp_down[t] * self.dt));
            }
        }
        self.ir.add_constraint("asrev_def".into(), row, Sense::Eq, 0.0);
    }

    fn jobcost_row(&mut self, jobcost: usize, ell: &[usize]) {
        let spec = self.spec;
        let w = &spec.weights;
        let mut row = vec![(jobcost, 1.0)];
        for (jx, job) in spec.jobs.iter().enumerate() {
            for t in (job.deadline + 1)..=self.t_len {
                let k = w.c_tardy * job.weight * (t - job.deadline) as f64 * self.dt;
                row.extend(self.svc[jx][t - 1].iter().map(|&(c, s)| (c, -k * s)));
            }
            row.push((ell[jx], -w.c_unfinished * job.weight * self.dt));
        }
        row.extend(self.dev.iter().map(|&(c, k)| (c, -w.c_dvfs * k)));
        self.ir.add_constraint("jobcost_def".into(), row, Sense::Eq, 0.0);
    }

    #[allow(clippy::too_many_arguments)]
    fn scenario_block(
        &mut self,
        sx: usize,
        a: &[usize],
        pjob: &[usize],
        bess: Option<&Bess>,
        theta: usize,
        asrev: usize,
        jobcost: usize,
    ) {
        let spec = self.spec;
        let sc = &spec.scenarios[sx];
        let s = sx + 1;
        let dt = self.dt;
        let d = &spec.dvfs;
        let ao = d.reference;
        let phi = d.fixed_sensitive_fraction;
        let lim = &spec.limits;
        let mut dcols = Vec::with_capacity(self.t_len);

        // profit[s]: theta - asrev + lambda_c jobcost + energy cost + lambda_d degradation <= 0
        let mut profit = vec![(theta, 1.0), (asrev, -1.0), (jobcost, spec.weights.lambda_job)];

        for t in 1..=self.t_len {
            let i = t - 1;
            let p = self.ir.add_var(name("P", &[s, t]), -INF, spec.dc_power_cap);
            let dvar = self.ir.add_var(name("D", &[s, t]), -INF, INF);
            dcols.push(dvar);

            let mut bal = vec![(p, 1.0), (pjob[i], -1.0)];
            let rhs = if self.discrete {
                for (lx, &al) in d.levels.iter().enumerate() {
                    let k = phi * (al - ao) / ao * sc.fixed_load[i];
                    bal.push((self.level_binaries[lx][i], -k));
                }
                sc.fixed_envelope[i]
            } else {
                bal.push((a[i], -phi * sc.fixed_load[i] / ao));
                sc.fixed_envelope[i] - phi * sc.fixed_load[i]
            };
            self.ir.add_constraint(name("bal", &[s, t]), bal, Sense::Eq, rhs);

            let mut net = vec![(dvar, 1.0), (p, -1.0)];
            if let Some(b) = bess {
                net.push((b.ch[i], -1.0));
                net.push((b.dis[i], 1.0));
            }
            self.ir.add_constraint(name("net", &[s, t]), net, Sense::Eq, 0.0);
            self.ir.add_constraint(name("load", &[s, t]), vec![(dvar, 1.0)], Sense::Le, lim.load_cap);

            if t >= 2 {
                let prev = dcols[i - 1];
                self.ir.add_constraint(name("ramp_up", &[s, t]), vec![(dvar, 1.0), (prev, -1.0)], Sense::Le, lim.ramp_cap);
                self.ir.add_constraint(name("ramp_dn", &[s, t]), vec![(dvar, 1.0), (prev, -1.0)], Sense::Ge, -lim.ramp_cap);
            } else if let Some(d0) = lim.initial_net_load {
                self.ir.add_constraint(name("ramp_up", &[s, t]), vec![(dvar, 1.0)], Sense::Le, d0 + lim.ramp_cap);
                self.ir.add_constraint(name("ramp_dn", &[s, t]), vec![(dvar, 1.0)], Sense::Ge, d0 - lim.ramp_cap);
            }

            let le = spec.prices.energy[i] * dt;
            profit.push((dvar, le));
            if let Some(b) = bess {
                profit.push((b.res[i], -le * sc.deploy_reserve[i]));
                profit.push((b.fup[i], le * sc.deploy_frp_up[i]));
                profit.push((b.fdn[i], -le * sc.deploy_frp_down[i]));
            }
        }

        if let Some(b) = bess {
            let bs = &spec.bess;
            let cap = spec.fleet_energy_cap();
            let (ea, eb) = (bs.eta_charge, bs.eta_discharge);
            let mut prev: Option<usize> = None;
            let mut throughput = Vec::with_capacity(5 * self.t_len);
            for t in 1..=self.t_len {
                let i = t - 1;
                let e = self.ir.add_var(name("EB", &[s, t]), bs.soc_min * cap, bs.soc_max * cap);
                let (bu, bd, br) = (sc.deploy_frp_up[i], sc.deploy_frp_down[i], sc.deploy_reserve[i]);
                let mut row = vec![
                    (e, 1.0),
                    (b.ch[i], -dt * ea),
                    (b.fup[i], -dt * ea * bu),
                    (b.dis[i], dt / eb),
                    (b.fdn[i], dt * bd / eb),
                    (b.res[i], dt * br / eb),
                ];
                let rhs = match prev {
                    Some(pe) => {
                        row.push((pe, -1.0));
                        0.0
                    }
                    None => bs.soc_init * cap,
                };
                self.ir.add_constraint(name("ebal", &[s, t]), row, Sense::Eq, rhs);
                prev = Some(e);
                throughput.extend([
                    (b.ch[i], dt),
                    (b.fup[i], dt * bu),
                    (b.dis[i], dt),
                    (b.res[i], dt * br),
                    (b.fdn[i], dt * bd),
                ]);
            }
            if let (Some(et), Some(frac)) = (prev, bs.soc_terminal) {
                self.ir.add_constraint(name("term", &[s]), vec![(et, 1.0)], Sense::Ge, frac * cap);
            }
            let ellc = self.ir.add_var(name("ellc", &[s]), 0.0, INF);
            throughput.push((ellc, -2.0 * cap));
            self.ir.add_constraint(name("cycle", &[s]), throughput, Sense::Le, 2.0 * cap * bs.cycle_budget);
            profit.push((ellc, spec.weights.lambda_deg * bs.degradation_cost * 2.0 * cap));
        }

        self.ir.add_constraint(name("profit", &[s]), profit, Sense::Le, 0.0);
    }
}
