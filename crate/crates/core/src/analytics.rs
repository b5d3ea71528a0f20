//! Storage economics and interconnection sensitivities.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demo::UnitSpec;
use crate::error::{Error, Result};
use crate::evaluation::replay;
use crate::formulation::{throughput, ModelIR, Schedule};
use crate::model::{InstanceSpec, Scenario};
use crate::solve::{solve_instance, SolveStatus};
use crate::solver::SolverConfig;

/// Capital recovery factor `r(1+r)^N / ((1+r)^N - 1)`; `1/N` at `r = 0`.
pub fn crf(rate: f64, years: u32) -> Result<f64> {
    if !(rate >= 0.0) || years < 1 {
        return Err(Error::domain(format!("crf needs rate >= 0 and years >= 1, got ({rate}, {years})")));
    }
    if rate == 0.0 {
        return Ok(1.0 / years as f64);
    }
    let g = (1.0 + rate).powi(years as i32);
    Ok(rate * g / (g - 1.0))
}

/// Daily value of energy the storage ended the day without.
pub fn soc_depletion_correction(
    e0: f64,
    mean_terminal: f64,
    units: u32,
    unit_energy: f64,
    eta_discharge: f64,
    mean_energy_price: f64,
) -> f64 {
    (e0 - mean_terminal).max(0.0) * units as f64 * unit_energy * eta_discharge * mean_energy_price
}

/// Value added by storage relative to the no-storage baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueAdded {
    pub value_added_raw: f64,
    pub as_revenue: f64,
    pub non_as_raw: f64,
    pub soc_depletion: f64,
    pub value_added_corrected: f64,
}

impl ValueAdded {
    /// Non-AS value after removing the depletion artifact.
    pub fn non_as_corrected(&self) -> f64 {
        self.non_as_raw - self.soc_depletion
    }
}

/// Mean daily objective gain with storage, split into AS and non-AS parts.
pub fn value_added(with: &[f64], without: &[f64], as_revenue: f64, depletion: f64) -> Result<ValueAdded> {
    if with.is_empty() || with.len() != without.len() {
        return Err(Error::domain(format!(
            "objective lists must be non-empty and equal length ({} vs {})",
            with.len(),
            without.len()
        )));
    }
    let raw = with.iter().zip(without).map(|(a, b)| a - b).sum::<f64>() / with.len() as f64;
    Ok(ValueAdded {
        value_added_raw: raw,
        as_revenue,
        non_as_raw: raw - as_revenue,
        soc_depletion: depletion,
        value_added_corrected: raw - depletion,
    })
}

/// Daily value net of the annualized capital charge of `units` units.
pub fn net_value(va: f64, units: u32, unit_cost: f64, rate: f64, years: u32) -> Result<f64> {
    Ok(va - units as f64 * unit_cost * crf(rate, years)? / 365.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueReport {
    pub value_added_raw: f64,
    pub as_revenue: f64,
    pub non_as_raw: f64,
    pub soc_depletion: f64,
    pub value_added_corrected: f64,
    pub net_value: f64,
    pub crf: f64,
    pub units: u32,
    pub mean_terminal_soc: f64,
}

impl ValueReport {
    pub fn new(va: ValueAdded, units: u32, unit_cost: f64, rate: f64, years: u32, mean_terminal_soc: f64) -> Result<Self> {
        Ok(ValueReport {
            value_added_raw: va.value_added_raw,
            as_revenue: va.as_revenue,
            non_as_raw: va.non_as_raw,
            soc_depletion: va.soc_depletion,
            value_added_corrected: va.value_added_corrected,
            net_value: net_value(va.value_added_corrected, units, unit_cost, rate, years)?,
            crf: crf(rate, years)?,
            units,
            mean_terminal_soc,
        })
    }
}

/// Battery throughput (MWh) and equivalent full cycles under `scenario`.
pub fn throughput_efc(schedule: &Schedule, scenario: &Scenario, energy_cap: f64, dt: f64) -> Result<(f64, f64)> {
    if !(energy_cap > 0.0) {
        return Err(Error::domain("energy_cap must be positive"));
    }
    let n = schedule.periods();
    if [
        &scenario.deploy_reserve,
        &scenario.deploy_frp_up,
        &scenario.deploy_frp_down,
    ]
    .iter()
    .any(|s| s.len() != n)
    {
        return Err(Error::domain("scenario length does not match the schedule"));
    }
    let thr = throughput(schedule, scenario, dt);
    Ok((thr, thr / (2.0 * energy_cap)))
}

/// Interconnection limit swept by a sensitivity study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    LoadCap,
    RampCap,
}

impl Axis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "load_cap" | "load" => Ok(Axis::LoadCap),
            "ramp_cap" | "ramp" => Ok(Axis::RampCap),
            other => Err(Error::UnknownName(format!("axis {other:?} (expected load_cap or ramp_cap)"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::LoadCap => "load_cap",
            Axis::RampCap => "ramp_cap",
        }
    }

    fn apply(self, spec: &mut InstanceSpec, value: f64) {
        match self {
            Axis::LoadCap => spec.limits.load_cap = value,
            Axis::RampCap => spec.limits.ramp_cap = value,
        }
    }
}

/// Sum of the shadow prices of an axis' rows over all scenarios and periods,
/// each expressed as the gain per unit relaxation of the limit. For the ramp
/// axis that is the up-row dual plus the negated down-row dual.
pub fn aggregate_duals(ir: &ModelIR, duals: &[f64], axis: Axis) -> Result<f64> {
    if duals.len() != ir.num_constraints() {
        return Err(Error::domain("dual vector does not match the model"));
    }
    let rows = |family: &str| ir.row_family(family);
    let total = match axis {
        Axis::LoadCap => {
            let load = rows("load");
            if load.is_empty() {
                return Err(Error::domain("model has no load rows"));
            }
            load.iter().map(|&i| duals[i]).sum()
        }
        Axis::RampCap => {
            let up = rows("ramp_up");
            let dn = rows("ramp_dn");
            if up.is_empty() && dn.is_empty() {
                return Err(Error::domain("model has no ramp rows"));
            }
            up.iter().map(|&i| duals[i]).sum::<f64>() - dn.iter().map(|&i| duals[i]).sum::<f64>()
        }
    };
    Ok(total)
}

/// One grid value of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityPoint {
    pub axis_value: f64,
    /// Mean and population standard deviation of the optimum over instances.
    pub obj_mean: Option<f64>,
    pub obj_std: Option<f64>,
    /// Mean of `(Z(v + delta) - Z(v)) / delta` over instances.
    pub fd_marginal: Option<f64>,
    /// Mean aggregated dual over instances; absent if any instance had none.
    pub dual_agg: Option<f64>,
    /// Some instance's dual came from a degenerate basis (locally valid only).
    pub degenerate: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub axis: Axis,
    pub delta: f64,
    pub instances: usize,
    pub points: Vec<SensitivityPoint>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
    (m, var.sqrt())
}

struct Cell {
    obj: Option<f64>,
    obj_plus: Option<f64>,
    dual: Option<f64>,
    degenerate: bool,
    note: Option<String>,
}

fn sweep_cell(spec: &InstanceSpec, axis: Axis, value: f64, delta: f64, cfg: &SolverConfig) -> Cell {
    let mut s = spec.clone();
    axis.apply(&mut s, value);
    let mut cell = Cell {
        obj: None,
        obj_plus: None,
        dual: None,
        degenerate: false,
        note: None,
    };
    match solve_instance(&s, cfg) {
        Ok(out) => {
            cell.obj = out.report.objective.filter(|_| out.report.status == SolveStatus::Optimal);
            match out.shadow_prices(cfg) {
                Ok(lp) => {
                    cell.degenerate = lp.degenerate;
                    match aggregate_duals(&out.model, &lp.duals, axis) {
                        Ok(d) => cell.dual = Some(d),
                        Err(e) => cell.note = Some(format!("no dual: {e}")),
                    }
                }
                Err(e) => cell.note = Some(format!("no dual: {e}")),
            }
            if cell.obj.is_none() {
                cell.note = Some(format!("solve ended {:?}", out.report.status));
            }
        }
        Err(e) => cell.note = Some(format!("solve failed: {e}")),
    }
    let mut sp = spec.clone();
    axis.apply(&mut sp, value + delta);
    match solve_instance(&sp, cfg) {
        Ok(out) if out.report.status == SolveStatus::Optimal => cell.obj_plus = out.report.objective,
        Ok(out) => cell.note = Some(format!("solve at value+delta ended {:?}", out.report.status)),
        Err(e) => cell.note = Some(format!("solve at value+delta failed: {e}")),
    }
    cell
}

/// Solve every instance at each grid value and at value + `delta`; report the
/// mean optimum, forward-difference marginal and aggregated shadow price.
/// Per-point failures are recorded in `notes`.
pub fn fd_sensitivity(
    instances: &[InstanceSpec],
    axis: Axis,
    grid: &[f64],
    delta: f64,
    cfg: &SolverConfig,
) -> Result<SensitivityReport> {
    if instances.is_empty() {
        return Err(Error::domain("sensitivity needs at least one instance"));
    }
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("grid must be non-empty and strictly increasing"));
    }
    if !(delta > 0.0) {
        return Err(Error::domain("delta must be positive"));
    }
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..instances.len()).map(move |i| (g, i)))
        .collect();
    let cells: Vec<Cell> = jobs
        .par_iter()
        .map(|&(g, i)| sweep_cell(&instances[i], axis, grid[g], delta, cfg))
        .collect();

    let points = grid
        .iter()
        .enumerate()
        .map(|(g, &value)| {
            let row = &cells[g * instances.len()..(g + 1) * instances.len()];
            let objs: Option<Vec<f64>> = row.iter().map(|c| c.obj).collect();
            let fds: Option<Vec<f64>> = row.iter().map(|c| Some((c.obj_plus? - c.obj?) / delta)).collect();
            let duals: Option<Vec<f64>> = row.iter().map(|c| c.dual).collect();
            let (obj_mean, obj_std) = match &objs {
                Some(v) => {
                    let (m, s) = mean_std(v);
                    (Some(m), Some(s))
                }
                None => (None, None),
            };
            SensitivityPoint {
                axis_value: value,
                obj_mean,
                obj_std,
                fd_marginal: fds.map(|v| mean_std(&v).0),
                dual_agg: duals.map(|v| mean_std(&v).0),
                degenerate: row.iter().any(|c| c.degenerate),
                notes: row
                    .iter()
                    .enumerate()
                    .filter_map(|(i, c)| c.note.as_ref().map(|n| format!("instance {}: {n}", i + 1)))
                    .collect(),
            }
        })
        .collect();
    Ok(SensitivityReport {
        axis,
        delta,
        instances: instances.len(),
        points,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SensitivityReport {
    /// CSV with columns `axis_value,obj_mean,obj_std,fd_marginal,dual_agg`;
    /// missing values are empty.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["axis_value", "obj_mean", "obj_std", "fd_marginal", "dual_agg"])?;
        for p in &self.points {
            w.write_record([
                p.axis_value.to_string(),
                opt(p.obj_mean),
                opt(p.obj_std),
                opt(p.fd_marginal),
                opt(p.dual_agg),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<sweep csv>", e))?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
        let mut s = format!(
            "sweep {}  delta {}  instances {}\n{:>12} {:>16} {:>12} {:>14} {:>14}  flags\n",
            self.axis.label(),
            self.delta,
            self.instances,
            "value",
            "obj_mean",
            "obj_std",
            "fd_marginal",
            "dual_agg"
        );
        for p in &self.points {
            s.push_str(&format!(
                "{:>12.3} {:>16} {:>12} {:>14} {:>14}  {}\n",
                p.axis_value,
                f(p.obj_mean),
                f(p.obj_std),
                f(p.fd_marginal),
                f(p.dual_agg),
                if p.degenerate { "locally valid only" } else { "" }
            ));
        }
        s
    }
}

/// Parameters of a fleet-sizing study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SizingConfig {
    pub units: Vec<UnitSpec>,
    pub fleet_sizes: Vec<u32>,
    pub cycle_limits: Vec<f64>,
    pub rates: Vec<f64>,
    pub years: u32,
    /// Drop the terminal SOC requirement in every cell.
    pub free_terminal: bool,
}

impl Default for SizingConfig {
    fn default() -> Self {
        SizingConfig {
            units: vec![UnitSpec::megapack_3(), UnitSpec::megapack_2xl()],
            fleet_sizes: (0..=20).collect(),
            cycle_limits: vec![1.0],
            rates: vec![0.07, 0.10],
            years: 20,
            free_terminal: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingCell {
    pub technology: String,
    pub units: u32,
    pub cycle_limit: f64,
    pub rate: f64,
    pub value: Option<ValueReport>,
    pub note: Option<String>,
}

/// Fleet-sizing table; one row per (technology, n, cycle limit, rate).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingTable {
    /// Unit templates the table was computed for.
    pub units: Vec<UnitSpec>,
    pub baseline_objectives: Vec<f64>,
    pub cells: Vec<SizingCell>,
}

impl SizingTable {
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record([
            "technology",
            "units",
            "cycle_limit",
            "rate",
            "value_added_raw",
            "as_revenue",
            "non_as_raw",
            "soc_depletion",
            "value_added",
            "net_value",
            "mean_terminal_soc",
            "note",
        ])?;
        for c in &self.cells {
            let v = c.value.as_ref();
            let g = |f: fn(&ValueReport) -> f64| opt(v.map(f));
            w.write_record([
                c.technology.clone(),
                c.units.to_string(),
                c.cycle_limit.to_string(),
                c.rate.to_string(),
                g(|v| v.value_added_raw),
                g(|v| v.as_revenue),
                g(|v| v.non_as_raw),
                g(|v| v.soc_depletion),
                g(|v| v.value_added_corrected),
                g(|v| v.net_value),
                g(|v| v.mean_terminal_soc),
                c.note.clone().unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<sizing csv>", e))?;
        Ok(())
    }
}

struct DayResult {
    objective: f64,
    as_revenue: f64,
    mean_terminal_soc: f64,
}

fn solve_day(spec: &InstanceSpec, cfg: &SolverConfig) -> Result<DayResult> {
    let out = solve_instance(spec, cfg)?;
    match (out.report.status, out.report.objective, &out.schedule, &out.report.breakdown) {
        (SolveStatus::Optimal | SolveStatus::GapLimit, Some(obj), Some(sch), Some(bd)) => {
            let mut term = 0.0;
            for s in &spec.scenarios {
                term += replay(sch, s, spec)?.soc.last().copied().unwrap_or(0.0);
            }
            Ok(DayResult {
                objective: obj,
                as_revenue: bd.as_revenue(),
                mean_terminal_soc: term / spec.scenarios.len() as f64,
            })
        }
        (status, ..) => Err(Error::domain(format!("solve ended {status:?}"))),
    }
}

fn sizing_spec(day: &InstanceSpec, unit: &UnitSpec, n: u32, cycles: f64, free_terminal: bool) -> InstanceSpec {
    let mut s = day.clone();
    s.bess = unit.to_bess(&day.bess);
    s.bess.cycle_budget = cycles;
    if free_terminal {
        s.bess.soc_terminal = None;
    }
    s.bess_units = n;
    s
}

/// Solve the no-storage baseline once per day, then every sizing cell, and
/// price each cell's value added and net value. Failed cells carry a note.
pub fn sizing_study(days: &[InstanceSpec], cfg_sizing: &SizingConfig, cfg: &SolverConfig) -> Result<SizingTable> {
    if days.is_empty() {
        return Err(Error::domain("sizing needs at least one day instance"));
    }
    let baseline: Vec<f64> = days
        .par_iter()
        .map(|d| {
            let mut s = d.clone();
            s.bess_units = 0;
            solve_day(&s, cfg).map(|r| r.objective)
        })
        .collect::<Result<_>>()?;

    let mut combos = Vec::new();
    for unit in &cfg_sizing.units {
        for &n in &cfg_sizing.fleet_sizes {
            for &cyc in &cfg_sizing.cycle_limits {
                combos.push((unit, n, cyc));
            }
        }
    }
    let solved: Vec<Result<Vec<DayResult>>> = combos
        .par_iter()
        .map(|&(unit, n, cyc)| {
            days.iter()
                .map(|d| solve_day(&sizing_spec(d, unit, n, cyc, cfg_sizing.free_terminal), cfg))
                .collect()
        })
        .collect();

    let mut cells = Vec::new();
    for ((unit, n, cyc), res) in combos.iter().zip(solved) {
        for &rate in &cfg_sizing.rates {
            let mut cell = SizingCell {
                technology: unit.name.clone(),
                units: *n,
                cycle_limit: *cyc,
                rate,
                value: None,
                note: None,
            };
            match &res {
                Ok(day_res) => {
                    let with: Vec<f64> = day_res.iter().map(|r| r.objective).collect();
                    let k = day_res.len() as f64;
                    let as_rev = day_res.iter().map(|r| r.as_revenue).sum::<f64>() / k;
                    let e_t = day_res.iter().map(|r| r.mean_terminal_soc).sum::<f64>() / k;
                    let bess = unit.to_bess(&days[0].bess);
                    let price = days.iter().map(|d| d.prices.mean_energy()).sum::<f64>() / k;
                    let dep = if *n == 0 {
                        0.0
                    } else {
                        soc_depletion_correction(bess.soc_init, e_t, *n, unit.energy_mwh, bess.eta_discharge, price)
                    };
                    let va = value_added(&with, &baseline, as_rev, dep)?;
                    cell.value = Some(ValueReport::new(va, *n, unit.unit_cost, rate, cfg_sizing.years, e_t)?);
                }
                Err(e) => cell.note = Some(e.to_string()),
            }
            cells.push(cell);
        }
    }
    Ok(SizingTable {
        units: cfg_sizing.units.clone(),
        baseline_objectives: baseline,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn crf_values() {
        assert_eq!(crf(1.0, 1).unwrap(), 2.0);
        assert_abs_diff_eq!(crf(0.0, 10).unwrap(), 0.1, epsilon = 1e-15);
        // 0.07 * 1.07^20 / (1.07^20 - 1), 1.07^20 = 3.869684...
        let g = 3.869_684_462_809_4_f64;
        assert_abs_diff_eq!(crf(0.07, 20).unwrap(), 0.07 * g / (g - 1.0), epsilon = 1e-9);
        assert_abs_diff_eq!(crf(0.07, 20).unwrap(), 0.094393, epsilon = 1e-5);
        assert!(crf(-0.1, 10).is_err());
        assert!(crf(0.05, 0).is_err());
    }

    #[test]
    fn depletion_examples() {
        assert_eq!(soc_depletion_correction(0.6, 0.6, 1, 36.0, 0.9, 50.0), 0.0);
        assert_abs_diff_eq!(soc_depletion_correction(0.6, 0.5, 1, 36.0, 0.9, 50.0), 162.0, epsilon = 1e-9);
        assert_eq!(soc_depletion_correction(0.5, 0.7, 3, 36.0, 0.9, 50.0), 0.0);
    }

    #[test]
    fn value_added_examples() {
        let z = value_added(&[5.0], &[5.0], 0.0, 0.0).unwrap();
        assert_eq!((z.value_added_raw, z.non_as_raw, z.value_added_corrected), (0.0, 0.0, 0.0));
        let v = value_added(&[-223530.0], &[-228418.0], 0.0, 0.0).unwrap();
        assert_eq!(v.value_added_raw, 4888.0);
        let s = value_added(&[7756.0], &[0.0], 3230.0, 0.0).unwrap();
        assert_eq!(s.non_as_raw, 4526.0);
        assert!(value_added(&[1.0, 2.0], &[1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn value_identity_holds() {
        let v = value_added(&[310.0, 290.0], &[100.0, 120.0], 75.0, 12.5).unwrap();
        assert_abs_diff_eq!(v.value_added_corrected, v.as_revenue + v.non_as_corrected(), epsilon = 1e-12);
        assert_abs_diff_eq!(v.value_added_corrected, v.value_added_raw - v.soc_depletion, epsilon = 1e-12);
    }

    #[test]
    fn net_value_examples() {
        assert_eq!(net_value(123.0, 0, 1e6, 0.07, 20).unwrap(), 123.0);
        assert_eq!(net_value(0.0, 1, 365.0, 0.0, 1).unwrap(), -1.0);
        let nv = net_value(7756.0, 20, 1.0e6, 0.07, 20).unwrap();
        assert!((nv - 2584.0).abs() <= 15.0, "{nv}");
    }

    #[test]
    fn efc_conventions() {
        let spec = crate::demo::demo_small();
        let mut sch = Schedule::idle(&spec);
        let mut sc = spec.scenarios[0].clone();
        sc.deploy_reserve = vec![0.0; 6];
        sc.deploy_frp_up = vec![0.0; 6];
        sc.deploy_frp_down = vec![0.0; 6];
        assert_eq!(throughput_efc(&sch, &sc, 36.0, 1.0).unwrap(), (0.0, 0.0));
        sch.bess_charge[0] = 12.0;
        sch.bess_charge[1] = 12.0;
        sch.bess_charge[2] = 12.0;
        sch.bess_discharge[3] = 18.0;
        sch.bess_discharge[4] = 18.0;
        assert_eq!(throughput_efc(&sch, &sc, 36.0, 1.0).unwrap(), (72.0, 1.0));
        let mut r = Schedule::idle(&spec);
        r.reserve_offer[0] = 12.0;
        sc.deploy_reserve[0] = 0.5;
        let (thr, efc) = throughput_efc(&r, &sc, 36.0, 1.0).unwrap();
        assert_eq!(thr, 6.0);
        assert_abs_diff_eq!(efc, 1.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn axis_names() {
        assert_eq!(Axis::parse("load_cap").unwrap(), Axis::LoadCap);
        assert_eq!(Axis::parse("ramp").unwrap(), Axis::RampCap);
        assert!(Axis::parse("voltage").is_err());
    }
}
