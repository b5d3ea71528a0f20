//! The `gridforge` command line.
//!
//! Exit codes: 0 success (optimal), 1 error or usage problem, 2 infeasible,
//! 3 a solver limit was hit before optimality was proven.

mod document;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use log::{error, info};
use serde_json::json;

pub use document::{apply_override, load, load_generator, Document, RunManifest, BUNDLED};
use document::OutDir;

use crate::analytics::{fd_sensitivity, sizing_study, Axis};
use crate::error::{Error, Result};
use crate::evaluation::{oos_evaluate, oos_traces};
use crate::formulation::{build_model, Schedule};
use crate::scenario::generate_scenarios;
use crate::solve::{solve_instance, SolveReport};

#[derive(Debug, Parser)]
#[command(name = "gridforge", version, about = "Robust day-ahead scheduling of data-center load and battery storage")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Instance JSON file, or a bundled name (demo_small, demo_day).
    #[arg(long = "instance", short = 'i')]
    pub instances: Vec<String>,
    /// Output directory.
    #[arg(long, short = 'o', default_value = "out")]
    pub out: PathBuf,
    /// Dotted-path override, e.g. `bess.energy_cap=36`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Replaces `generator.seed` before scenarios are synthesized.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for independent solves and replays.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance; writes schedule.json, report.json, summary.txt.
    Solve(Common),
    /// Interconnection-limit sweep with finite differences and shadow prices.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// load_cap or ramp_cap.
        #[arg(long)]
        axis: String,
        /// Comma-separated, strictly increasing limit values.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        /// Finite-difference step.
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
    },
    /// Battery fleet sizing study (value added and net value per cell).
    Sizing(Common),
    /// Out-of-sample violation statistics of the solved (or cached) schedule.
    Oos {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        /// Also write one trace CSV per sample under traces/.
        #[arg(long)]
        traces: bool,
    },
    /// Synthesize scenarios from an instance's or a standalone generator.
    GenScenarios(Common),
    /// Write the deterministic-equivalent model in LP text format.
    ExportLp(Common),
}

/// Parse `args` and run; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli, argv) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            1
        }
    }
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Solve(c) | Command::Sizing(c) | Command::GenScenarios(c) | Command::ExportLp(c) => c,
        Command::Sweep { common, .. } | Command::Oos { common, .. } => common,
    }
}

fn one_instance(c: &Common) -> Result<Document> {
    match c.instances.as_slice() {
        [one] => load(one, &c.overrides, c.seed),
        [] => Err(Error::domain("--instance is required")),
        _ => Err(Error::domain("this command takes exactly one --instance")),
    }
}

/// Run a parsed command line.
pub fn run(cli: Cli, argv: Vec<String>) -> Result<i32> {
    let c = common(&cli.command).clone();
    if let Some(n) = c.jobs {
        // A pool may already exist when embedded; that is not an error here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match cli.command {
        Command::Solve(_) => cmd_solve(&c, argv),
        Command::Sweep { axis, grid, delta, .. } => cmd_sweep(&c, argv, &axis, &grid, delta),
        Command::Sizing(_) => cmd_sizing(&c, argv),
        Command::Oos { samples, traces, .. } => cmd_oos(&c, argv, samples, traces),
        Command::GenScenarios(_) => cmd_gen_scenarios(&c, argv),
        Command::ExportLp(_) => cmd_export_lp(&c, argv),
    }
}

/// Human-readable summary of a solve.
pub fn summary_text(report: &SolveReport, schedule: Option<&Schedule>) -> String {
    let f = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
    let mut s = String::new();
    let _ = writeln!(s, "status            {:?}", report.status);
    let _ = writeln!(s, "dvfs mode         {:?}", report.mode);
    let _ = writeln!(s, "worst-case profit {}", f(report.objective));
    let _ = writeln!(s, "bound             {}", f(report.bound));
    let _ = writeln!(s, "gap               {}", f(report.gap));
    let _ = writeln!(
        s,
        "model             {} vars, {} rows, {} binaries",
        report.model.variables, report.model.constraints, report.model.binaries
    );
    let _ = writeln!(
        s,
        "search            {} nodes, {} LP iterations, {:.2} s",
        report.nodes, report.lp_iterations, report.elapsed_s
    );
    if report.degenerate {
        let _ = writeln!(s, "duals             locally valid only (degenerate basis)");
    }
    if let Some(b) = &report.breakdown {
        let _ = writeln!(s, "reserve revenue   {:.2}", b.reserve_revenue);
        let _ = writeln!(s, "frp revenue       {:.2}", b.frp_revenue);
        let _ = writeln!(s, "job cost          {:.2}", b.job_cost);
        let _ = writeln!(s, "worst scenario    {}", b.worst_scenario);
        let _ = writeln!(s, "{:>9} {:>14} {:>14} {:>12}", "scenario", "profit", "energy_cost", "degradation");
        for (k, p) in b.per_scenario_profit.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:>9} {:>14.2} {:>14.2} {:>12.2}",
                k + 1,
                p,
                b.energy_cost_s[k],
                b.degradation_cost_s[k]
            );
        }
    }
    if let Some(sch) = schedule {
        let _ = writeln!(s, "{:>9} {:>6} {:>10} {:>8} {:>8} {:>8}", "period", "dvfs", "job_power", "charge", "dischg", "reserve");
        for i in 0..sch.periods() {
            let _ = writeln!(
                s,
                "{:>9} {:>6.3} {:>10.3} {:>8.3} {:>8.3} {:>8.3}",
                i + 1,
                sch.dvfs[i],
                sch.job_power(i),
                sch.bess_charge[i],
                sch.bess_discharge[i],
                sch.reserve_offer[i]
            );
        }
        let _ = writeln!(s, "{:>20} {:>12}", "job", "unfinished");
        for (id, l) in sch.job_ids.iter().zip(&sch.unfinished) {
            let _ = writeln!(s, "{id:>20} {l:>12.4}");
        }
    }
    let _ = writeln!(s, "in-sample violations {}", report.in_sample_violations);
    s
}

fn cmd_solve(c: &Common, argv: Vec<String>) -> Result<i32> {
    let mut out = OutDir::create(&c.out)?;
    let doc = match one_instance(c) {
        Ok(d) => d,
        Err(e) => {
            out.write_json("report.json", &json!({"status": "error", "message": e.to_string()}))?;
            return Err(e);
        }
    };
    let manifest = RunManifest::new("solve", argv, &[&doc], &c.overrides, c.seed);
    let outcome = match solve_instance(&doc.spec, &doc.solver) {
        Ok(o) => o,
        Err(e) => {
            out.write_json("report.json", &json!({"status": "error", "message": e.to_string()}))?;
            out.finish(manifest)?;
            return Err(e);
        }
    };
    let r = &outcome.report;
    info!("solve finished: {:?}, objective {:?}", r.status, r.objective);
    if let Some(s) = &outcome.schedule {
        out.write_json("schedule.json", s)?;
    }
    out.write_json("report.json", r)?;
    out.write("summary.txt", summary_text(r, outcome.schedule.as_ref()).as_bytes())?;
    out.finish(manifest)?;
    print!("{}", summary_text(r, None));
    Ok(r.status.exit_code())
}

fn cmd_sweep(c: &Common, argv: Vec<String>, axis: &str, grid: &[f64], delta: f64) -> Result<i32> {
    let axis = Axis::parse(axis)?;
    if c.instances.is_empty() {
        return Err(Error::domain("--instance is required"));
    }
    let docs = c
        .instances
        .iter()
        .map(|i| load(i, &c.overrides, c.seed))
        .collect::<Result<Vec<_>>>()?;
    let specs: Vec<_> = docs.iter().map(|d| d.spec.clone()).collect();
    let report = fd_sensitivity(&specs, axis, grid, delta, &docs[0].solver)?;
    let mut out = OutDir::create(&c.out)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    out.write("sweep.csv", &csv)?;
    out.write_json("sweep.json", &report)?;
    out.write("sweep.txt", report.to_text().as_bytes())?;
    let refs: Vec<&Document> = docs.iter().collect();
    out.finish(RunManifest::new("sweep", argv, &refs, &c.overrides, c.seed))?;
    print!("{}", report.to_text());
    Ok(0)
}

fn cmd_sizing(c: &Common, argv: Vec<String>) -> Result<i32> {
    if c.instances.is_empty() {
        return Err(Error::domain("--instance is required"));
    }
    let docs = c
        .instances
        .iter()
        .map(|i| load(i, &c.overrides, c.seed))
        .collect::<Result<Vec<_>>>()?;
    let specs: Vec<_> = docs.iter().map(|d| d.spec.clone()).collect();
    let table = sizing_study(&specs, &docs[0].sizing, &docs[0].solver)?;
    let mut out = OutDir::create(&c.out)?;
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    out.write("sizing.csv", &csv)?;
    out.write_json("sizing.json", &table)?;
    let refs: Vec<&Document> = docs.iter().collect();
    out.finish(RunManifest::new("sizing", argv, &refs, &c.overrides, c.seed))?;
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(0)
}

fn cmd_oos(c: &Common, argv: Vec<String>, samples: usize, traces: bool) -> Result<i32> {
    if samples < 1 {
        return Err(Error::domain("--samples must be at least 1"));
    }
    let doc = one_instance(c)?;
    let generator = doc
        .generator
        .clone()
        .ok_or_else(|| Error::domain("out-of-sample evaluation needs a `generator` section in the instance"))?;
    let mut out = OutDir::create(&c.out)?;
    let cached = out.path("schedule.json");
    let schedule: Schedule = if cached.exists() {
        info!("reusing {}", cached.display());
        let bytes = std::fs::read(&cached).map_err(|e| Error::io(&cached, e))?;
        serde_json::from_slice(&bytes)?
    } else {
        let outcome = solve_instance(&doc.spec, &doc.solver)?;
        let code = outcome.report.status.exit_code();
        out.write_json("report.json", &outcome.report)?;
        match outcome.schedule {
            Some(s) => {
                out.write_json("schedule.json", &s)?;
                s
            }
            None => {
                out.finish(RunManifest::new("oos", argv, &[&doc], &c.overrides, c.seed))?;
                return Ok(code);
            }
        }
    };
    let report = oos_evaluate(&schedule, &doc.spec, &generator, samples)?;
    out.write_json("oos_report.json", &report)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "value"])?;
    for (k, v) in [
        ("sample_count", report.sample_count as f64),
        ("period_violation_rate_load", report.period_violation_rate_load),
        ("period_violation_rate_ramp", report.period_violation_rate_ramp),
        ("scenario_incidence_load", report.scenario_incidence_load),
        ("scenario_incidence_ramp", report.scenario_incidence_ramp),
        ("max_exceedance_load", report.max_exceedance_load),
        ("max_exceedance_ramp", report.max_exceedance_ramp),
        ("soc_violation_rate", report.soc_violation_rate),
    ] {
        w.write_record([k.to_string(), v.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    out.write("oos_report.csv", &bytes)?;
    if traces {
        let dir = out.path("traces");
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (k, tr) in oos_traces(&schedule, &doc.spec, &generator, samples)?.iter().enumerate() {
            let mut buf = Vec::new();
            tr.write_csv(&mut buf)?;
            out.write(&format!("traces/sample_{:04}.csv", k + 1), &buf)?;
        }
    }
    out.finish(RunManifest::new("oos", argv, &[&doc], &c.overrides, c.seed))?;
    println!(
        "load violation rate {:.4}%, ramp violation rate {:.4}% over {} samples",
        100.0 * report.period_violation_rate_load,
        100.0 * report.period_violation_rate_ramp,
        report.sample_count
    );
    Ok(0)
}

fn cmd_gen_scenarios(c: &Common, argv: Vec<String>) -> Result<i32> {
    let source = match c.instances.as_slice() {
        [one] => one.clone(),
        _ => return Err(Error::domain("gen-scenarios takes exactly one --instance")),
    };
    let mut out = OutDir::create(&c.out)?;
    let (g, grid, cap, sha) = match load(&source, &c.overrides, c.seed) {
        Ok(doc) => {
            let g = doc
                .generator
                .ok_or_else(|| Error::domain("instance has no `generator` section"))?;
            (g, doc.spec.grid, doc.spec.dc_power_cap, doc.sha256)
        }
        Err(Error::Json(_)) => load_generator(&source, &c.overrides, c.seed)?,
        Err(e) => return Err(e),
    };
    let scenarios = generate_scenarios(&g, &grid, cap)?;
    out.write_json("scenarios.json", &scenarios)?;
    out.write_json("generator.json", &g)?;
    let mut m = RunManifest::new("gen-scenarios", argv, &[], &c.overrides, c.seed);
    m.instances.push(document::InstanceRecord { source, sha256: sha });
    m.generator_seeds.push(Some(g.seed));
    out.finish(m)?;
    println!("wrote {} scenarios of {} periods", scenarios.len(), grid.periods);
    Ok(0)
}

fn cmd_export_lp(c: &Common, argv: Vec<String>) -> Result<i32> {
    let doc = one_instance(c)?;
    crate::model::validate_instance(&doc.spec).map_err(Error::Invalid)?;
    let ir = build_model(&doc.spec)?;
    let mut out = OutDir::create(&c.out)?;
    out.write("model.lp", ir.to_lp_text().as_bytes())?;
    out.finish(RunManifest::new("export-lp", argv, &[&doc], &c.overrides, c.seed))?;
    println!(
        "wrote model.lp: {} variables, {} constraints, {} binaries",
        ir.num_vars(),
        ir.num_constraints(),
        ir.num_integer()
    );
    Ok(0)
}
