//! `pcraft`: scenario files in, CSV tables out.

mod config;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pcraft_core::avail::{self, ClusterSpec};
use pcraft_core::integrity::{self, build_integrity_model, derive_integrity_rates};
use pcraft_core::perf::{degradation_ratios, mean_ratios, parse_benchmark_csv, saturation_throughput};
use pcraft_core::planner::{self, PlanRequest, PlanTemplate, SweepRow};
use pcraft_core::sim::simulate_ctmc;
use pcraft_core::{Deployment, NodeVariant, Technique};
use thiserror::Error;

use config::{ConfigError, ScenarioConfig};

#[derive(Parser, Debug)]
#[command(name = "pcraft", version, about = "Capacity planning for dependable clusters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Saturation throughput and degradation ratios from benchmark curves.
    Ingest {
        /// Benchmark curve as APPLICATION:VARIANT=PATH; repeatable.
        #[arg(long = "curve", value_name = "APP:VARIANT=PATH", required = true)]
        curves: Vec<String>,
        /// Acceptable mean latency in ms (or `latency_threshold_ms` in the config).
        #[arg(long)]
        latency_threshold_ms: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Availability of one cluster configuration per node variant.
    Avail {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Correct / corrupt / down time of a single node.
    Integrity {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimal over-provisioning meeting the availability target.
    Plan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the planning tables and figure series, one CSV each.
    Sweep {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Shared settings (target_nines, sert_multiplier, search_cap, ...).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated subset of: table2a, table2b, table3, single_node, cluster, integrity.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
    /// Monte Carlo estimate of a configured cluster's availability.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        replications: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Compute(#[from] pcraft_core::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

type Table = csv::Writer<Box<dyn Write>>;

fn open_out(out: Option<&Path>) -> Result<Table, CliError> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(File::create(p).map_err(|e| io_err(p, e))?),
        None => Box::new(io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}

fn write_row<I, S>(w: &mut Table, row: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(row).map_err(|e| CliError::Io(e.to_string()))
}

fn finish(mut w: Table) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

fn fmt_avail(a: f64) -> String {
    format!("{a:.12}")
}

fn fmt_nines(n: f64) -> String {
    format!("{n:.4}")
}

fn load(path: Option<&Path>) -> Result<ScenarioConfig, CliError> {
    Ok(match path {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    })
}

fn ingest(curves: &[String], threshold: Option<f64>, cfg: &ScenarioConfig, out: Option<&Path>) -> Result<(), CliError> {
    let threshold = threshold.or(cfg.latency_threshold_ms).ok_or_else(|| {
        CliError::Usage("a latency threshold is required: --latency-threshold-ms or latency_threshold_ms".into())
    })?;
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(CliError::Usage(format!("latency threshold must be > 0, got {threshold}")));
    }
    // application -> (variant, nodt), in first-seen order
    let mut apps: Vec<(String, Vec<(NodeVariant, f64)>)> = Vec::new();
    for spec in curves {
        let (tag, path) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--curve expects APP:VARIANT=PATH, got {spec:?}")))?;
        let (app, variant) = tag
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("--curve expects APP:VARIANT=PATH, got {spec:?}")))?;
        let variant: NodeVariant = variant.parse().map_err(|e: pcraft_core::Error| CliError::Usage(e.to_string()))?;
        let path = Path::new(path);
        let file = File::open(path).map_err(|e| io_err(path, e))?;
        let curve = parse_benchmark_csv(file)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
            .tagged(app, variant);
        let nodt = saturation_throughput(&curve, threshold)?;
        match apps.iter_mut().find(|(a, _)| a == app) {
            Some((_, v)) => v.push((variant, nodt)),
            None => apps.push((app.to_string(), vec![(variant, nodt)])),
        }
    }

    let mut w = open_out(out)?;
    write_row(&mut w, ["application", "variant", "nodt", "ratio"])?;
    let mut profiles = Vec::new();
    for (app, entries) in &apps {
        let has_native = entries.iter().any(|(v, _)| *v == NodeVariant::Native);
        let profile = if has_native { Some(degradation_ratios(entries)?) } else { None };
        for (v, nodt) in entries {
            let ratio = profile.as_ref().and_then(|p| p.ratio(*v)).map(|r| r.to_string()).unwrap_or_default();
            write_row(&mut w, [app.clone(), v.to_string(), nodt.to_string(), ratio])?;
        }
        profiles.extend(profile);
    }
    // averages only make sense when every application has the same variants
    if profiles.len() == apps.len() {
        if let Ok(mean) = mean_ratios(&profiles) {
            for (v, r) in mean {
                write_row(&mut w, ["mean".to_string(), v.to_string(), String::new(), r.to_string()])?;
            }
        }
    }
    finish(w)
}

fn base_nodes(cfg: &ScenarioConfig, variant: NodeVariant) -> Result<u32, CliError> {
    let sert = ScenarioConfig::require(cfg.sert_multiplier, "sert_multiplier")?;
    let ratio = cfg.profile().ratio(variant).expect("profile covers every variant");
    Ok(planner::required_base_nodes(sert, ratio)?)
}

fn cluster_spec(cfg: &ScenarioConfig, variant: NodeVariant) -> Result<ClusterSpec, CliError> {
    let technique = ScenarioConfig::require(cfg.technique, "technique")?;
    let deployment = ScenarioConfig::require(cfg.deployment, "deployment")?;
    let base = base_nodes(cfg, variant)?;
    let extra = cfg.extra_nodes.unwrap_or(0);
    Ok(match technique {
        Technique::PassiveFailover => ClusterSpec::pf(deployment, base, extra),
        Technique::ActiveRouteAnywhere => ClusterSpec::ara(deployment, base, extra),
    })
}

fn avail_cmd(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<(), CliError> {
    let rates = cfg.avail_rates()?;
    let horizon = cfg.horizon_or_year();
    let mut w = open_out(out)?;
    write_row(&mut w, ["variant", "technique", "deployment", "base", "extra", "availability", "nines", "downtime_hours"])?;
    for v in cfg.variants()? {
        let spec = cluster_spec(cfg, v)?;
        let rep = avail::evaluate(&spec, &rates, horizon)?;
        write_row(
            &mut w,
            [
                v.to_string(),
                spec.technique.to_string(),
                spec.deployment.to_string(),
                spec.num.to_string(),
                spec.extra().to_string(),
                fmt_avail(rep.availability),
                fmt_nines(rep.nines),
                format!("{:.6}", rep.downtime_hours),
            ],
        )?;
    }
    finish(w)
}

fn integrity_cmd(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<(), CliError> {
    let deployment = ScenarioConfig::require(cfg.deployment, "deployment")?;
    let per_month = ScenarioConfig::require(cfg.transient_rate_per_month, "transient_rate_per_month")?;
    let horizon = cfg.horizon_or_month();
    let mut w = open_out(out)?;
    write_row(&mut w, ["variant", "deployment", "transient_rate_per_month", "correct", "corrupt", "down"])?;
    for v in cfg.variants()? {
        let rates = derive_integrity_rates(v, per_month * 12.0, &cfg.split(v), &cfg.recovery_times(deployment))?;
        let rep = integrity::integrity_breakdown(&build_integrity_model(&rates, deployment)?, horizon)?;
        write_row(
            &mut w,
            [
                v.to_string(),
                deployment.to_string(),
                per_month.to_string(),
                fmt_avail(rep.correct),
                fmt_avail(rep.corrupt),
                fmt_avail(rep.down),
            ],
        )?;
    }
    finish(w)
}

fn plan_request(cfg: &ScenarioConfig, variant: NodeVariant) -> Result<PlanRequest, CliError> {
    let technique = ScenarioConfig::require(cfg.technique, "technique")?;
    let deployment = ScenarioConfig::require(cfg.deployment, "deployment")?;
    let mut req = PlanRequest::new(variant, deployment, technique, cfg.avail_rates()?);
    req.sert_multiplier = ScenarioConfig::require(cfg.sert_multiplier, "sert_multiplier")?;
    req.target_nines = ScenarioConfig::require(cfg.target_nines, "target_nines")?;
    req.throughput_ratio = cfg.profile().ratio(variant).expect("profile covers every variant");
    req.horizon = cfg.horizon_or_year();
    if let Some(cap) = cfg.search_cap {
        req.search_cap = cap;
    }
    Ok(req)
}

fn plan_cmd(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<(), CliError> {
    let requests = cfg.variants()?.into_iter().map(|v| plan_request(cfg, v)).collect::<Result<Vec<_>, _>>()?;
    let rows = planner::sweep(requests, planner::plan_capacity)?;
    let mut w = open_out(out)?;
    write_row(&mut w, ["variant", "base", "extra", "availability", "nines", "feasible"])?;
    for row in rows {
        let r = row.outcome?;
        write_row(
            &mut w,
            [
                r.variant.to_string(),
                r.base.to_string(),
                r.extra.to_string(),
                fmt_avail(r.availability),
                fmt_nines(r.nines),
                r.feasible.to_string(),
            ],
        )?;
    }
    finish(w)
}

fn template(cfg: &ScenarioConfig) -> PlanTemplate {
    let mut t = PlanTemplate::default();
    if let Some(x) = cfg.sert_multiplier {
        t.sert_multiplier = x;
    }
    if let Some(x) = cfg.target_nines {
        t.target_nines = x;
    }
    if let Some(h) = cfg.horizon_hours {
        t.horizon = h * pcraft_core::units::HOUR;
    }
    if let Some(c) = cfg.search_cap {
        t.search_cap = c;
    }
    if let Some(p) = cfg.recovery_policy {
        t.policy = p;
    }
    t.profile = cfg.profile();
    t
}

fn status<R>(row: &SweepRow<impl Sized, R>) -> String {
    match &row.outcome {
        Ok(_) => "ok".into(),
        Err(e) => format!("error: {e}"),
    }
}

fn write_plan_table(path: &Path, rows: &[SweepRow<planner::PlanCell, planner::PlanResult>]) -> Result<(), CliError> {
    let mut w = open_out(Some(path))?;
    write_row(
        &mut w,
        [
            "variant",
            "deployment",
            "technique",
            "hw_crash_per_year",
            "crash_recovery_seconds",
            "pool_repair_hours",
            "base",
            "extra",
            "availability",
            "nines",
            "feasible",
            "status",
        ],
    )?;
    for row in rows {
        let c = &row.cell;
        let mut rec = vec![
            c.variant.to_string(),
            c.deployment.to_string(),
            c.technique.to_string(),
            c.hw_crash_per_year.to_string(),
            c.failover_seconds.to_string(),
            c.pool_repair_hours.map(|h| h.to_string()).unwrap_or_default(),
        ];
        match &row.outcome {
            Ok(r) => rec.extend([
                r.base.to_string(),
                r.extra.to_string(),
                fmt_avail(r.availability),
                fmt_nines(r.nines),
                r.feasible.to_string(),
            ]),
            Err(_) => rec.extend(std::iter::repeat_n(String::new(), 5)),
        }
        rec.push(status(row));
        write_row(&mut w, rec)?;
    }
    finish(w)
}

fn write_avail_series(path: &Path, rows: &[SweepRow<planner::AvailCell, avail::AvailabilityReport>]) -> Result<(), CliError> {
    let mut w = open_out(Some(path))?;
    write_row(
        &mut w,
        ["deployment", "num", "hw_crash_per_year", "crash_recovery_seconds", "availability", "nines", "downtime_hours", "status"],
    )?;
    for row in rows {
        let c = &row.cell;
        let recovery = if c.deployment == Deployment::Cloud { c.failover_seconds.to_string() } else { String::new() };
        let mut rec = vec![c.deployment.to_string(), c.num.to_string(), c.hw_crash_per_year.to_string(), recovery];
        match &row.outcome {
            Ok(r) => rec.extend([fmt_avail(r.availability), fmt_nines(r.nines), format!("{:.6}", r.downtime_hours)]),
            Err(_) => rec.extend(std::iter::repeat_n(String::new(), 3)),
        }
        rec.push(status(row));
        write_row(&mut w, rec)?;
    }
    finish(w)
}

fn write_integrity_series(
    path: &Path,
    rows: &[SweepRow<planner::IntegrityCell, integrity::IntegrityReport>],
) -> Result<(), CliError> {
    let mut w = open_out(Some(path))?;
    write_row(&mut w, ["variant", "deployment", "transient_rate_per_month", "correct", "corrupt", "down", "status"])?;
    for row in rows {
        let c = &row.cell;
        let mut rec = vec![c.variant.to_string(), c.deployment.to_string(), format!("{:.6}", c.transient_per_year / 12.0)];
        match &row.outcome {
            Ok(r) => rec.extend([fmt_avail(r.correct), fmt_avail(r.corrupt), fmt_avail(r.down)]),
            Err(_) => rec.extend(std::iter::repeat_n(String::new(), 3)),
        }
        rec.push(status(row));
        write_row(&mut w, rec)?;
    }
    finish(w)
}

const SWEEPS: [&str; 6] = ["table2a", "table2b", "table3", "single_node", "cluster", "integrity"];

fn sweep_cmd(out: &Path, only: &[String], cfg: &ScenarioConfig) -> Result<(), CliError> {
    for name in only {
        if !SWEEPS.contains(&name.as_str()) {
            return Err(CliError::Usage(format!("unknown sweep {name:?}; expected one of {}", SWEEPS.join(", "))));
        }
    }
    let wanted = |name: &str| only.is_empty() || only.iter().any(|o| o == name);
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let tpl = template(cfg);
    if wanted("table2a") {
        let rows = planner::plan_sweep(planner::ara_table_cells(Deployment::Cloud), &tpl)?;
        write_plan_table(&out.join("table2a.csv"), &rows)?;
    }
    if wanted("table2b") {
        let rows = planner::plan_sweep(planner::ara_table_cells(Deployment::OnPremises), &tpl)?;
        write_plan_table(&out.join("table2b.csv"), &rows)?;
    }
    if wanted("table3") {
        let rows = planner::plan_sweep(planner::pf_table_cells(), &tpl)?;
        write_plan_table(&out.join("table3.csv"), &rows)?;
    }
    if wanted("single_node") {
        let rows = planner::avail_sweep(planner::single_node_cells(), tpl.horizon)?;
        write_avail_series(&out.join("single_node.csv"), &rows)?;
    }
    if wanted("cluster") {
        let rows = planner::avail_sweep(planner::cluster_cells(30), tpl.horizon)?;
        write_avail_series(&out.join("cluster.csv"), &rows)?;
    }
    if wanted("integrity") {
        let rows = planner::integrity_sweep(planner::integrity_cells())?;
        write_integrity_series(&out.join("integrity.csv"), &rows)?;
    }
    Ok(())
}

fn simulate_cmd(cfg: &ScenarioConfig, replications: usize, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    if replications < 2 {
        return Err(CliError::Usage("--replications must be at least 2".into()));
    }
    let rates = cfg.avail_rates()?;
    let horizon = cfg.horizon_or_year();
    let mut w = open_out(out)?;
    write_row(
        &mut w,
        ["variant", "base", "extra", "analytic", "sim_mean", "ci_half_width", "replications", "seed", "covered"],
    )?;
    for v in cfg.variants()? {
        let spec = cluster_spec(cfg, v)?;
        let model = avail::build_model(&spec, &rates)?;
        let analytic = avail::availability(&model, &spec, horizon)?.availability;
        let est = simulate_ctmc(&model, &avail::available_reward(&model, &spec), horizon, replications, seed)?
            .per_unit_time(horizon);
        write_row(
            &mut w,
            [
                v.to_string(),
                spec.num.to_string(),
                spec.extra().to_string(),
                fmt_avail(analytic),
                fmt_avail(est.mean),
                format!("{:.3e}", est.ci_half_width),
                est.replications.to_string(),
                est.seed.to_string(),
                est.covers(analytic).to_string(),
            ],
        )?;
    }
    finish(w)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest { curves, latency_threshold_ms, config, out } => {
            ingest(&curves, latency_threshold_ms, &load(config.as_deref())?, out.as_deref())
        }
        Command::Avail { config, out } => avail_cmd(&ScenarioConfig::load(&config)?, out.as_deref()),
        Command::Integrity { config, out } => integrity_cmd(&ScenarioConfig::load(&config)?, out.as_deref()),
        Command::Plan { config, out } => plan_cmd(&ScenarioConfig::load(&config)?, out.as_deref()),
        Command::Sweep { out, config, only } => sweep_cmd(&out, &only, &load(config.as_deref())?),
        Command::Simulate { config, replications, seed, out } => {
            simulate_cmd(&ScenarioConfig::load(&config)?, replications, seed, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pcraft: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
