//! `volcluster`: simulate the market models, run ensembles, analyze price or
//! return series, solve for Kesten exponents and regenerate figure data.

// NaN must fail range checks, so `!(x > 0.0)` is intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use volcluster::config::{resolve_config, RunConfig};
use volcluster::io::{
    analyze_returns, load_column, load_price_csv, write_analysis, write_column, write_path, AnalysisReport, ColumnRef,
    PriceCsvSchema,
};
use volcluster::models::{ModelKind, UnitsConvention};
use volcluster::sim::{run_ensemble, simulate, Ensemble};
use volcluster::stats::{kesten_exponent, nonstationarity_ratio, returns_from_prices, summary_stats, FitOptions, DEFAULT_KESTEN_TOL};
use volcluster::{DistSpec, StatsError};

/// Rolling window for the nonstationarity diagnostic.
const ROLLING_WINDOW: usize = 500;
/// Max/min rolling-std ratio above which a path is flagged nonstationary.
const NONSTATIONARY_RATIO: f64 = 2.0;
const SEED_ENV: &str = "VOLCLUSTER_SEED";

#[derive(Parser, Debug)]
#[command(name = "volcluster", version, about = "News-driven market simulations and stylized-fact analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one path and analyze its returns.
    Simulate(SimulateArgs),
    /// Simulate independent paths and analyze the pooled returns.
    Ensemble(EnsembleArgs),
    /// Analyze a price or return series from CSV.
    Analyze(AnalyzeArgs),
    /// Solve E|c|^alpha = 1 for a coefficient distribution.
    Kesten(KestenArgs),
    /// Regenerate the data behind one of the simulated figures.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// Preset name (fig3, fig4, fig5, fig6, fig7-left, fig7-right, trend) or JSON config file.
    #[arg(long)]
    config: Option<String>,
    /// Model kind: news-driven, trend-following or general.
    #[arg(long)]
    model: Option<String>,
    /// Root seed; falls back to $VOLCLUSTER_SEED, then the config, then a random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of periods T.
    #[arg(long)]
    periods: Option<usize>,
    /// Return units: percent or fraction.
    #[arg(long)]
    units: Option<String>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory.
    #[arg(long, default_value = "run")]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    max_lag: usize,
}

#[derive(Args, Debug)]
struct EnsembleArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Number of paths; defaults to the config's n_paths.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long, default_value = "ensemble")]
    out: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value_t = 100)]
    max_lag: usize,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["prices", "returns"]))]
struct AnalyzeArgs {
    /// CSV file with a price column.
    #[arg(long)]
    prices: Option<PathBuf>,
    /// CSV file with a return column.
    #[arg(long)]
    returns: Option<PathBuf>,
    /// JSON file describing the CSV layout (delimiter, column, date_column, has_header).
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Column name or zero-based index; defaults to `price` or `ret`.
    #[arg(long)]
    column: Option<String>,
    #[arg(long)]
    delimiter: Option<char>,
    /// The file has no header row.
    #[arg(long)]
    no_header: bool,
    #[arg(long, default_value = "percent")]
    units: String,
    #[arg(long, default_value_t = 100)]
    max_lag: usize,
    #[arg(long, default_value = "analysis")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct KestenArgs {
    /// Distribution, e.g. `kind=exponential,mean=0.5`.
    #[arg(long)]
    dist: String,
    #[arg(long, default_value_t = DEFAULT_KESTEN_TOL)]
    tol: f64,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    /// fig3, fig4, fig5, fig6 or fig7.
    #[arg(long)]
    figure: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "reproduce")]
    out: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug)]
enum CliError {
    /// Bad flags or configuration.
    User(String),
    /// Failures while running or reading data.
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::User(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn user(e: impl std::fmt::Display) -> CliError {
    CliError::User(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Files written and the line printed for a finished command.
struct CommandOutcome {
    files: Vec<PathBuf>,
    summary: String,
    /// Outputs were written but the run itself failed (e.g. price floor breach).
    failure: Option<CliError>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Ensemble(a) => cmd_ensemble(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Kesten(a) => cmd_kesten(a),
        Command::Reproduce(a) => cmd_reproduce(a),
    };
    match result {
        Ok(outcome) => {
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{}", outcome.summary);
            for f in &outcome.files {
                let _ = writeln!(out, "wrote {}", f.display());
            }
            match outcome.failure {
                None => ExitCode::SUCCESS,
                Some(e) => {
                    let (CliError::User(msg) | CliError::Runtime(msg)) = &e;
                    eprintln!("error: {msg}");
                    ExitCode::from(e.code())
                }
            }
        }
        Err(e) => {
            let (CliError::User(msg) | CliError::Runtime(msg)) = &e;
            eprintln!("error: {msg}");
            ExitCode::from(e.code())
        }
    }
}

fn default_preset(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::NewsDriven => "fig3",
        ModelKind::TrendFollowing => "trend",
        ModelKind::General => "fig5",
    }
}

/// Layering: preset or file, then command-line flags.
fn build_config(args: &ConfigArgs) -> Result<RunConfig, CliError> {
    let model = args
        .model
        .as_deref()
        .map(|m| ModelKind::parse(m).ok_or_else(|| user(format!("unknown model `{m}`"))))
        .transpose()?;
    let mut cfg = match (&args.config, model) {
        (Some(c), _) => resolve_config(c).map_err(user)?,
        (None, Some(kind)) => RunConfig::preset(default_preset(kind)).map_err(user)?,
        (None, None) => return Err(user("either --config or --model is required")),
    };
    if let Some(kind) = model {
        cfg.model = kind;
    }
    if let Some(t) = args.periods {
        cfg.set_key("T", &json!(t)).map_err(user)?;
    }
    if let Some(u) = &args.units {
        cfg.set_key("units", &json!(u)).map_err(user)?;
    }
    cfg.validate().map_err(user)?;
    Ok(cfg)
}

fn resolve_seed(flag: Option<u64>, config_seed: Option<u64>) -> Result<(u64, &'static str), CliError> {
    if let Some(s) = flag {
        return Ok((s, "flag"));
    }
    if let Ok(v) = std::env::var(SEED_ENV) {
        let s = v
            .trim()
            .parse()
            .map_err(|_| user(format!("{SEED_ENV}=`{v}` is not an unsigned integer")))?;
        return Ok((s, "environment"));
    }
    if let Some(s) = config_seed {
        return Ok((s, "config"));
    }
    Ok((rand::random(), "random"))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_json(value: &Value, out: &Path) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(runtime)?;
    text.push('\n');
    std::fs::write(out, text).map_err(|e| runtime(format!("cannot write {}: {e}", out.display())))?;
    Ok(out.to_path_buf())
}

fn write_config(cfg: &RunConfig, seed: u64, dir: &Path) -> Result<PathBuf, CliError> {
    let mut cfg = cfg.clone();
    cfg.seed = Some(seed);
    let out = dir.join("config.json");
    std::fs::write(&out, cfg.to_json_string()).map_err(|e| runtime(format!("cannot write {}: {e}", out.display())))?;
    Ok(out)
}

fn relative(files: &[PathBuf], dir: &Path) -> Vec<String> {
    files
        .iter()
        .map(|f| f.strip_prefix(dir).unwrap_or(f).display().to_string())
        .collect()
}

fn fmt_fit(report: &AnalysisReport) -> String {
    match &report.fit {
        Some(f) => format!("alpha={:.3} (tail exponent {:.3}, n_tail={})", f.alpha, f.tail_exponent, f.n_tail),
        None => "alpha=n/a".to_string(),
    }
}

struct SingleRun {
    files: Vec<PathBuf>,
    summary: String,
    failure: Option<CliError>,
}

/// Simulate, write the path, config and analysis into `dir`.
fn run_single(cfg: &RunConfig, seed: u64, dir: &Path, max_lag: usize) -> Result<SingleRun, CliError> {
    ensure_dir(dir)?;
    let path = simulate(cfg, seed).map_err(user)?;
    let mut files = vec![write_config(cfg, seed, dir)?];
    let path_csv = dir.join("path.csv");
    write_path(&path, &path_csv).map_err(runtime)?;
    files.push(path_csv);

    let returns = path.returns();
    let mut summary = format!("model={} T={} seed={seed}", cfg.model.as_str(), cfg.horizon);
    let max_lag = max_lag.min(returns.len().saturating_sub(2)).max(1);
    match analyze_returns(&returns, cfg.units, max_lag, &FitOptions::default()) {
        Ok(report) => {
            files.extend(write_analysis(&report, &dir.join("analysis.json")).map_err(runtime)?);
            summary.push_str(&format!(
                " mean(r)={:.4} std(r)={:.4} {}",
                report.summary.mean,
                report.summary.std,
                fmt_fit(&report)
            ));
            if let Ok(ratio) = nonstationarity_ratio(&returns, ROLLING_WINDOW.min(returns.len())) {
                summary.push_str(&format!(" rolling-std ratio={ratio:.2}"));
                if ratio > NONSTATIONARY_RATIO {
                    summary.push_str(" [nonstationary]");
                }
            }
        }
        Err(e) => summary.push_str(&format!(" (analysis skipped: {e})")),
    }
    let failure = path.aborted.as_ref().map(|e| runtime(format!("{e}; partial path written")));
    Ok(SingleRun { files, summary, failure })
}

fn cmd_simulate(args: SimulateArgs) -> Result<CommandOutcome, CliError> {
    let cfg = build_config(&args.config)?;
    let (seed, source) = resolve_seed(args.config.seed, cfg.seed)?;
    if source == "random" {
        println!("seed {seed} (random; pass --seed {seed} to replay)");
    }
    let run = run_single(&cfg, seed, &args.out, args.max_lag)?;
    let mut files = run.files;
    let manifest = json!({
        "command": "simulate",
        "seed": seed,
        "fingerprint": cfg.fingerprint(),
        "files": relative(&files, &args.out),
        "aborted": run.failure.is_some(),
    });
    files.push(write_json(&manifest, &args.out.join("manifest.json"))?);
    Ok(CommandOutcome {
        files,
        summary: run.summary,
        failure: run.failure,
    })
}

fn write_ensemble(ens: &Ensemble, cfg: &RunConfig, dir: &Path, max_lag: usize) -> Result<(Vec<PathBuf>, String), CliError> {
    ensure_dir(dir)?;
    let mut files = vec![write_config(cfg, ens.root_seed, dir)?];
    for p in &ens.paths {
        let out = dir.join(format!("path_{:03}.csv", p.path_index));
        write_path(p, &out).map_err(runtime)?;
        files.push(out);
    }
    let pooled = dir.join("pooled_returns.csv");
    write_column("ret", &ens.pooled_returns, &pooled).map_err(runtime)?;
    files.push(pooled);

    let max_lag = max_lag.min(ens.pooled_returns.len().saturating_sub(2)).max(1);
    let report = analyze_returns(&ens.pooled_returns, cfg.units, max_lag, &FitOptions::default());
    let (pooled_fit, fit_text) = match &report {
        Ok(r) => {
            files.extend(write_analysis(r, &dir.join("pooled_analysis.json")).map_err(runtime)?);
            (serde_json::to_value(r.fit).map_err(runtime)?, fmt_fit(r))
        }
        Err(e) => (Value::Null, format!("pooled analysis skipped: {e}")),
    };
    let averaged = ens.averaged_stats();
    let failed: Vec<u64> = ens.paths.iter().filter(|p| !p.is_complete()).map(|p| p.path_index).collect();
    let summary_doc = json!({
        "root_seed": ens.root_seed,
        "n_paths": ens.paths.len(),
        "paths": ens.summaries,
        "averaged": averaged.map(|(m, s)| json!({"mean_r": m, "std_r": s})),
        "pooled_fit": pooled_fit,
        "failed_paths": failed,
    });
    files.push(write_json(&summary_doc, &dir.join("ensemble.json"))?);
    let mut summary = format!(
        "model={} paths={} T={} seed={}",
        cfg.model.as_str(),
        ens.paths.len(),
        cfg.horizon,
        ens.root_seed
    );
    if let Some((m, s)) = averaged {
        summary.push_str(&format!(" avg mean(r)={m:.4} avg std(r)={s:.4}"));
    }
    summary.push_str(&format!(" pooled {fit_text}"));
    if !failed.is_empty() {
        summary.push_str(&format!(" failed paths: {failed:?}"));
    }
    Ok((files, summary))
}

fn cmd_ensemble(args: EnsembleArgs) -> Result<CommandOutcome, CliError> {
    let cfg = build_config(&args.config)?;
    let n_paths = args.paths.unwrap_or(cfg.n_paths);
    if n_paths == 0 {
        return Err(user("--paths must be >= 1"));
    }
    let (seed, source) = resolve_seed(args.config.seed, cfg.seed)?;
    if source == "random" {
        println!("seed {seed} (random; pass --seed {seed} to replay)");
    }
    let mut cfg = cfg;
    cfg.n_paths = n_paths;
    let ens = run_ensemble(&cfg, n_paths, seed, args.jobs).map_err(user)?;
    let (mut files, summary) = write_ensemble(&ens, &cfg, &args.out, args.max_lag)?;
    let manifest = json!({
        "command": "ensemble",
        "seed": seed,
        "fingerprint": cfg.fingerprint(),
        "files": relative(&files, &args.out),
    });
    files.push(write_json(&manifest, &args.out.join("manifest.json"))?);
    let failure = ens
        .paths
        .iter()
        .find_map(|p| p.aborted.as_ref())
        .map(|e| runtime(format!("at least one path failed ({e}); siblings written")));
    Ok(CommandOutcome { files, summary, failure })
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<CommandOutcome, CliError> {
    let units = UnitsConvention::parse(&args.units).ok_or_else(|| user(format!("unknown units `{}`", args.units)))?;
    let (source, is_prices) = match (&args.prices, &args.returns) {
        (Some(p), None) => (p.clone(), true),
        (None, Some(r)) => (r.clone(), false),
        _ => return Err(user("pass exactly one of --prices or --returns")),
    };
    let mut schema = match &args.schema {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| user(format!("cannot read schema {}: {e}", p.display())))?;
            serde_json::from_str::<PriceCsvSchema>(&text).map_err(|e| user(format!("bad schema: {e}")))?
        }
        None => PriceCsvSchema::named(if is_prices { "price" } else { "ret" }),
    };
    if let Some(c) = &args.column {
        schema.column = ColumnRef::parse(c);
    }
    if let Some(d) = args.delimiter {
        schema.delimiter = d;
    }
    if args.no_header {
        schema.has_header = false;
        if matches!(schema.column, ColumnRef::Name(_)) && args.column.is_none() && args.schema.is_none() {
            schema.column = ColumnRef::Index(0);
        }
    }
    ensure_dir(&args.out)?;
    let mut files = Vec::new();
    let returns = if is_prices {
        let data = load_price_csv(&source, &schema).map_err(runtime)?;
        let r = returns_from_prices(&data.values, units).map_err(runtime)?;
        let out = args.out.join("returns.csv");
        write_column("ret", &r.values, &out).map_err(runtime)?;
        files.push(out);
        r.values
    } else {
        load_column(&source, &schema).map_err(runtime)?.values
    };
    let max_lag = args.max_lag.min(returns.len().saturating_sub(2)).max(1);
    let report = match analyze_returns(&returns, units, max_lag, &FitOptions::default()) {
        Ok(r) => r,
        Err(e @ (StatsError::InsufficientData(_) | StatsError::Degenerate(_))) => {
            let s = summary_stats(&returns).map_err(runtime)?;
            return Ok(CommandOutcome {
                files,
                summary: format!("n={} mean(r)={:.4} std(r)={:.4} (ACF and tail fit skipped: {e})", s.n, s.mean, s.std),
                failure: None,
            });
        }
        Err(e) => return Err(runtime(e)),
    };
    files.extend(write_analysis(&report, &args.out.join("analysis.json")).map_err(runtime)?);
    let summary = format!(
        "n={} mean(r)={:.4} std(r)={:.4} {}",
        report.summary.n,
        report.summary.mean,
        report.summary.std,
        fmt_fit(&report)
    );
    Ok(CommandOutcome {
        files,
        summary,
        failure: None,
    })
}

/// Parse `kind=exponential,mean=0.5` into a distribution.
fn parse_dist(spec: &str) -> Result<DistSpec, CliError> {
    let mut obj = serde_json::Map::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| user(format!("expected key=value in `{part}`")))?;
        let value = match v.parse::<f64>() {
            Ok(x) if k != "kind" => json!(x),
            _ => json!(v),
        };
        obj.insert(k.to_string(), value);
    }
    let d: DistSpec = serde_json::from_value(Value::Object(obj)).map_err(|e| user(format!("bad --dist: {e}")))?;
    d.validate().map_err(|e| user(format!("bad --dist: {e}")))?;
    Ok(d)
}

fn cmd_kesten(args: KestenArgs) -> Result<CommandOutcome, CliError> {
    let dist = parse_dist(&args.dist)?;
    if !(args.tol > 0.0) {
        return Err(user("--tol must be positive"));
    }
    match kesten_exponent(&dist, args.tol) {
        Ok(s) => Ok(CommandOutcome {
            files: vec![],
            summary: format!("alpha = {:.6}\nresidual = {:.3e}", s.alpha, s.residual),
            failure: None,
        }),
        Err(e @ StatsError::Degenerate(_)) => Err(runtime(format!("degenerate distribution: {e}"))),
        Err(e) => Err(runtime(e)),
    }
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<CommandOutcome, CliError> {
    let fig = args.figure.as_str();
    if matches!(fig, "fig1" | "fig2") {
        return Err(user(format!(
            "{fig} shows empirical market data, which is not bundled; run `volcluster analyze --prices <csv>` on your own series"
        )));
    }
    if !matches!(fig, "fig3" | "fig4" | "fig5" | "fig6" | "fig7") {
        return Err(user(format!("unknown figure `{fig}` (expected fig3..fig7)")));
    }
    let (seed, source) = resolve_seed(args.seed, None)?;
    println!("seed {seed} ({source}); published statistics are single draws, so compare at the ensemble level");
    let dir = &args.out;
    ensure_dir(dir)?;
    let panels_single = |sub: &str| {
        let p = |f: &str| if sub.is_empty() { f.to_string() } else { format!("{sub}/{f}") };
        json!({
            "a_price": format!("{}#price", p("path.csv")),
            "b_return": format!("{}#ret", p("path.csv")),
            "c_ccdf": p("analysis_ccdf.csv"),
            "d_acf": p("analysis_acf.csv"),
        })
    };
    let mut files = Vec::new();
    let mut summaries = Vec::new();
    let mut failure = None;
    let panels = match fig {
        "fig3" | "fig5" => {
            let cfg = RunConfig::preset(fig).map_err(user)?;
            let run = run_single(&cfg, seed, dir, 100)?;
            files.extend(run.files);
            summaries.push(run.summary);
            failure = run.failure;
            panels_single("")
        }
        "fig4" | "fig6" => {
            let cfg = RunConfig::preset(fig).map_err(user)?;
            let ens = run_ensemble(&cfg, cfg.n_paths, seed, args.jobs).map_err(user)?;
            let (f, s) = write_ensemble(&ens, &cfg, dir, 100)?;
            files.extend(f);
            summaries.push(s);
            json!({
                "a_price": (0..cfg.n_paths).map(|i| format!("path_{i:03}.csv#price")).collect::<Vec<_>>(),
                "b_return": (0..cfg.n_paths).map(|i| format!("path_{i:03}.csv#ret")).collect::<Vec<_>>(),
                "c_ccdf": "pooled_analysis_ccdf.csv",
                "d_acf": "pooled_analysis_acf.csv",
            })
        }
        _ => {
            let mut panels = serde_json::Map::new();
            for (arm, preset) in [("left", "fig7-left"), ("right", "fig7-right")] {
                let cfg = RunConfig::preset(preset).map_err(user)?;
                let run = run_single(&cfg, seed, &dir.join(arm), 100)?;
                files.extend(run.files);
                summaries.push(format!("{arm}: {}", run.summary));
                failure = failure.or(run.failure);
                panels.insert(arm.to_string(), panels_single(arm));
            }
            Value::Object(panels)
        }
    };
    let presets: Vec<&str> = match fig {
        "fig7" => vec!["fig7-left", "fig7-right"],
        other => vec![other],
    };
    let reference: serde_json::Map<String, Value> = presets
        .iter()
        .map(|p| (p.to_string(), json!(RunConfig::preset_reference(p))))
        .collect();
    let manifest = json!({
        "command": "reproduce",
        "figure": fig,
        "seed": seed,
        "panels": panels,
        "published": reference,
        "files": relative(&files, dir),
    });
    files.push(write_json(&manifest, &dir.join("manifest.json"))?);
    Ok(CommandOutcome {
        files,
        summary: summaries.join("\n"),
        failure,
    })
}
