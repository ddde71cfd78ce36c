//! The `crowdqc` command line: `validate`, `plan`, `analyze` and `serve`.
//!
//! Exit codes: 0 success, 1 domain error (invalid config, planner error,
//! malformed export, no submissions), 2 usage or I/O error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::analytics::{build_report, render_report_markdown, AnalyticsError, ReportOptions};
use crate::config::{lint_clarity, parse_config, validate_config, ConfigError, Severity, TaskConfig};
use crate::ingest::{parse_items, PayloadFormat, Upload};
use crate::planner::{build_units, plan_deployment, DeploymentPlan, Shortfall};
use crate::service::{http, ExportDocument, ServerSettings, Service, SystemClock};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "crowdqc", version, about = "Crowdsourced annotation: plan, serve and check quality")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a config document and lint it for clarity.
    Validate {
        config: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Compute the deployment plan for a config and an items file.
    Plan {
        config: PathBuf,
        items: PathBuf,
        /// Golden pool; when given, units are built and written with --out.
        #[arg(long)]
        golden: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: bool,
        /// Where to write the built units (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the quality report from a JSON export.
    Analyze {
        export: PathBuf,
        /// Print the JSON report instead of Markdown.
        #[arg(long)]
        json: bool,
        /// Write `<out>` (JSON) and `<out>` with a `.md` extension (Markdown).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the task server until interrupted.
    Serve {
        /// Server config file (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn domain(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DOMAIN,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

type CmdResult = Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Validate { config, json } => cmd_validate(&config, json, out),
        Command::Plan {
            config,
            items,
            golden,
            seed,
            json,
            out: out_path,
        } => cmd_plan(&config, &items, golden.as_deref(), seed, json, out_path.as_deref(), out),
        Command::Analyze { export, json, out: out_path } => cmd_analyze(&export, json, out_path.as_deref(), out),
        Command::Serve { config, port, data_dir } => cmd_serve(config.as_deref(), port, data_dir, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> CmdResult {
    fs::write(path, contents).map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<TaskConfig, Failure> {
    parse_config(&read(path)?).map_err(|e| Failure::domain(format!("{}: [{}] {e}", path.display(), e.code())))
}

fn emit(out: &mut dyn Write, text: &str) -> CmdResult {
    out.write_all(text.as_bytes()).map_err(|e| Failure::io(e.to_string()))
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct ValidateOutput<'a> {
    valid: bool,
    violations: &'a [crate::config::Violation],
    findings: &'a [crate::config::Finding],
}

fn cmd_validate(path: &Path, json: bool, out: &mut dyn Write) -> CmdResult {
    let text = read(path)?;
    let config = match parse_config(&text) {
        Ok(config) => config,
        Err(ConfigError::Invalid(violations)) => {
            if json {
                emit(out, &pretty(&ValidateOutput { valid: false, violations: &violations, findings: &[] }))?;
            } else {
                for v in &violations {
                    emit(out, &format!("error  {}: {}\n", v.code, v.message))?;
                }
            }
            return Err(Failure::domain(format!("{} violates {} invariant(s)", path.display(), violations.len())));
        }
        Err(e) => return Err(Failure::domain(format!("{}: [{}] {e}", path.display(), e.code()))),
    };
    let violations = validate_config(&config);
    let lint = lint_clarity(&config);
    let valid = violations.is_empty() && !lint.has_errors();
    if json {
        emit(out, &pretty(&ValidateOutput { valid, violations: &violations, findings: &lint.findings }))?;
    } else {
        for f in &lint.findings {
            let severity = match f.severity {
                Severity::Error => "error",
                Severity::Warning => "warn ",
                Severity::Info => "info ",
            };
            emit(out, &format!("{severity}  {}: {}\n", f.code, f.message))?;
        }
        emit(out, if valid { "ok\n" } else { "invalid\n" })?;
    }
    if valid {
        Ok(())
    } else {
        Err(Failure::domain("config has errors"))
    }
}

#[derive(Serialize)]
struct PlanOutput {
    plan: DeploymentPlan,
    #[serde(skip_serializing_if = "Option::is_none")]
    shortfall: Option<Shortfall>,
}

fn load_items(config: &TaskConfig, path: &Path, golden: bool) -> Result<crate::ingest::Ingested, Failure> {
    let text = read(path)?;
    let existing = Default::default();
    let upload = Upload { config, golden, existing: &existing };
    let ingested = parse_items(&text, PayloadFormat::from_path(path), &upload)
        .map_err(|e| Failure::domain(format!("{}: {e}", path.display())))?;
    if let Some(r) = ingested.rejected.first() {
        return Err(Failure::domain(format!(
            "{}: {} row(s) rejected; row {}: {}",
            path.display(),
            ingested.rejected.len(),
            r.row,
            r.reason
        )));
    }
    Ok(ingested)
}

fn cmd_plan(
    config_path: &Path,
    items_path: &Path,
    golden_path: Option<&Path>,
    seed: Option<u64>,
    json: bool,
    out_path: Option<&Path>,
    out: &mut dyn Write,
) -> CmdResult {
    let mut config = load_config(config_path)?;
    if seed.is_some() {
        config.qc.shuffle_seed = seed;
    }
    let items = load_items(&config, items_path, false)?.items;
    let mut plan = plan_deployment(items.len() as u64, &config.qc, &config.payment)
        .map_err(|e| Failure::domain(format!("[{}] {e}", e.code())))?;
    plan.shuffle_seed = config.qc.shuffle_seed;

    let mut shortfall = None;
    if golden_path.is_some() || out_path.is_some() {
        let golden = match golden_path {
            Some(p) => load_items(&config, p, true)?.golden,
            None => Vec::new(),
        };
        let build = build_units(&items, &golden, &config.qc).map_err(|e| Failure::domain(format!("[{}] {e}", e.code())))?;
        plan.shuffle_seed = Some(build.seed);
        shortfall = build.shortfall;
        if let Some(p) = out_path {
            write_file(p, &pretty(&build.units))?;
        }
    }

    let output = PlanOutput { plan, shortfall };
    if json {
        return emit(out, &pretty(&output));
    }
    let p = &output.plan;
    let dollars = |c: u64| format!("${}.{:02}", c / 100, c % 100);
    let mut rows = vec![
        ("items", p.n_items.to_string()),
        ("fresh items per unit", p.fresh_per_unit.to_string()),
        ("total_units", p.total_units.to_string()),
        ("units per task", p.units_per_task.to_string()),
        ("total_tasks", p.total_tasks.to_string()),
        ("assignments per unit", p.assignments_per_unit.to_string()),
        ("payment per unit", dollars(p.suggested_payment_cents_per_unit)),
        ("total budget", dollars(p.total_budget_cents)),
    ];
    if let Some(seed) = p.shuffle_seed {
        rows.push(("shuffle seed", seed.to_string()));
    }
    if let Some(s) = &output.shortfall {
        rows.push(("shortfall", format!("{} missing {} slot(s)", s.unit_id, s.missing_slots)));
    }
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in rows {
        emit(out, &format!("{k:<width$}  {v}\n"))?;
    }
    Ok(())
}

fn cmd_analyze(path: &Path, json: bool, out_path: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    let doc = ExportDocument::from_json(&read(path)?)
        .map_err(|e| Failure::domain(format!("[malformed-export] {}: {e}", path.display())))?;
    let report = build_report(&doc.project, &ReportOptions::default()).map_err(|e| match e {
        AnalyticsError::NoSubmissions => Failure::domain("[no-submissions] no submissions in export"),
        other => Failure::domain(format!("[malformed-export] [{}] {other}", other.code())),
    })?;
    let report_json = pretty(&report);
    let markdown = render_report_markdown(&report);
    if let Some(p) = out_path {
        write_file(p, &report_json)?;
        write_file(&p.with_extension("md"), &markdown)?;
    }
    emit(out, if json { &report_json } else { &markdown })
}

fn cmd_serve(config: Option<&Path>, port: Option<u16>, data_dir: Option<PathBuf>, out: &mut dyn Write) -> CmdResult {
    let mut settings = ServerSettings::load(config, |k| std::env::var(k).ok())
        .map_err(|e| Failure::io(e.to_string()))?;
    if let Some(port) = port {
        settings.port = port;
    }
    if let Some(dir) = data_dir {
        settings.data_dir = dir;
    }
    let service = Service::open(&settings.data_dir, Arc::new(SystemClock), settings.lease())
        .map_err(|e| Failure::io(format!("cannot open data directory {}: {e}", settings.data_dir.display())))?;

    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::io(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(settings.addr()).await.map_err(|e| {
            if e.kind() == std::io::ErrorKind::AddrInUse {
                Failure::io(format!("[port-in-use] {} is already in use", settings.addr()))
            } else {
                Failure::io(format!("cannot bind {}: {e}", settings.addr()))
            }
        })?;
        let addr = listener.local_addr().map_err(|e| Failure::io(e.to_string()))?;
        emit(out, &format!("listening on http://{addr}\n"))?;
        let _ = out.flush();
        http::serve(listener, Arc::new(service), shutdown_signal())
            .await
            .map_err(|e| Failure::io(e.to_string()))
    })
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
