//! `nomo-lab`: variational treatments of solvable 1-D harmonic few-body
//! models, with exact and grid-based cross-checks.
//!
//! Exit codes are part of the contract: 0 success, 1 failed verification,
//! 2 argument/config parse trouble, 3 invalid model, 4 non-convergence,
//! 5 output I/O failure, 6 unsupported request.

mod config;
mod render;

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use config::ModelConfig;
use nomo_core::sweep::{SweepRow, SweepSpec, run_sweep};
use nomo_core::transform::CoordinateTransform;
use nomo_core::variational::{
    AnsatzFamily, MinimizeOptions, NomoResult, Variant, run_variant,
};
use nomo_core::verify::{VerifyLevel, run_checks};

#[derive(Parser)]
#[command(
    name = "nomo-lab",
    version,
    about = "Variational treatments of solvable harmonic few-body models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one model and report every requested treatment
    Solve(SolveArgs),
    /// Sweep the two-spring family over a coupling range
    Sweep(SweepArgs),
    /// Marginal internal-coordinate density of an absolute-frame optimum
    Marginal(MarginalArgs),
    /// Run the built-in self-check battery
    Verify(VerifyArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Csv,
    Json,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MachineFormat {
    Csv,
    Json,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Human,
    Json,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Level {
    Quick,
    Full,
}

#[derive(Args)]
struct SolveArgs {
    /// Coupling of the two-spring family
    #[arg(long, conflicts_with = "config", allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Path to a JSON model document
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated treatments: exact, tf, tc, ctc, rel-unc
    #[arg(long, default_value = "exact,tf,tc,ctc,rel-unc")]
    variant: String,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Write the report to this path instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    /// Seed for multistart minimization
    #[arg(long)]
    seed: Option<u64>,
    /// Include the center-of-mass transform in the report
    #[arg(long)]
    dump_transform: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.0)]
    lambda_min: f64,
    #[arg(long, default_value_t = 5.0)]
    lambda_max: f64,
    #[arg(long, default_value_t = 101)]
    steps: usize,
    /// Comma-separated treatments: exact, tf, tc, ctc, rel-unc
    #[arg(long, default_value = "exact,tf,tc,ctc,rel-unc")]
    variant: String,
    /// Cross-check every point against a coarse grid diagonalization
    #[arg(long)]
    grid_check: bool,
    #[arg(long, value_enum, default_value_t = MachineFormat::Csv)]
    format: MachineFormat,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct MarginalArgs {
    #[arg(long, conflicts_with = "config", allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Treatment whose optimal state to marginalize (tf or tc)
    #[arg(long)]
    variant: String,
    #[arg(long, value_enum, default_value_t = ReportFormat::Human)]
    format: ReportFormat,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also report the transform and the re-expressed exponent before
    /// integration
    #[arg(long)]
    dump_transform: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Level::Quick)]
    level: Level,
    #[arg(long, value_enum, default_value_t = ReportFormat::Human)]
    format: ReportFormat,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Fault-injection hook for testing the harness itself: rescales the
    /// springs fed to the variational side
    #[arg(long, hide = true, default_value_t = 1.0)]
    tamper_potential: f64,
}

struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

/// Map library errors onto the exit-code contract: convergence trouble is
/// its own code, everything else from the solvers means the model was bad.
fn core_err(e: nomo_core::Error) -> Failure {
    use nomo_core::Error::*;
    match e {
        NonConvergent { .. } | DidNotConverge { .. } => fail(4, e.to_string()),
        Precondition(_) => fail(2, e.to_string()),
        _ => fail(3, e.to_string()),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match configure_threads().and_then(|()| run(cli)) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    std::process::exit(code);
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("NOMO_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        fail(
            2,
            format!("NOMO_LAB_THREADS must be a nonnegative integer, got '{raw}'"),
        )
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| fail(2, format!("could not size the thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Marginal(args) => cmd_marginal(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn load_config(lambda: Option<f64>, path: &Option<PathBuf>) -> Result<ModelConfig, Failure> {
    match (lambda, path) {
        (Some(l), None) => Ok(ModelConfig::lambda(l)),
        (None, Some(p)) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| fail(2, format!("cannot read {}: {e}", p.display())))?;
            ModelConfig::parse(&text).map_err(|e| fail(2, e))
        }
        _ => Err(fail(2, "provide exactly one of --lambda or --config")),
    }
}

fn parse_variants(list: &str) -> Result<Vec<Variant>, Failure> {
    let mut out = Vec::new();
    for token in list.split(',') {
        let v = Variant::from_str(token).map_err(|e| fail(2, e.to_string()))?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(fail(2, "at least one variant is required"));
    }
    Ok(out)
}

fn write_report(output: &Option<PathBuf>, content: &str) -> Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| fail(5, format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn transform_json(t: &CoordinateTransform) -> serde_json::Value {
    serde_json::to_value(t).expect("transform serialization is infallible")
}

fn options_with_seed(seed: Option<u64>) -> MinimizeOptions {
    MinimizeOptions {
        multistart_seed: seed,
        ..MinimizeOptions::default()
    }
}

fn row_from_results(lambda: f64, results: &[NomoResult]) -> SweepRow {
    let mut row = SweepRow {
        lambda,
        exact: None,
        tf: None,
        tc: None,
        ctc: None,
        rel_unc: None,
        tf_alpha: None,
        tf_beta: None,
        tc_alpha: None,
        tc_beta: None,
        exact_alpha: None,
        exact_beta: None,
        tf_tcm: None,
        converged: true,
    };
    for r in results {
        row.converged &= r.converged;
        match r.variant {
            Variant::Exact => {
                row.exact = Some(r.energy);
                row.exact_alpha = r.marginal.map(|m| m.alpha);
                row.exact_beta = r.marginal.map(|m| m.beta);
            }
            Variant::Tf => {
                row.tf = Some(r.energy);
                row.tf_alpha = r.marginal.map(|m| m.alpha);
                row.tf_beta = r.marginal.map(|m| m.beta);
                row.tf_tcm = Some(r.tcm_expectation);
            }
            Variant::Tc => {
                row.tc = Some(r.energy);
                row.tc_alpha = r.marginal.map(|m| m.alpha);
                row.tc_beta = r.marginal.map(|m| m.beta);
            }
            Variant::Ctc => row.ctc = Some(r.energy),
            Variant::RelUnc => row.rel_unc = Some(r.energy),
        }
    }
    row
}

#[derive(Serialize)]
struct SolveDoc {
    model: ModelConfig,
    results: Vec<NomoResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transform: Option<serde_json::Value>,
}

fn cmd_solve(args: SolveArgs) -> Result<i32, Failure> {
    let cfg = load_config(args.lambda, &args.config)?;
    let model = cfg.build().map_err(core_err)?;
    let variants = parse_variants(&args.variant)?;
    let options = options_with_seed(args.seed);
    let mut results = Vec::new();
    for v in &variants {
        results.push(run_variant(&model, *v, &options).map_err(core_err)?);
    }
    let stragglers: Vec<&str> = results
        .iter()
        .filter(|r| !r.converged)
        .map(|r| r.variant.name())
        .collect();
    let transform = if args.dump_transform {
        Some(CoordinateTransform::heavy_center(&model, 0).map_err(core_err)?)
    } else {
        None
    };
    let content = match args.format {
        Format::Human => {
            let mut text = render::results_table(&cfg.describe(), &results);
            if let Some(t) = &transform {
                text.push_str(&format!("\ncenter-of-mass transform (id {}):\n", t.id()));
                text.push_str(&render::matrix_block(t.matrix(), "  "));
                text.push_str("inverse:\n");
                text.push_str(&render::matrix_block(t.inverse(), "  "));
            }
            text
        }
        Format::Json => {
            let doc = SolveDoc {
                model: cfg.clone(),
                results: results.clone(),
                transform: transform.as_ref().map(transform_json),
            };
            let mut s = serde_json::to_string_pretty(&doc)
                .map_err(|e| fail(5, format!("serialization failed: {e}")))?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let Some(lambda) = cfg.family_lambda() else {
                return Err(fail(
                    6,
                    "CSV rows are keyed by the family coupling; use --format json for \
                     explicit models",
                ));
            };
            render::sweep_csv(&[row_from_results(lambda, &results)])
        }
    };
    write_report(&args.output, &content)?;
    if stragglers.is_empty() {
        Ok(0)
    } else {
        eprintln!(
            "warning: treatment(s) did not converge: {}",
            stragglers.join(", ")
        );
        Ok(4)
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<i32, Failure> {
    let spec = SweepSpec {
        lambda_min: args.lambda_min,
        lambda_max: args.lambda_max,
        steps: args.steps,
        variants: parse_variants(&args.variant)?,
        grid_check: args.grid_check,
        seed: args.seed,
    };
    let rows = run_sweep(&spec).map_err(core_err)?;
    let content = match args.format {
        MachineFormat::Csv => render::sweep_csv(&rows),
        MachineFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows)
                .map_err(|e| fail(5, format!("serialization failed: {e}")))?;
            s.push('\n');
            s
        }
    };
    write_report(&args.output, &content)?;
    Ok(0)
}

#[derive(Serialize)]
struct MarginalDoc {
    model: ModelConfig,
    variant: Variant,
    params: Vec<f64>,
    exponent: Vec<Vec<f64>>,
    alpha: Option<f64>,
    beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reexpressed: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transform: Option<serde_json::Value>,
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn cmd_marginal(args: MarginalArgs) -> Result<i32, Failure> {
    let variant = Variant::from_str(&args.variant).map_err(|e| fail(2, e.to_string()))?;
    if !matches!(variant, Variant::Tf | Variant::Tc) {
        return Err(fail(
            6,
            format!(
                "'{variant}' keeps no redundant center-of-mass coordinate; \
                 the marginal is defined for tf and tc"
            ),
        ));
    }
    let cfg = load_config(args.lambda, &args.config)?;
    let model = cfg.build().map_err(core_err)?;
    let res = run_variant(&model, variant, &options_with_seed(args.seed)).map_err(core_err)?;
    if !res.converged {
        return Err(fail(
            4,
            format!("{variant} minimization did not converge; marginal would be meaningless"),
        ));
    }
    let state = AnsatzFamily::ProductAbsolute
        .trial_state(&model, &res.params)
        .map_err(core_err)?;
    let t = CoordinateTransform::heavy_center(&model, 0).map_err(core_err)?;
    let anchored = state
        .density()
        .reexpress(&t.anchored_map(0).map_err(core_err)?)
        .map_err(core_err)?;
    let marginal = anchored.marginalize(&[0]).map_err(core_err)?;
    let ab = marginal.alpha_beta().ok();
    let content = match args.format {
        ReportFormat::Human => {
            let mut text = format!(
                "{}\n{} marginal over the internal coordinates (particle 0 integrated out)\n",
                cfg.describe(),
                variant
            );
            text.push_str(&format!(
                "optimal widths: {}\n",
                res.params
                    .iter()
                    .map(|p| render::fmt_sig(*p, 9))
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
            text.push_str("marginal exponent matrix:\n");
            text.push_str(&render::matrix_block(marginal.exponent(), "  "));
            match &ab {
                Some(ab) => {
                    text.push_str(&format!("alpha = {}\n", render::fmt_sig(ab.alpha, 9)));
                    text.push_str(&format!("beta  = {}\n", render::fmt_sig(ab.beta, 9)));
                }
                None => text.push_str(
                    "alpha/beta read-off undefined (needs two symmetric internal coordinates)\n",
                ),
            }
            if args.dump_transform {
                text.push_str("\nexponent re-expressed in the anchored frame, before integration:\n");
                text.push_str(&render::matrix_block(anchored.exponent(), "  "));
                text.push_str(&format!("center-of-mass transform (id {}):\n", t.id()));
                text.push_str(&render::matrix_block(t.matrix(), "  "));
            }
            text
        }
        ReportFormat::Json => {
            let doc = MarginalDoc {
                model: cfg.clone(),
                variant,
                params: res.params.clone(),
                exponent: matrix_rows(marginal.exponent()),
                alpha: ab.map(|m| m.alpha),
                beta: ab.map(|m| m.beta),
                reexpressed: args
                    .dump_transform
                    .then(|| matrix_rows(anchored.exponent())),
                transform: args.dump_transform.then(|| transform_json(&t)),
            };
            let mut s = serde_json::to_string_pretty(&doc)
                .map_err(|e| fail(5, format!("serialization failed: {e}")))?;
            s.push('\n');
            s
        }
    };
    write_report(&args.output, &content)?;
    Ok(0)
}

#[derive(Serialize)]
struct VerifyDoc {
    level: String,
    passed: usize,
    failed: usize,
    checks: Vec<nomo_core::verify::CheckResult>,
}

fn cmd_verify(args: VerifyArgs) -> Result<i32, Failure> {
    let level = match args.level {
        Level::Quick => VerifyLevel::Quick,
        Level::Full => VerifyLevel::Full,
    };
    let checks = run_checks(level, args.tamper_potential).map_err(core_err)?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    let content = match args.format {
        ReportFormat::Human => render::checks_table(&checks),
        ReportFormat::Json => {
            let doc = VerifyDoc {
                level: match level {
                    VerifyLevel::Quick => "quick".to_string(),
                    VerifyLevel::Full => "full".to_string(),
                },
                passed: checks.len() - failed,
                failed,
                checks,
            };
            let mut s = serde_json::to_string_pretty(&doc)
                .map_err(|e| fail(5, format!("serialization failed: {e}")))?;
            s.push('\n');
            s
        }
    };
    write_report(&args.output, &content)?;
    Ok(if failed == 0 { 0 } else { 1 })
}
