//! Command-line front end: model ingestion from JSON files, command
//! dispatch, JSON/CSV emission, and the SVG figure.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 degenerate eigenvalue gap,
//! 3 non-convergence (results still written, flagged), 4 oracle failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use eigenderiv::builtin::{figure_data, ExampleId, FigureRow};
use eigenderiv::criteria::{
    definition_check, prop1_certificate, prop2_certificate, Certificate, CertificateKind,
    CertificateStatus,
};
use eigenderiv::modelio::{fmt_f64, ModelKind, ModelSpec};
use eigenderiv::oracle::{convergence_study, truncate_model, ConvergenceReport, DenseModel};
use eigenderiv::{
    delta_derivative, residual_check, Error, FieldTag, PerturbedModel, TailReport,
    TruncationPolicy,
};

const MAX_TERMS_ENV: &str = "EIGENDERIV_MAX_TERMS";
const DISPLAY_CAP: usize = 32;

#[derive(Parser)]
#[command(
    name = "eigenderiv",
    version,
    about = "First-order eigenvalue and eigenvector perturbations in eigenbasis coordinates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Path to a JSON model file
    #[arg(long, conflicts_with = "builtin")]
    model: Option<PathBuf>,
    /// Name of a built-in model: paper_example_1 or paper_example_2
    #[arg(long)]
    builtin: Option<String>,
}

#[derive(Args)]
struct PolicyArgs {
    /// Truncation budget for infinite series (default 2^20; env EIGENDERIV_MAX_TERMS)
    #[arg(long)]
    max_terms: Option<usize>,
    /// Relative stabilization tolerance for doubling blocks
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Minimum admissible relative eigenvalue gap
    #[arg(long)]
    gap_min: Option<f64>,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the full result to this file (stdout shows a capped view)
    #[arg(long)]
    out: Option<PathBuf>,
    /// File format for --out
    #[arg(long, value_parser = ["json", "csv"], default_value = "json")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Compute Lambda_i and the Delta_i coefficient series
    Compute {
        #[command(flatten)]
        model: ModelArgs,
        /// Eigenvalue index (1-based)
        #[arg(long)]
        index: usize,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evaluate the existence certificates (definition, prop1, prop2)
    Check {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        index: usize,
        /// Asserted operator norm bound for the sufficient conditions
        #[arg(long)]
        norm_bound: Option<f64>,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evaluate the residual identity defect at step h
    Residual {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        index: usize,
        /// Perturbation step
        #[arg(long)]
        h: f64,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Finite-difference convergence study against the analytic derivatives
    Oracle {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        index: usize,
        /// Comma-separated decreasing step sizes
        #[arg(long, default_value = "1e-2,5e-3,2.5e-3")]
        h_list: String,
        /// Finite-section size, required for builtin models
        #[arg(long)]
        truncate: Option<usize>,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Tabulate ||Delta_i|| over an index range as CSV and an SVG chart
    Figure {
        #[command(flatten)]
        model: ModelArgs,
        /// Index range LO..HI (inclusive)
        range: String,
        #[command(flatten)]
        policy: PolicyArgs,
        /// CSV output path
        #[arg(long)]
        out_csv: Option<PathBuf>,
        /// SVG output path
        #[arg(long)]
        out_svg: Option<PathBuf>,
    },
}

enum CliError {
    Usage(String),
    Io(String),
    Lib(Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Lib(e) => match e {
                Error::DegenerateGap { .. } => 2,
                Error::NewtonDivergence { .. } | Error::SingularBorderedSystem => 4,
                _ => 1,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Io(m) => m.clone(),
            CliError::Lib(e) => e.to_string(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful outputs; anything else is usage.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli.command) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}

fn load_spec(args: &ModelArgs) -> Result<ModelSpec, CliError> {
    match (&args.model, &args.builtin) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
            Ok(ModelSpec::parse(&text)?)
        }
        (None, Some(name)) => {
            let id = ExampleId::from_name(name).ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown builtin model {name:?}; use paper_example_1 or paper_example_2"
                ))
            })?;
            Ok(ModelSpec::builtin(id))
        }
        _ => Err(CliError::Usage(
            "exactly one of --model or --builtin is required".into(),
        )),
    }
}

fn resolve_policy(args: &PolicyArgs) -> Result<TruncationPolicy, CliError> {
    let mut policy = TruncationPolicy::default();
    if let Ok(raw) = std::env::var(MAX_TERMS_ENV) {
        policy.max_terms = raw.parse().map_err(|_| {
            CliError::Usage(format!("{MAX_TERMS_ENV}={raw:?} is not a valid term count"))
        })?;
    }
    if let Some(n) = args.max_terms {
        policy.max_terms = n;
    }
    if let Some(t) = args.rel_tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage("--rel-tol must be a finite positive number".into()));
        }
        policy.rel_tol = t;
    }
    if policy.max_terms == 0 {
        return Err(CliError::Usage("--max-terms must be positive".into()));
    }
    Ok(policy)
}

fn build_model(spec: &ModelSpec, policy_args: &PolicyArgs) -> Result<PerturbedModel, CliError> {
    let mut spec = spec.clone();
    if let Some(g) = policy_args.gap_min {
        if !(g > 0.0 && g.is_finite()) {
            return Err(CliError::Usage("--gap-min must be a finite positive number".into()));
        }
        spec.gap_min = g;
    }
    Ok(spec.build()?)
}

fn scalar_json(c: Complex64, field: FieldTag) -> Value {
    match field {
        FieldTag::Real => json!(c.re),
        FieldTag::Complex => json!([c.re, c.im]),
    }
}

fn tail_json(t: &TailReport) -> Value {
    json!({
        "terms_used": t.terms_used,
        "last_block_delta": t.last_block_delta,
        "converged": t.converged,
        "monotone_tail_bound": t.monotone_tail_bound,
        "block_ratio": t.block_ratio,
    })
}

fn policy_json(p: &TruncationPolicy) -> Value {
    json!({
        "initial_terms": p.initial_terms,
        "max_terms": p.max_terms,
        "rel_tol": p.rel_tol,
        "growth_factor": p.growth_factor,
    })
}

fn run_result(command: &str, fingerprint: &str, outputs: Value, started: Instant) -> Value {
    json!({
        "command": command,
        "fingerprint": fingerprint,
        "wall_time_ms": started.elapsed().as_secs_f64() * 1e3,
        "outputs": outputs,
    })
}

fn print_result(result: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(result).expect("result serializes")
    );
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::Io(format!("cannot rename to {}: {e}", path.display())))
}

fn run(command: Command) -> Result<i32, CliError> {
    let started = Instant::now();
    match command {
        Command::Compute {
            model,
            index,
            policy,
            output,
        } => cmd_compute(&model, index, &policy, &output, started),
        Command::Check {
            model,
            index,
            norm_bound,
            policy,
            output,
        } => cmd_check(&model, index, norm_bound, &policy, &output, started),
        Command::Residual {
            model,
            index,
            h,
            policy,
            output,
        } => cmd_residual(&model, index, h, &policy, &output, started),
        Command::Oracle {
            model,
            index,
            h_list,
            truncate,
            policy,
            output,
        } => cmd_oracle(&model, index, &h_list, truncate, &policy, &output, started),
        Command::Figure {
            model,
            range,
            policy,
            out_csv,
            out_svg,
        } => cmd_figure(&model, &range, &policy, out_csv, out_svg, started),
    }
}

fn compute_outputs(
    spec: &ModelSpec,
    index: usize,
    result: &eigenderiv::EigenderivativeResult,
    cap: Option<usize>,
) -> Value {
    let field = spec.field;
    let shown: Vec<Value> = result
        .delta
        .coefficients()
        .take(cap.unwrap_or(usize::MAX))
        .map(|(j, c)| json!({ "j": j, "value": scalar_json(c, field) }))
        .collect();
    json!({
        "index": index,
        "lambda_derivative": scalar_json(result.lambda_derivative, field),
        "delta_norm": result.delta.norm(),
        "delta_support": result.delta.support_len(),
        "delta_coefficients": shown,
        "delta_coefficients_truncated_for_display":
            cap.map(|c| result.delta.support_len() > c).unwrap_or(false),
        "tail": tail_json(result.delta.tail()),
        "policy": policy_json(&result.policy_used),
    })
}

fn cmd_compute(
    model_args: &ModelArgs,
    index: usize,
    policy_args: &PolicyArgs,
    output: &OutputArgs,
    started: Instant,
) -> Result<i32, CliError> {
    let spec = load_spec(model_args)?;
    let policy = resolve_policy(policy_args)?;
    let model = build_model(&spec, policy_args)?;
    let result = delta_derivative(&model, index, &policy)?;

    if let Some(path) = &output.out {
        let bytes = match output.format.as_str() {
            "json" => {
                let full = compute_outputs(&spec, index, &result, None);
                let mut s = serde_json::to_string_pretty(&full).expect("serializes");
                s.push('\n');
                s.into_bytes()
            }
            _ => {
                let mut csv = String::from("j,re,im\n");
                for (j, c) in result.delta.coefficients() {
                    let _ = writeln!(csv, "{j},{},{}", fmt_f64(c.re), fmt_f64(c.im));
                }
                csv.into_bytes()
            }
        };
        write_atomic(path, &bytes)?;
    }

    let outputs = compute_outputs(&spec, index, &result, Some(DISPLAY_CAP));
    print_result(&run_result("compute", &spec.fingerprint(), outputs, started));
    Ok(if result.delta.tail().converged { 0 } else { 3 })
}

fn kind_name(kind: CertificateKind) -> &'static str {
    match kind {
        CertificateKind::DefinitionCheck => "definition_check",
        CertificateKind::Prop1 => "prop1",
        CertificateKind::Prop2 => "prop2",
    }
}

fn status_name(status: CertificateStatus) -> &'static str {
    match status {
        CertificateStatus::Satisfied => "satisfied",
        CertificateStatus::Violated => "violated",
        CertificateStatus::Inconclusive => "inconclusive",
    }
}

fn certificate_json(c: &Certificate) -> Value {
    json!({
        "kind": kind_name(c.kind),
        "status": status_name(c.status),
        "gap_sum": c.gap_sum,
        "coeff_sup": c.coeff_sup,
        "operator_norm_bound": c.operator_norm_bound,
        "second_order_bound": c.second_order_bound,
        "notes": c.notes,
    })
}

fn cmd_check(
    model_args: &ModelArgs,
    index: usize,
    norm_bound: Option<f64>,
    policy_args: &PolicyArgs,
    output: &OutputArgs,
    started: Instant,
) -> Result<i32, CliError> {
    let spec = load_spec(model_args)?;
    let policy = resolve_policy(policy_args)?;
    let model = build_model(&spec, policy_args)?;
    let bound = norm_bound.unwrap_or(f64::INFINITY);

    let certs = vec![
        definition_check(&model, index, &policy)?,
        prop1_certificate(&model, index, bound, &policy)?,
        prop2_certificate(&model, index, bound, &policy)?,
    ];
    let outputs = json!({
        "index": index,
        "norm_bound": norm_bound,
        "certificates": certs.iter().map(certificate_json).collect::<Vec<_>>(),
    });

    if let Some(path) = &output.out {
        let bytes = match output.format.as_str() {
            "json" => {
                let mut s = serde_json::to_string_pretty(&outputs).expect("serializes");
                s.push('\n');
                s.into_bytes()
            }
            _ => {
                let mut csv = String::from("kind,status,gap_sum,coeff_sup,second_order_bound\n");
                for c in &certs {
                    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{}",
                        kind_name(c.kind),
                        status_name(c.status),
                        opt(c.gap_sum),
                        opt(c.coeff_sup),
                        opt(c.second_order_bound)
                    );
                }
                csv.into_bytes()
            }
        };
        write_atomic(path, &bytes)?;
    }

    print_result(&run_result("check", &spec.fingerprint(), outputs, started));
    Ok(0)
}

fn cmd_residual(
    model_args: &ModelArgs,
    index: usize,
    h: f64,
    policy_args: &PolicyArgs,
    output: &OutputArgs,
    started: Instant,
) -> Result<i32, CliError> {
    let spec = load_spec(model_args)?;
    let policy = resolve_policy(policy_args)?;
    let model = build_model(&spec, policy_args)?;
    let report = residual_check(&model, index, Complex64::new(h, 0.0), &policy)?;

    let finite = model.dimension().as_finite().is_some();
    // At finite dimension the identity is exact algebra; a defect above this
    // threshold means the arithmetic itself is broken.
    let defect_ok = !finite || report.defect <= 1e-8 * report.exactness_scale;

    let outputs = json!({
        "index": report.index,
        "h": h,
        "defect": report.defect,
        "second_order_norm": report.second_order_norm,
        "exactness_scale": report.exactness_scale,
        "finite_dimension": finite,
        "defect_within_roundoff": defect_ok,
    });

    if let Some(path) = &output.out {
        let bytes = match output.format.as_str() {
            "json" => {
                let mut s = serde_json::to_string_pretty(&outputs).expect("serializes");
                s.push('\n');
                s.into_bytes()
            }
            _ => {
                let csv = format!(
                    "index,h,defect,second_order_norm,exactness_scale\n{},{},{},{},{}\n",
                    report.index,
                    fmt_f64(h),
                    fmt_f64(report.defect),
                    fmt_f64(report.second_order_norm),
                    fmt_f64(report.exactness_scale)
                );
                csv.into_bytes()
            }
        };
        write_atomic(path, &bytes)?;
    }

    print_result(&run_result("residual", &spec.fingerprint(), outputs, started));
    Ok(if defect_ok { 0 } else { 3 })
}

fn report_json(index: usize, report: &ConvergenceReport) -> Value {
    json!({
        "index": index,
        "rows": report
            .rows
            .iter()
            .map(|&(h, le, de)| json!({ "h": h, "lambda_error": le, "delta_error": de }))
            .collect::<Vec<_>>(),
        "fitted_order_lambda": report.fitted_order_lambda,
        "fitted_order_delta": report.fitted_order_delta,
    })
}

fn cmd_oracle(
    model_args: &ModelArgs,
    index: usize,
    h_list: &str,
    truncate: Option<usize>,
    policy_args: &PolicyArgs,
    output: &OutputArgs,
    started: Instant,
) -> Result<i32, CliError> {
    let spec = load_spec(model_args)?;
    let _ = resolve_policy(policy_args)?;
    let steps: Vec<f64> = h_list
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad step size {s:?} in --h-list")))
        })
        .collect::<Result<_, _>>()?;

    let dense: DenseModel = match &spec.kind {
        ModelKind::Dense { .. } => {
            let model = build_model(&spec, policy_args)?;
            let n = model.dimension().as_finite().expect("dense spec is finite");
            truncate_model(&model, n)?
        }
        ModelKind::Builtin(_) => {
            let m = truncate.ok_or_else(|| {
                CliError::Usage("--truncate M is required for builtin models".into())
            })?;
            let model = build_model(&spec, policy_args)?;
            truncate_model(&model, m)?
        }
    };
    let report = convergence_study(&dense, index, &steps)?;
    let outputs = report_json(index, &report);

    if let Some(path) = &output.out {
        let bytes = match output.format.as_str() {
            "json" => {
                let mut s = serde_json::to_string_pretty(&outputs).expect("serializes");
                s.push('\n');
                s.into_bytes()
            }
            _ => {
                let mut csv = String::from("h,lambda_error,delta_error\n");
                for &(h, le, de) in &report.rows {
                    let _ = writeln!(csv, "{},{},{}", fmt_f64(h), fmt_f64(le), fmt_f64(de));
                }
                csv.into_bytes()
            }
        };
        write_atomic(path, &bytes)?;
    }

    print_result(&run_result("oracle", &spec.fingerprint(), outputs, started));
    Ok(0)
}

fn parse_range(range: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("range must look like LO..HI with 1 <= LO <= HI, got {range:?}"));
    let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn figure_csv(rows: &[FigureRow]) -> String {
    let mut csv = String::from("i,delta_norm,ratio\n");
    for r in rows {
        let _ = writeln!(csv, "{},{},{}", r.index, fmt_f64(r.delta_norm), fmt_f64(r.ratio));
    }
    csv
}

fn figure_svg(rows: &[FigureRow]) -> String {
    let (width, height) = (800.0, 600.0);
    let (left, right, top, bottom) = (80.0, 30.0, 30.0, 60.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let x_min = rows.first().map(|r| r.index as f64).unwrap_or(0.0);
    let x_max = rows.last().map(|r| r.index as f64).unwrap_or(1.0);
    let x_span = (x_max - x_min).max(1.0);
    let y_max = rows
        .iter()
        .map(|r| r.delta_norm)
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE)
        * 1.05;

    let to_x = |i: f64| left + (i - x_min) / x_span * plot_w;
    let to_y = |v: f64| top + (1.0 - v / y_max) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(svg, "  <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
    // Axes.
    let _ = writeln!(
        svg,
        "  <line x1=\"{left}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" stroke-width=\"1\"/>",
        height - bottom,
        width - right,
        height - bottom
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{}\" stroke=\"black\" stroke-width=\"1\"/>",
        height - bottom
    );
    // Axis labels.
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">i</text>",
        left + plot_w / 2.0,
        height - 15.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"20\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\" transform=\"rotate(-90 20 {})\">\u{2016}\u{394}_i\u{2016}</text>",
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    // Extreme tick labels.
    let _ = writeln!(
        svg,
        "  <text x=\"{left}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{x_min:.0}</text>",
        height - bottom + 20.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{x_max:.0}</text>",
        width - right,
        height - bottom + 20.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">{y_max:.4}</text>",
        left - 8.0,
        top + 5.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">0</text>",
        left - 8.0,
        height - bottom + 5.0
    );
    // Data: polyline through the rows, plus explicit points so a single-row
    // figure is still visible.
    if rows.len() > 1 {
        let mut points = String::new();
        for r in rows {
            let _ = write!(points, "{:.2},{:.2} ", to_x(r.index as f64), to_y(r.delta_norm));
        }
        let _ = writeln!(
            svg,
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\"/>",
            points.trim_end()
        );
    }
    for r in rows {
        let _ = writeln!(
            svg,
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"steelblue\"/>",
            to_x(r.index as f64),
            to_y(r.delta_norm)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn cmd_figure(
    model_args: &ModelArgs,
    range: &str,
    policy_args: &PolicyArgs,
    out_csv: Option<PathBuf>,
    out_svg: Option<PathBuf>,
    started: Instant,
) -> Result<i32, CliError> {
    let spec = load_spec(model_args)?;
    let which = match &spec.kind {
        ModelKind::Builtin(id) => *id,
        ModelKind::Dense { .. } => {
            return Err(CliError::Usage(
                "figure supports only the builtin models".into(),
            ))
        }
    };
    let policy = resolve_policy(policy_args)?;
    let (lo, hi) = parse_range(range)?;
    let rows = figure_data(which, lo, hi, &policy);

    if let Some(path) = &out_csv {
        write_atomic(path, figure_csv(&rows).as_bytes())?;
    }
    if let Some(path) = &out_svg {
        write_atomic(path, figure_svg(&rows).as_bytes())?;
    }

    let outputs = json!({
        "model": which.name(),
        "i_lo": lo,
        "i_hi": hi,
        "rows": rows.len(),
        "out_csv": out_csv.as_ref().map(|p| p.display().to_string()),
        "out_svg": out_svg.as_ref().map(|p| p.display().to_string()),
        "last_ratio": rows.last().map(|r| r.ratio),
    });
    print_result(&run_result("figure", &spec.fingerprint(), outputs, started));
    Ok(0)
}
