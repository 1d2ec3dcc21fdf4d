//! Command-line front end.
//!
//! [`run`] parses the arguments, evaluates one subcommand on a pool of
//! `--workers` threads and writes a [`Report`] as text (the default), JSON or
//! CSV. Reports contain no timings, host data or worker counts, so a fixed
//! argument list and seed always yield the same bytes. Exit codes: 0 on
//! success (whether the check passed or not), 1 on runtime failures, 2 on
//! invalid input, 3 when an accuracy target was missed or a series diverged.

use crate::error::{Result, ThetaError};
use crate::group::GroupElement;
use crate::shale_weil::CutoffSpec;
use crate::stats::{self, InvarianceCheck, Lambda, SampleSpec, TailReport, DEFAULT_SEED};
use crate::theta::{theta_chi, theta_f};
use crate::weyl::{self, WeylParams};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use std::ffi::OsString;
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Version string recorded in every report.
pub const GIT_DESCRIBE: &str = env!("THETASUM_GIT_DESCRIBE");

#[derive(Parser, Debug)]
#[command(name = "thetasum", version, about = "Quadratic Weyl sums, theta functions and the statistics of curlicues")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate S_N(x, alpha) directly, with polynomial coefficients, or with a smooth cutoff.
    Sum(SumArgs),
    /// Evaluate S_N by iterating the approximate functional equation.
    Renorm(RenormArgs),
    /// Residual of the approximate functional equation over a grid of (x, alpha, N).
    AfeCheck(AfeArgs),
    /// Write the normalized curlicue X_N(t) as t,re,im.
    Curlicue(CurlicueArgs),
    /// Evaluate Theta_f or Theta_chi at one group element.
    Theta(ThetaArgs),
    /// Tail of |X_N(t)| / sqrt(t) against (6/pi^2) R^-6.
    Tail(TailArgs),
    /// Variance of X_N(t) against t.
    Variance(VarianceArgs),
    /// Right and left tails of Re X_N(1).
    ReTail(ReTailArgs),
    /// Haar averages of |Theta_f|^2 or |Theta_f|^4.
    HaarMoments(HaarArgs),
    /// Haar tail of |Theta_chi|.
    MuTail(MuTailArgs),
    /// Exact count of equal-sum, equal-square-sum 6-tuples in [1, N].
    Qcount(QcountArgs),
    /// The sixth-moment integral D(f).
    Dchi(DchiArgs),
    /// Kolmogorov-Smirnov checks of the distributional symmetries.
    Invariance(InvarianceArgs),
    /// Modulus-of-continuity statistic of sampled curlicues.
    Modulus(ModulusArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// Flags shared by every subcommand; none of them enters a report.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Base seed of the random streams.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads (falls back to THETA_WORKERS, then to the number of cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Write the report to this file instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Also write a gnuplot script for the CSV written with --output.
    #[arg(long)]
    pub plot_script: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffArg {
    Gaussian,
    Indicator,
    Triangle,
    TriangleMinus,
    Trapezoid,
    /// The sharp cutoff through its dyadic series (theta only).
    Chi,
}

/// A cutoff choice; `--trapezoid a,b,eps,del` parametrizes `trapezoid`.
#[derive(Args, Debug, Clone, Serialize)]
pub struct CutoffArgs {
    #[arg(long, value_enum, default_value_t = CutoffArg::Gaussian)]
    pub cutoff: CutoffArg,
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub trapezoid: Option<Vec<f64>>,
}

impl CutoffArgs {
    fn spec(&self) -> Result<CutoffSpec> {
        Ok(match self.cutoff {
            CutoffArg::Gaussian => CutoffSpec::Gaussian,
            CutoffArg::Indicator => CutoffSpec::IndicatorUnit,
            CutoffArg::Triangle => CutoffSpec::Triangle,
            CutoffArg::TriangleMinus => CutoffSpec::TriangleMinus,
            CutoffArg::Trapezoid => match self.trapezoid.as_deref() {
                Some(&[a, b, eps, del]) => CutoffSpec::trapezoid(a, b, eps, del)?,
                _ => return Err(ThetaError::DomainError("--cutoff trapezoid needs --trapezoid a,b,eps,del".into())),
            },
            CutoffArg::Chi => return Err(ThetaError::UnsupportedCutoff("chi is only available for `theta`".into())),
        })
    }
}

/// Accepts plain integers and exact decimal exponents such as `1e5`.
fn parse_count(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
    if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63) {
        Ok(v as u64)
    } else {
        Err(format!("`{s}` is not a nonnegative integer"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SumMethod {
    Direct,
    Poly,
    General,
}

#[derive(Args, Debug)]
pub struct SumArgs {
    #[arg(long = "N", value_parser = parse_count)]
    pub n: u64,
    #[arg(long)]
    pub x: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub c0: f64,
    /// `direct` needs c1 = c0 = 0; `general` weights the terms by the cutoff at n/N.
    #[arg(long, value_enum, default_value_t = SumMethod::Direct)]
    pub method: SumMethod,
    #[command(flatten)]
    pub cutoff: CutoffArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct RenormArgs {
    #[arg(long = "N", value_parser = parse_count)]
    pub n: u64,
    #[arg(long)]
    pub x: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 64)]
    pub n_cut: u64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Also sum directly, report the difference, and print both timings to standard error.
    #[arg(long)]
    pub compare: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct AfeArgs {
    #[arg(long = "N", value_parser = parse_count, value_delimiter = ',', default_values = ["1000", "10000", "100000"])]
    pub n: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5])]
    pub alpha: Vec<f64>,
    /// The x grid is x-step, 2 x-step, ... up to 2 - x-step.
    #[arg(long, default_value_t = 0.05)]
    pub x_step: f64,
    #[arg(long, default_value_t = 10.0)]
    pub threshold: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct CurlicueArgs {
    #[arg(long = "N", value_parser = parse_count)]
    pub n: u64,
    #[arg(long)]
    pub x: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub c0: f64,
    /// Number of equally spaced t in [0, 1] (default N + 1, the vertices of the path).
    #[arg(long, value_parser = parse_count)]
    pub points: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ThetaArgs {
    #[arg(long)]
    pub x: f64,
    #[arg(long)]
    pub y: f64,
    #[arg(long, default_value_t = 0.0)]
    pub phi: f64,
    #[arg(long, default_value_t = 0.0)]
    pub xi1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub xi2: f64,
    #[arg(long, default_value_t = 0.0)]
    pub zeta: f64,
    #[command(flatten)]
    pub cutoff: CutoffArgs,
    /// Requested bound on the truncation error.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Dyadic levels available to `--cutoff chi`.
    #[arg(long, default_value_t = 64)]
    pub j_max: usize,
    #[command(flatten)]
    pub common: Common,
}

/// The random curlicue model: `x ~ U[lambda-min, lambda-max]`, fixed `c1, c0, alpha`.
#[derive(Args, Debug, Clone, Serialize)]
pub struct ModelArgs {
    #[arg(long = "M", value_parser = parse_count, default_value = "100000")]
    pub m: u64,
    #[arg(long = "N", value_parser = parse_count, default_value = "4096")]
    pub n: u64,
    #[arg(long, default_value_t = 2f64.sqrt())]
    pub c1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub c0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub lambda_max: f64,
    /// Declare (c1, alpha) rational (the excluded case of the limit theorems).
    #[arg(long)]
    pub rational: bool,
}

impl ModelArgs {
    fn spec(&self, seed: u64) -> Result<SampleSpec> {
        Ok(SampleSpec {
            m: self.m,
            n: self.n,
            lambda: Lambda::uniform(self.lambda_min, self.lambda_max)?,
            params: WeylParams { x: 0.0, alpha: self.alpha, c1: self.c1, c0: self.c0 },
            seed,
            irrational_pair: !self.rational,
        })
    }
}

/// A log-spaced grid of thresholds.
#[derive(Args, Debug, Clone, Serialize)]
pub struct GridArgs {
    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub r_points: Option<usize>,
}

impl GridArgs {
    fn grid(&self, default: (f64, f64, usize)) -> Vec<f64> {
        stats::log_grid(self.r_min.unwrap_or(default.0), self.r_max.unwrap_or(default.1), self.r_points.unwrap_or(default.2))
    }
}

#[derive(Args, Debug)]
pub struct TailArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Grid defaults: [1.5, 3.5] with 9 points.
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct VarianceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 0.05)]
    pub tolerance: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ReTailArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Grid defaults: [1.5, 2.5] with 5 points.
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct HaarArgs {
    #[arg(long = "M", value_parser = parse_count, default_value = "100000")]
    pub m: u64,
    #[command(flatten)]
    pub cutoff: CutoffArgs,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..=4))]
    pub order: u32,
    /// Allowed |estimate - target| (default 0.01 for order 2, 0.1 for order 4).
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct MuTailArgs {
    #[arg(long = "M", value_parser = parse_count, default_value = "3000")]
    pub m: u64,
    /// Truncation tolerance of each Theta_chi value.
    #[arg(long, default_value_t = 0.05)]
    pub tol: f64,
    /// Grid defaults: [1.5, 3] with 7 points.
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct QcountArgs {
    #[arg(long = "N", value_parser = parse_count)]
    pub n: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DMethod {
    Auto,
    Uz,
    Phi,
}

#[derive(Args, Debug)]
pub struct DchiArgs {
    /// Allowed |estimate - target|; also the bound on the quadrature error estimate.
    #[arg(long, default_value_t = 0.06)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = CutoffArg::Indicator)]
    pub cutoff: CutoffArg,
    #[arg(long, value_enum, default_value_t = DMethod::Auto)]
    pub method: DMethod,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckArg {
    Scaling,
    Inversion,
    Stationarity,
    Rotation,
}

#[derive(Args, Debug)]
pub struct InvarianceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [CheckArg::Scaling, CheckArg::Inversion, CheckArg::Stationarity, CheckArg::Rotation])]
    pub checks: Vec<CheckArg>,
    #[arg(long, default_value_t = 2.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0.5)]
    pub inversion_t: f64,
    #[arg(long, default_value_t = 0.5)]
    pub t0: f64,
    #[arg(long, default_value_t = 0.3)]
    pub theta: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ModulusArgs {
    #[arg(long = "M", value_parser = parse_count, default_value = "1000")]
    pub m: u64,
    #[arg(long = "N", value_parser = parse_count, default_value = "4096")]
    pub n: u64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Number of log-spaced h in [4/N, 1/4].
    #[arg(long, default_value_t = 8)]
    pub h_points: usize,
    /// Repeat at 2N and report the ratio of the two statistics.
    #[arg(long)]
    pub stability: bool,
    #[command(flatten)]
    pub common: Common,
}

/// Array-valued part of a report, written as CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

/// The record every subcommand produces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub name: String,
    pub inputs: Value,
    pub estimate: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certified_tail: Option<f64>,
    pub target: Value,
    pub tolerance: Value,
    pub pass: Option<bool>,
    pub seed: Option<u64>,
    pub git_describe: String,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
    #[serde(skip)]
    pub table: Option<Table>,
    /// Lines of the text rendering.
    #[serde(skip)]
    pub text: Vec<String>,
}

impl Report {
    fn new(name: &str, inputs: Value, estimate: Value) -> Self {
        Report {
            name: name.to_string(),
            inputs,
            estimate,
            std_error: None,
            certified_tail: None,
            target: Value::Null,
            tolerance: Value::Null,
            pass: None,
            seed: None,
            git_describe: GIT_DESCRIBE.to_string(),
            details: Value::Null,
            table: None,
            text: Vec::new(),
        }
    }

    /// Adds a `PASS`/`FAIL` line naming the target and the tolerance.
    fn verdict(&mut self, what: &str, pass: bool, estimate: impl std::fmt::Display, target: impl std::fmt::Display, tolerance: &str) {
        let word = if pass { "PASS" } else { "FAIL" };
        self.text.push(format!("{word} {what}: estimate {estimate}, target {target}, tolerance {tolerance}"));
    }
}

/// `printf("%.17g", x)`.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..17).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        trim(&format!("{x:.*}", (16 - exp) as usize))
    }
}

/// `a+bi` with shortest round-trip components.
pub fn fmt_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() && z.im != 0.0 { '-' } else { '+' };
    format!("{}{sign}{}i", z.re, z.im.abs())
}

fn complex_json(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

/// Exit code for a failed subcommand.
pub fn exit_code(e: &ThetaError) -> i32 {
    match e {
        ThetaError::AccuracyNotMet { .. } | ThetaError::DivergenceSuspected(_) => 3,
        ThetaError::IoError(_)
        | ThetaError::NonConvergence(_)
        | ThetaError::MaxIterExceeded(_)
        | ThetaError::PrecisionExhausted(_)
        | ThetaError::RangeError(_) => 1,
        _ => 2,
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let common = common_of(&cli.command).clone();
    let mut notes = Vec::new();
    let result = check_output_flags(&common).and_then(|()| {
        let workers = common.workers.unwrap_or_else(stats::workers_from_env);
        stats::with_workers(workers, || dispatch(&cli.command, &mut notes))?
    });
    let _ = err.write_all(&notes);
    match result.and_then(|report| emit_report(&report, &common, out)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn common_of(c: &Command) -> &Common {
    match c {
        Command::Sum(a) => &a.common,
        Command::Renorm(a) => &a.common,
        Command::AfeCheck(a) => &a.common,
        Command::Curlicue(a) => &a.common,
        Command::Theta(a) => &a.common,
        Command::Tail(a) => &a.common,
        Command::Variance(a) => &a.common,
        Command::ReTail(a) => &a.common,
        Command::HaarMoments(a) => &a.common,
        Command::MuTail(a) => &a.common,
        Command::Qcount(a) => &a.common,
        Command::Dchi(a) => &a.common,
        Command::Invariance(a) => &a.common,
        Command::Modulus(a) => &a.common,
    }
}

fn check_output_flags(c: &Common) -> Result<()> {
    if c.plot_script.is_some() && (c.output.is_none() || c.format != Format::Csv) {
        return Err(ThetaError::DomainError("--plot-script needs --output FILE --format csv".into()));
    }
    Ok(())
}

fn dispatch(c: &Command, err: &mut Vec<u8>) -> Result<Report> {
    match c {
        Command::Sum(a) => cmd_sum(a),
        Command::Renorm(a) => cmd_renorm(a, err),
        Command::AfeCheck(a) => cmd_afe(a),
        Command::Curlicue(a) => cmd_curlicue(a),
        Command::Theta(a) => cmd_theta(a),
        Command::Tail(a) => cmd_tail(a),
        Command::Variance(a) => cmd_variance(a),
        Command::ReTail(a) => cmd_re_tail(a),
        Command::HaarMoments(a) => cmd_haar(a),
        Command::MuTail(a) => cmd_mu_tail(a),
        Command::Qcount(a) => cmd_qcount(a),
        Command::Dchi(a) => cmd_dchi(a),
        Command::Invariance(a) => cmd_invariance(a),
        Command::Modulus(a) => cmd_modulus(a),
    }
}

/// Writes `report` in the requested format to `--output` or `out`, plus the plot script.
pub fn emit_report(report: &Report, common: &Common, out: &mut dyn Write) -> Result<()> {
    let body = render(report, common.format)?;
    match &common.output {
        Some(path) => {
            std::fs::write(path, &body)?;
            for line in &report.text {
                writeln!(out, "{line}")?;
            }
        }
        None => out.write_all(body.as_bytes())?,
    }
    if let (Some(script), Some(data)) = (&common.plot_script, &common.output) {
        std::fs::write(script, plot_script(report, data)?)?;
    }
    Ok(())
}

/// The report as text, pretty JSON or CSV (UTF-8, LF line ends).
pub fn render(report: &Report, format: Format) -> Result<String> {
    Ok(match format {
        Format::Text => report.text.iter().map(|l| format!("{l}\n")).collect(),
        Format::Json => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        Format::Csv => {
            let table = report
                .table
                .as_ref()
                .ok_or_else(|| ThetaError::DomainError(format!("`{}` has no array output for CSV", report.name)))?;
            let mut s = table.header.join(",") + "\n";
            for row in &table.rows {
                s += &row.iter().map(|&v| fmt_g17(v)).collect::<Vec<_>>().join(",");
                s.push('\n');
            }
            s
        }
    })
}

fn plot_script(report: &Report, data: &Path) -> Result<String> {
    let table = report.table.as_ref().ok_or_else(|| ThetaError::DomainError("nothing to plot".into()))?;
    let file = data.display().to_string().replace('\'', "''");
    let mut s = format!("# gnuplot script for {}\nset datafile separator ','\nset key autotitle columnhead\n", report.name);
    if table.header[..3] == ["t", "re", "im"] {
        s += &format!("set size ratio -1\nset xlabel 'Re'\nset ylabel 'Im'\nplot '{file}' using 2:3 with lines title 'X_N(t)'\n");
    } else if table.header[..3] == ["R", "survival", "model"] {
        s += &format!(
            "set logscale xy\nset xlabel 'R'\nset ylabel 'P(. >= R)'\nplot '{file}' using 1:2 with points pt 7, '' using 1:3 with lines\n"
        );
    } else {
        s += &format!("plot '{file}' using 1:{} with linespoints\n", table.header.len());
    }
    s += "pause -1\n";
    Ok(s)
}

fn cmd_sum(a: &SumArgs) -> Result<Report> {
    let value = match a.method {
        SumMethod::Direct if a.c1 != 0.0 || a.c0 != 0.0 => {
            return Err(ThetaError::DomainError("--method direct takes c1 = c0 = 0; use --method poly".into()))
        }
        SumMethod::Direct => weyl::weyl_sum_direct(a.n, a.x, a.alpha)?,
        SumMethod::Poly => weyl::weyl_sum_poly(a.n, WeylParams { x: a.x, alpha: a.alpha, c1: a.c1, c0: a.c0 })?,
        SumMethod::General => weyl::weyl_sum_general(a.n, a.x, a.alpha, &a.cutoff.spec()?)?,
    };
    let mut inputs = json!({ "N": a.n, "x": a.x, "alpha": a.alpha, "c1": a.c1, "c0": a.c0, "method": a.method });
    if a.method == SumMethod::General {
        inputs["cutoff"] = to_value(&a.cutoff);
    }
    let mut r = Report::new("sum", inputs, complex_json(value));
    r.text.push(fmt_complex(value));
    Ok(r)
}

fn cmd_renorm(a: &RenormArgs, err: &mut Vec<u8>) -> Result<Report> {
    let start = Instant::now();
    let ren = weyl::weyl_sum_renormalized(a.n, a.x, a.alpha, a.n_cut, a.max_iter)?;
    let t_ren = start.elapsed();
    let inputs = json!({ "N": a.n, "x": a.x, "alpha": a.alpha, "n_cut": a.n_cut, "max_iter": a.max_iter, "compare": a.compare });
    let mut r = Report::new("renorm", inputs, complex_json(ren.value));
    r.details = json!({ "error_estimate": ren.error_estimate, "iterations": ren.iterations, "fell_back_to_direct": ren.fell_back_to_direct });
    r.text.push(format!("{} (error estimate {:.3e}, {} iterations)", fmt_complex(ren.value), ren.error_estimate, ren.iterations));
    if a.compare {
        let start = Instant::now();
        let direct = weyl::weyl_sum_direct(a.n, a.x, a.alpha)?;
        let t_dir = start.elapsed();
        let diff = (ren.value - direct).norm();
        let tol = ren.error_estimate.max(10.0);
        r.target = complex_json(direct);
        r.tolerance = json!(tol);
        r.pass = Some(diff <= tol);
        r.details["difference"] = json!(diff);
        r.verdict("renorm", diff <= tol, format!("|renorm - direct| = {diff:.3e}"), fmt_complex(direct), &format!("{tol:.3e}"));
        let _ = writeln!(err, "timing: renormalized {:.3e} s, direct {:.3e} s", t_ren.as_secs_f64(), t_dir.as_secs_f64());
    }
    Ok(r)
}

fn cmd_afe(a: &AfeArgs) -> Result<Report> {
    if !(a.x_step > 0.0 && a.x_step < 1.0) {
        return Err(ThetaError::DomainError("--x-step must lie in (0, 1)".into()));
    }
    let steps = (2.0 / a.x_step).round() as usize;
    let mut rows = Vec::new();
    for &n in &a.n {
        for &alpha in &a.alpha {
            for k in 1..steps {
                let x = k as f64 * a.x_step;
                rows.push(vec![x, alpha, n as f64, weyl::afe_residual(n, x, alpha)?]);
            }
        }
    }
    let worst = rows.iter().map(|r| r[3]).fold(0.0, f64::max);
    let inputs = json!({ "N": a.n, "alpha": a.alpha, "x_step": a.x_step, "threshold": a.threshold });
    let mut r = Report::new("afe-check", inputs, json!(worst));
    r.tolerance = json!(a.threshold);
    r.pass = Some(worst <= a.threshold);
    r.verdict("afe-check", worst <= a.threshold, format!("max sqrt(x)|residual| = {worst:.4}"), "0", &format!("{}", a.threshold));
    r.table = Some(Table { header: vec!["x", "alpha", "N", "residual"], rows });
    Ok(r)
}

fn cmd_curlicue(a: &CurlicueArgs) -> Result<Report> {
    let points = a.points.unwrap_or(a.n + 1);
    if points < 2 {
        return Err(ThetaError::DomainError("--points must be at least 2".into()));
    }
    let grid: Vec<f64> = (0..points).map(|k| k as f64 / (points - 1) as f64).collect();
    let params = WeylParams { x: a.x, alpha: a.alpha, c1: a.c1, c0: a.c0 };
    let path = weyl::curlicue(a.n, params, &grid)?;
    let end = *path.values.last().expect("at least two points");
    let inputs = json!({ "N": a.n, "x": a.x, "alpha": a.alpha, "c1": a.c1, "c0": a.c0, "points": points });
    let mut r = Report::new("curlicue", inputs, complex_json(end));
    r.text.push(format!("X_N(1) = {}", fmt_complex(end)));
    r.table = Some(Table {
        header: vec!["t", "re", "im"],
        rows: grid.iter().zip(&path.values).map(|(&t, v)| vec![t, v.re, v.im]).collect(),
    });
    Ok(r)
}

fn cmd_theta(a: &ThetaArgs) -> Result<Report> {
    let g = GroupElement::new(a.x, a.y, a.phi, a.xi1, a.xi2, a.zeta)?;
    let res = match a.cutoff.cutoff {
        CutoffArg::Chi => theta_chi(&g, a.tol, a.j_max)?,
        _ => theta_f(&g, &a.cutoff.spec()?, a.tol)?,
    };
    if res.certified_tail > a.tol && a.cutoff.cutoff != CutoffArg::Chi {
        return Err(ThetaError::AccuracyNotMet { estimate: res.certified_tail, requested: a.tol });
    }
    let inputs = json!({
        "x": a.x, "y": a.y, "phi": a.phi, "xi1": a.xi1, "xi2": a.xi2, "zeta": a.zeta,
        "cutoff": to_value(&a.cutoff), "tol": a.tol, "j_max": a.j_max,
    });
    let mut r = Report::new("theta", inputs, complex_json(res.value));
    r.certified_tail = Some(res.certified_tail);
    r.tolerance = json!(a.tol);
    r.pass = Some(res.certified_tail <= a.tol);
    r.details = json!({ "terms_used": res.terms_used, "diophantine_warning": res.diophantine_warning });
    r.text.push(format!("{} (certified tail {:.3e}, {} {})", fmt_complex(res.value), res.certified_tail, res.terms_used, if a.cutoff.cutoff == CutoffArg::Chi { "levels" } else { "terms" }));
    if res.diophantine_warning {
        r.text.push("warning: the base point looks non-Diophantine; the tail bound is heuristic".into());
    }
    Ok(r)
}

fn tail_table(t: &TailReport) -> Table {
    let model = t.model();
    Table {
        header: vec!["R", "survival", "model"],
        rows: (0..t.r_grid.len()).map(|i| vec![t.r_grid[i], t.survival[i], model[i]]).collect(),
    }
}

fn constant_ok(t: &TailReport) -> bool {
    let ratio = t.fit_constant / t.target_constant;
    ratio <= t.constant_factor && ratio >= 1.0 / t.constant_factor
}

fn tail_report(name: &str, inputs: Value, t: &TailReport, seed: u64) -> Report {
    let mut r = Report::new(name, inputs, json!({ "slope": t.fit_slope, "constant": t.fit_constant }));
    r.target = json!({ "slope": t.target_slope, "constant": t.target_constant });
    r.tolerance = json!({ "slope": t.slope_tolerance, "constant_factor": t.constant_factor });
    r.seed = Some(seed);
    r.details = to_value(t);
    r.table = Some(tail_table(t));
    let slope_ok = (t.fit_slope - t.target_slope).abs() <= t.slope_tolerance;
    r.verdict(&format!("{name} slope"), slope_ok, format!("{:.4}", t.fit_slope), t.target_slope, &format!("{}", t.slope_tolerance));
    r.verdict(&format!("{name} constant"), constant_ok(t), format!("{:.5}", t.fit_constant), format!("{:.5}", t.target_constant), "factor 2");
    r
}

fn cmd_tail(a: &TailArgs) -> Result<Report> {
    let spec = a.model.spec(a.common.seed)?;
    let grid = a.grid.grid((1.5, 3.5, 9));
    let t = if a.model.rational {
        stats::mc_tail_rational_diagnostic(&spec, a.t, &grid)?
    } else {
        stats::mc_tail(&spec, a.t, &grid)?
    };
    let inputs = json!({ "model": to_value(&a.model), "t": a.t, "r_grid": grid });
    let mut r = tail_report("tail", inputs, &t, a.common.seed);
    r.pass = Some(t.pass);
    Ok(r)
}

fn cmd_variance(a: &VarianceArgs) -> Result<Report> {
    let spec = a.model.spec(a.common.seed)?;
    let m = stats::mc_variance(&spec, a.t)?;
    let inputs = json!({ "model": to_value(&a.model), "t": a.t });
    let mut r = Report::new("variance", inputs, json!(m.estimate));
    let pass = (m.estimate - m.target).abs() <= a.tolerance;
    r.std_error = Some(m.std_error);
    r.target = json!(m.target);
    r.tolerance = json!(a.tolerance);
    r.pass = Some(pass);
    r.seed = Some(a.common.seed);
    r.verdict("variance", pass, format!("{:.5} +- {:.5}", m.estimate, m.std_error), m.target, &format!("{}", a.tolerance));
    Ok(r)
}

fn cmd_re_tail(a: &ReTailArgs) -> Result<Report> {
    let spec = a.model.spec(a.common.seed)?;
    let grid = a.grid.grid((1.5, 2.5, 5));
    let rt = stats::mc_re_tail(&spec, &grid)?;
    let inputs = json!({ "model": to_value(&a.model), "r_grid": grid });
    let mut r = tail_report("re-tail", inputs, &rt.right, a.common.seed);
    r.details = to_value(&rt);
    if let Some(table) = r.table.as_mut() {
        table.header.push("left_survival");
        for (row, l) in table.rows.iter_mut().zip(&rt.left_survival) {
            row.push(*l);
        }
    }
    let worst = rt.symmetry_z.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    r.verdict("re-tail symmetry", rt.symmetric, format!("max |z| {worst:.3}"), 0, "2 standard errors");
    r.pass = Some(rt.right.pass && rt.symmetric);
    Ok(r)
}

fn cmd_haar(a: &HaarArgs) -> Result<Report> {
    if a.order == 3 {
        return Err(ThetaError::OutOfRange("--order must be 2 or 4".into()));
    }
    let f = a.cutoff.spec()?;
    let m = stats::haar_moment_check(a.m, &f, a.order, a.common.seed)?;
    let tol = a.tolerance.unwrap_or(if a.order == 2 { 0.01 } else { 0.1 });
    let pass = (m.estimate - m.target).abs() <= tol;
    let inputs = json!({ "M": a.m, "cutoff": to_value(&a.cutoff), "order": a.order, "truncation_tol": stats::HAAR_MOMENT_TOL });
    let mut r = Report::new("haar-moments", inputs, json!(m.estimate));
    r.std_error = Some(m.std_error);
    r.target = json!(m.target);
    r.tolerance = json!(tol);
    r.pass = Some(pass);
    r.seed = Some(a.common.seed);
    r.verdict(&format!("haar-moments order {}", a.order), pass, format!("{:.5} +- {:.5}", m.estimate, m.std_error), format!("{:.5}", m.target), &format!("{tol}"));
    Ok(r)
}

/// Largest admissible fraction of divergence-flagged samples in `mu-tail`.
pub const MAX_DIVERGENT_FRACTION: f64 = 1e-3;

fn cmd_mu_tail(a: &MuTailArgs) -> Result<Report> {
    let grid = a.grid.grid((1.5, 3.0, 7));
    let mu = stats::theta_measure_tail(a.m, &grid, a.common.seed, a.tol)?;
    let inputs = json!({ "M": a.m, "tol": a.tol, "r_grid": grid });
    let mut r = tail_report("mu-tail", inputs, &mu.tail, a.common.seed);
    r.details = to_value(&mu);
    let fraction = mu.divergent as f64 / a.m as f64;
    r.verdict("mu-tail divergent fraction", fraction < MAX_DIVERGENT_FRACTION, fraction, 0, &format!("{MAX_DIVERGENT_FRACTION}"));
    r.text.push(format!(
        "volume {:.5} +- {:.5} (target {:.5}), {} samples with a Diophantine warning",
        mu.volume, mu.volume_std_error, mu.volume_target, mu.warned
    ));
    r.pass = Some(constant_ok(&mu.tail) && fraction < MAX_DIVERGENT_FRACTION);
    Ok(r)
}

/// `N` from which `qcount` also checks the asymptotic ratio.
pub const QCOUNT_RATIO_MIN_N: u64 = 100;

fn cmd_qcount(a: &QcountArgs) -> Result<Report> {
    let q = stats::q_count(a.n)?;
    let mut r = Report::new("qcount", json!({ "N": a.n }), json!(q));
    r.text.push(q.to_string());
    if a.n >= QCOUNT_RATIO_MIN_N {
        let ratio = stats::q_count_ratio(a.n)?;
        let target = 18.0 / (PI * PI);
        let pass = (ratio / target - 1.0).abs() <= 0.25;
        r.details = json!({ "ratio": ratio, "ratio_target": target });
        r.target = json!(target);
        r.tolerance = json!(0.25);
        r.pass = Some(pass);
        r.verdict("qcount Q(N)/(N^3 ln N)", pass, format!("{ratio:.5}"), format!("{target:.5}"), "25% relative");
    }
    Ok(r)
}

fn cmd_dchi(a: &DchiArgs) -> Result<Report> {
    let f = CutoffArgs { cutoff: a.cutoff, trapezoid: None }.spec()?;
    let est = match a.method {
        DMethod::Auto => stats::d_integral(&f, a.tol)?,
        DMethod::Uz if f == CutoffSpec::IndicatorUnit => stats::d_integral_uz()?,
        DMethod::Uz => return Err(ThetaError::UnsupportedCutoff("the (u, z) form is for the indicator".into())),
        DMethod::Phi => stats::d_integral_phi(&f)?,
    };
    if est.error_estimate > a.tol {
        return Err(ThetaError::AccuracyNotMet { estimate: est.error_estimate, requested: a.tol });
    }
    let target = match f {
        CutoffSpec::IndicatorUnit => Some(3.0),
        CutoffSpec::Gaussian => Some(PI / 6f64.sqrt()),
        _ => None,
    };
    let inputs = json!({ "cutoff": a.cutoff, "method": a.method, "tol": a.tol });
    let mut r = Report::new("dchi", inputs, json!(est.estimate));
    r.details = json!({ "error_estimate": est.error_estimate, "rho0": est.estimate / 2.0 });
    r.text.push(format!("D = {} (error estimate {:.2e}, rho0 = D/2 = {})", est.estimate, est.error_estimate, est.estimate / 2.0));
    if let Some(t) = target {
        let pass = (est.estimate - t).abs() <= a.tol;
        r.target = json!(t);
        r.tolerance = json!(a.tol);
        r.pass = Some(pass);
        r.verdict("dchi", pass, format!("{:.5}", est.estimate), format!("{t:.5}"), &format!("{}", a.tol));
    }
    Ok(r)
}

fn cmd_invariance(a: &InvarianceArgs) -> Result<Report> {
    let spec = a.model.spec(a.common.seed)?;
    let checks: Vec<InvarianceCheck> = a
        .checks
        .iter()
        .map(|c| match c {
            CheckArg::Scaling => InvarianceCheck::Scaling { a: a.scale },
            CheckArg::Inversion => InvarianceCheck::Inversion { t: a.inversion_t },
            CheckArg::Stationarity => InvarianceCheck::Stationarity { t0: a.t0 },
            CheckArg::Rotation => InvarianceCheck::Rotation { theta: a.theta },
        })
        .collect();
    let results = stats::invariance_suite(&spec, &checks)?;
    let inputs = json!({ "model": to_value(&a.model), "checks": to_value(&checks) });
    let estimate: serde_json::Map<String, Value> =
        results.iter().map(|r| (r.check.name().to_string(), json!(r.ks_abs.unwrap_or(0.0).max(r.ks_re)))).collect();
    let tolerance: serde_json::Map<String, Value> = results.iter().map(|r| (r.check.name().to_string(), json!(r.threshold))).collect();
    let mut r = Report::new("invariance", inputs, Value::Object(estimate));
    r.target = json!(0.0);
    r.tolerance = Value::Object(tolerance);
    r.pass = Some(results.iter().all(|x| x.pass));
    r.seed = Some(a.common.seed);
    r.details = to_value(&results);
    for x in &results {
        let ks = x.ks_abs.unwrap_or(0.0).max(x.ks_re);
        r.verdict(&format!("invariance {}", x.check.name()), x.pass, format!("KS {ks:.4}"), 0, &format!("{}", x.threshold));
    }
    Ok(r)
}

fn cmd_modulus(a: &ModulusArgs) -> Result<Report> {
    if a.n < 16 || a.h_points < 2 {
        return Err(ThetaError::DomainError("modulus needs N >= 16 and --h-points >= 2".into()));
    }
    let h = stats::log_grid(4.0 / a.n as f64, 0.25, a.h_points);
    let stat = |n: u64| -> Result<f64> {
        let paths = stats::sample_paths(&SampleSpec::standard(a.m, n, a.common.seed))?;
        stats::modulus_statistic(&paths, &h, a.eps)
    };
    let value = stat(a.n)?;
    let inputs = json!({ "M": a.m, "N": a.n, "eps": a.eps, "h_points": a.h_points, "stability": a.stability });
    let mut r = Report::new("modulus", inputs, json!(value));
    r.seed = Some(a.common.seed);
    r.text.push(format!("modulus statistic {value:.5} (diagnostic)"));
    if a.stability {
        let doubled = stat(2 * a.n)?;
        let ratio = doubled / value;
        let pass = (0.5..=2.0).contains(&ratio);
        r.details = json!({ "doubled_N": doubled, "ratio": ratio });
        r.target = json!(1.0);
        r.tolerance = json!("factor 2");
        r.pass = Some(pass);
        r.verdict("modulus stability N -> 2N", pass, format!("ratio {ratio:.4}"), 1, "factor 2");
    }
    Ok(r)
}
