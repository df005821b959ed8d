use std::time::Instant;

use anyhow::anyhow;
use apdist_core::bilinear::{cauchy_schwarz_split, poisson_l_identity, regime_scan, RegimeParams, PAIR_LIMIT};
use apdist_core::coeffs::{
    hecke_normalized, ramanujan_tau, sym2_series, verify_convolution_identity, verify_convolution_symbolic,
    DeltaSeries, TAU_LIMIT,
};
use apdist_core::expsum::{kl_table_fft, verify_gauss_spectral, verify_kl4_hat, VerificationReport};
use apdist_core::progressions::{
    delta, delta_all, delta_csv, level_scan, verify_functional_identity, IdentityConfig, LevelScanConfig, THETA_4,
    THETA_F,
};
use apdist_core::{CoefficientSeries, Error, PrimeContext, TestFunction};
use serde_json::{json, Value};

use crate::args::{CellArgs, Cli, Coeffs, Command, Common, DeltaArgs, Format, Scan, SeriesKind, Verify};
use crate::output::emit;
use crate::svg::{emit_svg, Plot, Series};

/// Moduli above this are refused by the table-based checks.
pub const MAX_Q: u64 = 2_000_000;
/// The character-sum check is quadratic in `q`.
pub const SPECTRAL_MAX_Q: u64 = 20_000;

#[derive(Debug)]
pub enum Failure {
    /// Invalid parameters or a resource guard; exit 3.
    Config(String),
    /// Anything else; exit 1.
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 3,
            Failure::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "invalid configuration: {m}"),
            Failure::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotOddPrime(_)
            | Error::NotUnit { .. }
            | Error::ResourceLimit { .. }
            | Error::SeriesTooShort { .. }
            | Error::InvalidArgument(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

type Outcome = Result<bool, Failure>;

fn config(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<f64, Failure> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(config(format!("{name} must be positive, got {v}")))
    }
}

fn modulus(q: u64, limit: u64) -> Result<PrimeContext, Failure> {
    if q > limit {
        return Err(config(format!("q = {q} exceeds the limit {limit} for this command")));
    }
    Ok(PrimeContext::new(q)?)
}

fn series_len(n: usize) -> Result<usize, Failure> {
    if n == 0 || n > TAU_LIMIT {
        return Err(config(format!("series length {n} outside 1..={TAU_LIMIT}")));
    }
    Ok(n)
}

/// Machine-readable outcome of a `verify` command.
struct Report {
    command: &'static str,
    params: Value,
    max_error: f64,
    tolerance: f64,
    pass: bool,
    details: Value,
}

impl Report {
    fn json(&self, start: Instant) -> String {
        let v = json!({
            "command": self.command,
            "params": self.params,
            "max_error": self.max_error,
            "tolerance": self.tolerance,
            "pass": self.pass,
            "runtime_ms": start.elapsed().as_millis() as u64,
            "variant_details": self.details,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
        s.push('\n');
        s
    }
}

fn report_json(r: &VerificationReport) -> Value {
    json!({ "label": r.label, "max_error": r.max_error, "worst": r.worst, "checks": r.checks })
}

/// Writes a verify report (or its CSV table) and returns the pass flag.
fn finish(common: &Common, stem: &str, report: Report, csv: Option<String>, start: Instant) -> Outcome {
    let format = common.format.unwrap_or(Format::Json);
    let content = match (format, csv) {
        (Format::Json, _) => report.json(start),
        (Format::Csv, Some(csv)) => csv,
        (f, _) => return Err(config(format!("format {} is not available for {stem}", f.ext()))),
    };
    emit(common.out.as_deref(), stem, format.ext(), &content)?;
    eprintln!(
        "{}: max error {:.3e}, tolerance {:.1e}: {}",
        report.command,
        report.max_error,
        report.tolerance,
        if report.pass { "pass" } else { "FAIL" }
    );
    Ok(report.pass)
}

fn data_format(common: &Common, allowed: &[Format]) -> Result<Format, Failure> {
    let f = common.format.unwrap_or(Format::Csv);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(config(format!("format {} is not available for this command", f.ext())))
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let common = &cli.common;
    if let Some(w) = common.workers {
        if w == 0 {
            return Err(config("--workers must be at least 1"));
        }
        // A second initialization in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    if let Some(t) = common.tolerance {
        positive("--tol", t)?;
    }
    match &cli.command {
        Command::Verify(v) => verify(common, v),
        Command::Coeffs(c) => coeffs(common, c),
        Command::Delta(d) => delta_cmd(common, d),
        Command::Scan(s) => scan(common, s),
    }
}

fn verify(common: &Common, v: &Verify) -> Outcome {
    let start = Instant::now();
    let tol = |default: f64| common.tolerance.unwrap_or(default);
    match v {
        Verify::Kl4hat { q, samples } => {
            let ctx = modulus(*q, MAX_Q)?;
            if *samples == 0 {
                return Err(config("--samples must be at least 1"));
            }
            let kl4 = kl_table_fft(4, &ctx)?;
            let kl3 = kl_table_fft(3, &ctx)?;
            let a_s = ctx.random_units(*samples, common.seed);
            let l_s = ctx.random_units(*samples, common.seed.wrapping_add(1));
            let mut all = VerificationReport::new(format!("kl4 hat q={q}"));
            let mut pairs = Vec::new();
            for (&a, &l) in a_s.iter().zip(&l_s) {
                all.merge(&verify_kl4_hat(&ctx, &kl4, &kl3, a as i64, l as i64)?);
                pairs.push(json!([a, l]));
            }
            let t = tol(1e-9);
            let report = Report {
                command: "verify kl4hat",
                params: json!({ "q": q, "samples": samples, "seed": common.seed, "pairs": pairs }),
                max_error: all.max_error,
                tolerance: t,
                pass: all.passes(t),
                details: report_json(&all),
            };
            finish(common, "kl4hat", report, None, start)
        }
        Verify::GaussSpectral { q } => {
            let ctx = modulus(*q, SPECTRAL_MAX_Q)?;
            let kl4 = kl_table_fft(4, &ctx)?;
            let r = verify_gauss_spectral(&ctx, &kl4);
            let t = tol(1e-9);
            let report = Report {
                command: "verify gauss-spectral",
                params: json!({ "q": q }),
                max_error: r.max_error,
                tolerance: t,
                pass: r.passes(t),
                details: report_json(&r),
            };
            finish(common, "gauss-spectral", report, None, start)
        }
        Verify::Convolution { n } => {
            let n = series_len(*n)?;
            let s = DeltaSeries::build(n)?;
            let numeric = verify_convolution_identity(&s.lambda_f, &s.one_sym2, n)?;
            let symbolic = verify_convolution_symbolic(8);
            let t = tol(1e-9);
            let report = Report {
                command: "verify convolution",
                params: json!({ "N": n }),
                max_error: numeric.max_error,
                tolerance: t,
                pass: numeric.passes(t) && symbolic.passes(),
                details: json!({
                    "numeric": report_json(&numeric),
                    "symbolic_max_exponent": symbolic.max_exponent,
                    "symbolic_failures": symbolic.failures,
                    "symbolic_route_failures": symbolic.route_failures,
                }),
            };
            finish(common, "convolution", report, None, start)
        }
        Verify::FunctionalEq { q, x } => {
            let x = positive("--X", *x)?;
            let ctx = PrimeContext::new(*q)?;
            let cfg = IdentityConfig::default();
            let need = cfg.refined().dual_length(*q, x)?.max((2.0 * x).ceil() as usize);
            let s = DeltaSeries::build(series_len(need)?)?;
            let r = verify_functional_identity(&ctx, x, &s.one_sym2, &cfg)?;
            let (variant, best) = r.best();
            let t = tol(1e-3);
            let summary = |m: &apdist_core::progressions::IdentitySummary| {
                json!({
                    "max_residual_a": m.max_residual_a,
                    "max_residual_b": m.max_residual_b,
                    "max_residual_a_all_n": m.max_residual_a_all,
                    "average_residual_a": m.average_residual_a,
                    "average_residual_b": m.average_residual_b,
                    "third_term_ratio": m.third_ratio,
                    "dual_terms": m.n_max,
                    "cutoff_y": m.cutoff,
                    "tail_envelope": m.tail_envelope,
                    "contour_heights": m.heights,
                })
            };
            let report = Report {
                command: "verify functional-eq",
                params: json!({ "q": q, "X": x, "weight": cfg.weight.label(), "truncation": cfg.truncation }),
                max_error: best,
                tolerance: t,
                pass: best <= t,
                details: json!({
                    "matched_variant": variant.as_str(),
                    "stability_ratio": r.stability(),
                    "stable": r.is_stable(),
                    "base": summary(&r.base),
                    "refined": summary(&r.refined),
                }),
            };
            finish(common, "functional-eq", report, Some(r.base.csv()), start)
        }
        Verify::Poisson(cell) => {
            let (ctx, v) = cell_setup(cell)?;
            let kl4 = kl_table_fft(4, &ctx)?;
            let kl3 = kl_table_fft(3, &ctx)?;
            let r = poisson_l_identity(&ctx, &kl4, &kl3, cell.a, cell.l, cell.m, &v, &v)?;
            let t = tol(1e-8);
            let report = Report {
                command: "verify poisson",
                params: json!({ "q": cell.q, "L": cell.l, "M": cell.m, "a": cell.a }),
                max_error: r.residual,
                tolerance: t,
                pass: r.residual <= t,
                details: json!({
                    "dual_frequencies": r.h_max,
                    "doubling_change": r.doubling_change,
                    "zero_term": [r.zero_term.re, r.zero_term.im],
                }),
            };
            finish(common, "poisson", report, None, start)
        }
        Verify::CsSplit(cell) => {
            let (ctx, v) = cell_setup(cell)?;
            let kl4 = kl_table_fft(4, &ctx)?;
            let n = series_len((2.0 * cell.m).ceil() as usize + 1)?;
            let s = DeltaSeries::build(n)?;
            let r = cauchy_schwarz_split(&ctx, &kl4, &s.sym2, cell.a, cell.l, cell.m, &v, &v)?;
            let t = tol(1e-8);
            let report = Report {
                command: "verify cs-split",
                params: json!({ "q": cell.q, "L": cell.l, "M": cell.m, "a": cell.a }),
                max_error: r.residual,
                tolerance: t,
                pass: r.residual <= t,
                details: json!({
                    "direct": r.direct,
                    "diagonal": r.diagonal,
                    "off_diagonal": [r.off_diagonal.re, r.off_diagonal.im],
                    "diagonal_bound": r.diagonal_bound,
                    "lm_shape": r.lm_shape,
                    "off_diagonal_shape": r.off_shape,
                    "cauchy_schwarz_lhs": r.cs_lhs,
                    "cauchy_schwarz_rhs": r.cs_rhs,
                }),
            };
            finish(common, "cs-split", report, None, start)
        }
    }
}

fn cell_setup(cell: &CellArgs) -> Result<(PrimeContext, TestFunction), Failure> {
    let ctx = modulus(cell.q, MAX_Q)?;
    let l = positive("--L", cell.l)?;
    let m = positive("--M", cell.m)?;
    if l * m > PAIR_LIMIT {
        return Err(config(format!("L·M = {} exceeds {PAIR_LIMIT:e}", l * m)));
    }
    Ok((ctx, TestFunction::bump()))
}

fn series_json(s: &CoefficientSeries) -> String {
    let values: Vec<Value> = (1..=s.len())
        .map(|n| match s.exact_value(n) {
            Some(v) => json!(v.to_string()),
            None => json!(s.value(n)),
        })
        .collect();
    let v = json!({ "label": s.label(), "normalization": s.normalization().as_str(), "values": values });
    let mut out = serde_json::to_string_pretty(&v).expect("series serializes");
    out.push('\n');
    out
}

fn coeffs(common: &Common, c: &Coeffs) -> Outcome {
    let format = data_format(common, &[Format::Csv, Format::Json])?;
    let (stem, series) = match c {
        Coeffs::Tau { n } => ("tau", ramanujan_tau(series_len(*n)?)?),
        Coeffs::Sym2 { n } => {
            let n = series_len(*n)?;
            let lambda_f = hecke_normalized(&ramanujan_tau(n)?)?;
            ("sym2", sym2_series(&lambda_f, n)?)
        }
    };
    let content = match format {
        Format::Json => series_json(&series),
        _ => series.to_csv_string(),
    };
    emit(common.out.as_deref(), stem, format.ext(), &content)?;
    Ok(true)
}

fn build_series(kind: SeriesKind, n: usize) -> Result<CoefficientSeries, Failure> {
    let s = DeltaSeries::build(series_len(n)?)?;
    Ok(match kind {
        SeriesKind::RankinSelberg => s.rankin_selberg(),
        SeriesKind::OneSym2 => s.one_sym2,
    })
}

fn delta_cmd(common: &Common, d: &DeltaArgs) -> Outcome {
    let format = data_format(common, &[Format::Csv, Format::Json])?;
    let x = positive("--X", d.x)?;
    if x < 1.0 {
        return Err(config("--X must be at least 1"));
    }
    let ctx = modulus(d.q, MAX_Q)?;
    let lambda = build_series(d.series, (2.0 * x).ceil() as usize)?;
    let v = TestFunction::bump();
    let rows = match d.a {
        Some(a) => vec![delta(&lambda, x, a, &ctx, &v)?],
        None => delta_all(&lambda, x, &ctx, &v)?,
    };
    let content = match format {
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| json!({ "X": r.x, "q": r.q, "a": r.a, "delta": r.delta, "trivial": r.trivial_bound, "ratio": r.ratio }))
                .collect();
            let v = json!({ "series": lambda.label(), "weight": v.label(), "rows": rows });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("rows serialize"))
        }
        _ => delta_csv(&rows),
    };
    emit(common.out.as_deref(), "delta", format.ext(), &content)?;
    Ok(true)
}

fn scan(common: &Common, s: &Scan) -> Outcome {
    match s {
        Scan::Level { x, theta, samples } => {
            let format = data_format(common, &[Format::Csv, Format::Svg])?;
            for &xx in x {
                if !(xx.is_finite() && xx >= 1.0) {
                    return Err(config(format!("--X values must be at least 1, got {xx}")));
                }
            }
            for &t in theta {
                if !(t.is_finite() && t > 0.0 && t < 1.0) {
                    return Err(config(format!("--theta values must lie in (0, 1), got {t}")));
                }
            }
            let x_max = x.iter().copied().fold(1.0, f64::max);
            let lambda = build_series(SeriesKind::RankinSelberg, (2.0 * x_max).ceil() as usize)?;
            let cfg = LevelScanConfig {
                xs: x.clone(),
                thetas: theta.clone(),
                samples: *samples,
                seed: common.seed,
            };
            let result = level_scan(&lambda, &cfg, &TestFunction::bump())?;
            for n in &result.notes {
                eprintln!("skipped: {n}");
            }
            let content = match format {
                Format::Svg => {
                    let series = x
                        .iter()
                        .map(|&xx| Series {
                            label: format!("X = {xx:e}"),
                            points: result
                                .rows
                                .iter()
                                .filter(|r| r.x == xx)
                                .map(|r| (r.theta, r.ratio))
                                .collect(),
                        })
                        .collect();
                    let plot = Plot {
                        title: "|delta| / (X/q) against theta".into(),
                        x_label: "theta".into(),
                        y_label: "|delta| / (X/q)".into(),
                        log_x: false,
                        log_y: true,
                        series,
                        vlines: vec![(THETA_4, "theta = 2/5".into()), (THETA_F, "theta = 21/52".into())],
                    };
                    emit_svg(&plot).map_err(|e| Failure::Runtime(anyhow!(e)))?
                }
                _ => result.csv(),
            };
            emit(common.out.as_deref(), "scan-level", format.ext(), &content)?;
            Ok(true)
        }
        Scan::Regimes { q, x, a, eta } => {
            let format = data_format(common, &[Format::Csv, Format::Svg])?;
            let x = positive("--X", *x)?;
            let ctx = modulus(*q, MAX_Q)?;
            let params = RegimeParams::new(*q as f64, x, *eta)?;
            let limit = (*q as f64).powi(4) / x;
            if limit < 1.0 {
                return Err(config(format!("q⁴/X = {limit} leaves no cells")));
            }
            let kl4 = kl_table_fft(4, &ctx)?;
            let s = DeltaSeries::build(series_len((2.0 * limit).ceil() as usize + 1)?)?;
            let result = regime_scan(&s.sym2, &kl4, *a, &params, &TestFunction::bump())?;
            let content = match format {
                Format::Svg => {
                    let series = apdist_core::RegimeCase::ALL
                        .iter()
                        .map(|c| Series {
                            label: c.as_str().into(),
                            points: result
                                .rows
                                .iter()
                                .filter(|r| r.case == *c)
                                .map(|r| (r.l * r.m, r.abs_s))
                                .collect(),
                        })
                        .filter(|s| !s.points.is_empty())
                        .collect();
                    let plot = Plot {
                        title: format!("bilinear sums, q = {q}, X = {x:e}"),
                        x_label: "L·M".into(),
                        y_label: "|S|".into(),
                        log_x: true,
                        log_y: true,
                        series,
                        vlines: vec![],
                    };
                    emit_svg(&plot).map_err(|e| Failure::Runtime(anyhow!(e)))?
                }
                _ => result.csv(),
            };
            emit(common.out.as_deref(), "scan-regimes", format.ext(), &content)?;
            Ok(true)
        }
    }
}

/// Parses and runs; the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(true) => 0,
        Ok(false) => 4,
        Err(f) => {
            eprintln!("apdist: {f}");
            f.exit_code()
        }
    }
}
