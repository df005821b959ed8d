//! Discrepancy in arithmetic progressions, the twisted dual-sum identity,
//! and level-of-distribution scans.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::archimedean::{DualConfig, DualTable, DualTransform, SpectralData, TestFunction};
use crate::coeffs::CoefficientSeries;
use crate::error::{Error, Result};
use crate::expsum::{kl_table_fft, TraceTable};
use crate::field::{next_prime, PrimeContext, MAX_MODULUS};
use crate::sum::{ComplexKahanSum, KahanSum};

// ---------------------------------------------------------------------------
// Discrepancy

#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyReport {
    pub x: f64,
    pub q: u64,
    pub a: u64,
    pub delta: f64,
    pub trivial_bound: f64,
    pub ratio: f64,
    pub series_label: String,
    pub weight_label: String,
}

/// Integers `n` with `V(n/X) ≠ 0`, i.e. `X < n < 2X`.
fn support(x: f64) -> (usize, usize) {
    let lo = x.floor() as usize + 1;
    let hi = (2.0 * x).ceil() as usize - 1;
    (lo, hi)
}

/// `S_r = Σ_{n≡r (q)} λ(n)V(n/X)` for every `r mod q`.
pub fn class_sums(lambda: &CoefficientSeries, x: f64, q: u64, v: &TestFunction) -> Result<Vec<f64>> {
    if !(x >= 1.0 && x.is_finite()) {
        return Err(Error::InvalidArgument(format!("X must be ≥ 1, got {x}")));
    }
    let (lo, hi) = support(x);
    lambda.require_len(hi)?;
    let q = q as usize;
    let mut sums = vec![KahanSum::default(); q];
    for n in lo..=hi {
        let w = v.eval(n as f64 / x);
        if w != 0.0 {
            sums[n % q].add(lambda.value(n) * w);
        }
    }
    Ok(sums.iter().map(KahanSum::value).collect())
}

/// Average of the unit classes, `(1/φ(q)) Σ_{(n,q)=1} λ(n)V(n/X)`.
fn unit_average(ctx: &PrimeContext, sums: &[f64]) -> f64 {
    let mut acc = KahanSum::default();
    for r in 1..sums.len() {
        acc.add(sums[r]);
    }
    acc.value() / ctx.phi() as f64
}

fn report(
    ctx: &PrimeContext,
    x: f64,
    a: u64,
    sums: &[f64],
    mean: f64,
    lambda: &CoefficientSeries,
    v: &TestFunction,
) -> DiscrepancyReport {
    let delta = sums[a as usize] - mean;
    let trivial_bound = x / ctx.q() as f64;
    DiscrepancyReport {
        x,
        q: ctx.q(),
        a,
        delta,
        trivial_bound,
        ratio: delta / trivial_bound,
        series_label: lambda.label().to_string(),
        weight_label: v.label(),
    }
}

/// `Δ(λ, X, a; q)` for one unit `a`.
pub fn delta(
    lambda: &CoefficientSeries,
    x: f64,
    a: i64,
    ctx: &PrimeContext,
    v: &TestFunction,
) -> Result<DiscrepancyReport> {
    if !ctx.is_unit(a) {
        return Err(Error::NotUnit {
            value: a,
            modulus: ctx.q(),
        });
    }
    let sums = class_sums(lambda, x, ctx.q(), v)?;
    let mean = unit_average(ctx, &sums);
    Ok(report(ctx, x, ctx.reduce(a), &sums, mean, lambda, v))
}

/// `Δ` for every unit class, in increasing order of `a`.
pub fn delta_all(
    lambda: &CoefficientSeries,
    x: f64,
    ctx: &PrimeContext,
    v: &TestFunction,
) -> Result<Vec<DiscrepancyReport>> {
    let sums = class_sums(lambda, x, ctx.q(), v)?;
    let mean = unit_average(ctx, &sums);
    Ok((1..ctx.q())
        .map(|a| report(ctx, x, a, &sums, mean, lambda, v))
        .collect())
}

/// CSV `X,q,a,delta,trivial,ratio`.
pub fn delta_csv(rows: &[DiscrepancyReport]) -> String {
    let mut s = String::from("X,q,a,delta,trivial,ratio\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{:.17e},{:.17e},{:.17e}",
            r.x, r.q, r.a, r.delta, r.trivial_bound, r.ratio
        );
    }
    s
}

// ---------------------------------------------------------------------------
// Dual-sum identity

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityConfig {
    pub weight: TestFunction,
    pub spectral: SpectralData,
    pub dual: DualConfig,
    /// Dual sums stop once `|V̌| < truncation·peak` for good.
    pub truncation: f64,
    /// Multiplies the truncation point found from `truncation`.
    pub truncation_scale: f64,
    /// Grid oversampling of the `V̌` tables.
    pub oversample: f64,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self {
            weight: TestFunction::sharp_bump(32.0),
            spectral: SpectralData::holomorphic_sym2(12),
            dual: DualConfig::default(),
            truncation: 1e-12,
            truncation_scale: 1.0,
            oversample: 8.0,
        }
    }
}

impl IdentityConfig {
    /// Doubled quadrature order and doubled dual-sum length.
    pub fn refined(&self) -> Self {
        Self {
            dual: self.dual.refined(),
            truncation_scale: self.truncation_scale * 2.0,
            ..self.clone()
        }
    }

    /// Number of dual terms the configuration will ask for at `(q, X)`,
    /// without building the full identity.
    pub fn dual_length(&self, q: u64, x: f64) -> Result<usize> {
        let y0 = x / (q as f64).powi(4);
        let (_, cut) = self.tables(y0, f64::INFINITY)?;
        Ok(self.n_max(cut, y0))
    }

    fn n_max(&self, cut: f64, y0: f64) -> usize {
        (self.truncation_scale * cut / y0).floor() as usize + 1
    }

    /// `V̌` tables for `κ = 0, 1` and the common truncation point in `y`.
    fn tables(&self, y0: f64, budget: f64) -> Result<([DualTable; 2], f64)> {
        let y_hi = (budget * y0).clamp(1e7, 1e9);
        let mut out = Vec::with_capacity(2);
        let mut cut: f64 = y0;
        for kappa in 0..2u8 {
            let data = self.spectral.clone().with_kappa(kappa);
            let dual = DualTransform::new(&self.weight, &data, &self.dual)?;
            let table = dual.table(0.5 * y0, y_hi, self.oversample)?;
            let peak = table.peak();
            let c = table.cutoff(self.truncation * peak).ok_or_else(|| {
                Error::Truncation(format!(
                    "|V̌| (κ = {kappa}) stays above {:e}·peak up to y = {y_hi:e}",
                    self.truncation
                ))
            })?;
            cut = cut.max(c);
            out.push(table);
        }
        let [t0, t1]: [DualTable; 2] = out.try_into().expect("two tables");
        Ok(([t0, t1], cut))
    }
}

/// Pieces of the dual side for one class `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualSide {
    /// `(1/φ) Σ_{(n,q)=1} λ(n)V(n/X)`.
    pub first: f64,
    /// `(X/q^{5/2}) Σ λ(n)Kl₄(an)V̌₀(ny₀)`.
    pub second: Complex64,
    /// `−(X/(q⁴φ)) Σ_{(n,q)=1} λ(n)V̌₀(ny₀)`.
    pub third: Complex64,
    /// The same with `n` unrestricted.
    pub third_all: Complex64,
    /// Parity-split replacement for `second + third`.
    pub parity_split: Complex64,
}

impl DualSide {
    /// Single `κ = 0` transform for every character.
    pub fn variant_a(&self) -> Complex64 {
        self.second + self.third + self.first
    }

    /// Even and odd characters with their own `κ`.
    pub fn variant_b(&self) -> Complex64 {
        self.parity_split + self.first
    }

    /// Variant (a) with the third sum taken over all `n`.
    pub fn variant_a_all(&self) -> Complex64 {
        self.second + self.third_all + self.first
    }
}

/// The two sides of the twisted identity at fixed `(q, X)`, for every `a`.
#[derive(Debug, Clone)]
pub struct FunctionalEquation {
    ctx: PrimeContext,
    x: f64,
    y0: f64,
    kl4: TraceTable,
    class_sums: Vec<f64>,
    first: f64,
    /// `A_κ[r] = Σ_{n≤n_max, n≡r} λ(n)V̌_κ(ny₀)`.
    dual_classes: [Vec<Complex64>; 2],
    n_max: usize,
    cut: f64,
    tail: f64,
    heights: [f64; 2],
}

impl FunctionalEquation {
    /// `lambda` is `λ_{1⊞π}`; `π` is self-dual so it also serves the dual side.
    pub fn new(ctx: &PrimeContext, x: f64, lambda: &CoefficientSeries, cfg: &IdentityConfig) -> Result<Self> {
        let q = ctx.q();
        let y0 = x / (q as f64).powi(4);
        let class_sums = class_sums(lambda, x, q, &cfg.weight)?;
        let first = unit_average(ctx, &class_sums);

        let (tables, cut) = cfg.tables(y0, lambda.len() as f64)?;
        let n_max = cfg.n_max(cut, y0);
        if n_max > lambda.len() {
            return Err(Error::SeriesTooShort {
                label: lambda.label().to_string(),
                len: lambda.len(),
                need: n_max,
            });
        }
        let peak = tables[0].peak().max(tables[1].peak());
        let tail = tables[0]
            .envelope_beyond(n_max as f64 * y0)
            .max(tables[1].envelope_beyond(n_max as f64 * y0))
            / peak;
        let mut heights = [0.0; 2];
        for (kappa, h) in heights.iter_mut().enumerate() {
            let data = cfg.spectral.clone().with_kappa(kappa as u8);
            *h = DualTransform::new(&cfg.weight, &data, &cfg.dual)?.height();
        }

        let qs = q as usize;
        let mut acc = [
            vec![ComplexKahanSum::default(); qs],
            vec![ComplexKahanSum::default(); qs],
        ];
        for n in 1..=n_max {
            let l = lambda.value(n);
            if l == 0.0 {
                continue;
            }
            let y = n as f64 * y0;
            let r = n % qs;
            acc[0][r].add(tables[0].eval(y) * l);
            acc[1][r].add(tables[1].eval(y) * l);
        }
        let dual_classes = acc.map(|v| v.iter().map(ComplexKahanSum::value).collect());

        Ok(Self {
            ctx: ctx.clone(),
            x,
            y0,
            kl4: kl_table_fft(4, ctx)?,
            class_sums,
            first,
            dual_classes,
            n_max,
            cut,
            tail,
            heights,
        })
    }

    pub fn q(&self) -> u64 {
        self.ctx.q()
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    /// `X/q⁴`, the dual scale.
    pub fn y0(&self) -> f64 {
        self.y0
    }

    /// Length of the dual sums.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `y` beyond which `|V̌|` stays below the truncation threshold.
    pub fn cutoff(&self) -> f64 {
        self.cut
    }

    /// Largest tabulated `|V̌|/peak` past the end of the dual sums.
    pub fn tail_envelope(&self) -> f64 {
        self.tail
    }

    /// Contour heights of the `κ = 0, 1` transforms.
    pub fn heights(&self) -> [f64; 2] {
        self.heights
    }

    pub fn kl4(&self) -> &TraceTable {
        &self.kl4
    }

    /// `Σ_{n≡a} λ(n)V(n/X)` by direct summation.
    pub fn lhs(&self, a: i64) -> f64 {
        self.class_sums[self.ctx.reduce(a) as usize]
    }

    pub fn dual_side(&self, a: i64) -> Result<DualSide> {
        if !self.ctx.is_unit(a) {
            return Err(Error::NotUnit {
                value: a,
                modulus: self.q(),
            });
        }
        let q = self.q();
        let qf = q as f64;
        let phi = self.ctx.phi() as f64;
        let a = self.ctx.reduce(a);
        let [d0, d1] = &self.dual_classes;

        let mut second = ComplexKahanSum::default();
        let mut units = ComplexKahanSum::default();
        let mut split = ComplexKahanSum::default();
        let inv_sqrt_q = qf.powf(-0.5);
        let q_m2 = qf.powi(-2);
        for r in 1..q {
            let m = self.ctx.mul(a, r) as i64;
            let k = self.kl4.at(m);
            let k_neg = self.kl4.at(-m);
            let (a0, a1) = (d0[r as usize], d1[r as usize]);
            second.add(a0 * k);
            units.add(a0);
            let even = (k + k_neg) * (0.5 * phi * inv_sqrt_q) - q_m2;
            let odd = (k - k_neg) * (0.5 * phi * inv_sqrt_q);
            split.add(a0 * even + a1 * odd);
        }
        let second = second.value() * (self.x / qf.powf(2.5));
        let units = units.value();
        let third = -units * (self.x / (qf.powi(4) * phi));
        let third_all = -(units + d0[0]) * (self.x / (qf.powi(4) * phi));
        let parity_split = split.value() * (self.x / (qf * qf * phi));
        Ok(DualSide {
            first: self.first,
            second,
            third,
            third_all,
            parity_split,
        })
    }

    pub fn row(&self, a: i64) -> Result<IdentityRow> {
        let side = self.dual_side(a)?;
        let lhs = self.lhs(a);
        let rel = |z: Complex64| (z - lhs).norm() / lhs.abs();
        Ok(IdentityRow {
            q: self.q(),
            x: self.x,
            a: self.ctx.reduce(a),
            lhs,
            rhs_a: side.variant_a(),
            rhs_b: side.variant_b(),
            residual_a: rel(side.variant_a()),
            residual_b: rel(side.variant_b()),
            residual_a_all: rel(side.variant_a_all()),
            third: side.third,
            first: side.first,
        })
    }

    /// Rows for every unit `a`.
    pub fn rows(&self) -> Result<Vec<IdentityRow>> {
        (1..self.q() as i64).map(|a| self.row(a)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityRow {
    pub q: u64,
    pub x: f64,
    pub a: u64,
    pub lhs: f64,
    pub rhs_a: Complex64,
    pub rhs_b: Complex64,
    /// `|LHS − RHS|/|LHS|`.
    pub residual_a: f64,
    pub residual_b: f64,
    /// Variant (a) with the third sum over all `n`.
    pub residual_a_all: f64,
    pub third: Complex64,
    pub first: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Single `κ = 0` transform.
    Literal,
    /// Parity-split transforms.
    ParitySplit,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Literal => "a",
            Variant::ParitySplit => "b",
        }
    }
}

/// Summary of the identity over every unit class at one `(q, X)`.
#[derive(Debug, Clone)]
pub struct IdentitySummary {
    pub q: u64,
    pub x: f64,
    pub rows: Vec<IdentityRow>,
    pub max_residual_a: f64,
    pub max_residual_b: f64,
    pub max_residual_a_all: f64,
    /// `|Σ_a (LHS − RHS_a)| / Σ_a |LHS|`; both sides' `a`-dependence sums out.
    pub average_residual_a: f64,
    pub average_residual_b: f64,
    /// `max_a |third| / |first|`.
    pub third_ratio: f64,
    pub n_max: usize,
    pub cutoff: f64,
    pub tail_envelope: f64,
    pub heights: [f64; 2],
}

impl IdentitySummary {
    pub fn from_equation(fe: &FunctionalEquation) -> Result<Self> {
        let rows = fe.rows()?;
        let max = |f: fn(&IdentityRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
        let mut lhs_abs = KahanSum::default();
        let mut diff_a = ComplexKahanSum::default();
        let mut diff_b = ComplexKahanSum::default();
        for r in &rows {
            lhs_abs.add(r.lhs.abs());
            diff_a.add(r.rhs_a - r.lhs);
            diff_b.add(r.rhs_b - r.lhs);
        }
        Ok(Self {
            q: fe.q(),
            x: fe.x(),
            max_residual_a: max(|r| r.residual_a),
            max_residual_b: max(|r| r.residual_b),
            max_residual_a_all: max(|r| r.residual_a_all),
            average_residual_a: diff_a.value().norm() / lhs_abs.value(),
            average_residual_b: diff_b.value().norm() / lhs_abs.value(),
            third_ratio: max(|r| r.third.norm() / r.first.abs()),
            n_max: fe.n_max(),
            cutoff: fe.cutoff(),
            tail_envelope: fe.tail_envelope(),
            heights: fe.heights(),
            rows,
        })
    }

    pub fn best(&self) -> (Variant, f64) {
        if self.max_residual_a <= self.max_residual_b {
            (Variant::Literal, self.max_residual_a)
        } else {
            (Variant::ParitySplit, self.max_residual_b)
        }
    }

    pub fn residual(&self, variant: Variant) -> f64 {
        match variant {
            Variant::Literal => self.max_residual_a,
            Variant::ParitySplit => self.max_residual_b,
        }
    }

    /// CSV `q,X,a,lhs,rhs_variant_a,rhs_variant_b,residual_a,residual_b`;
    /// right-hand sides are real parts.
    pub fn csv(&self) -> String {
        let mut s = String::from("q,X,a,lhs,rhs_variant_a,rhs_variant_b,residual_a,residual_b\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.17e},{:.17e},{:.17e},{:.6e},{:.6e}",
                r.q, r.x, r.a, r.lhs, r.rhs_a.re, r.rhs_b.re, r.residual_a, r.residual_b
            );
        }
        s
    }
}

/// Identity at `(q, X)` under a base and a refined configuration.
#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub base: IdentitySummary,
    pub refined: IdentitySummary,
}

impl IdentityReport {
    pub fn best(&self) -> (Variant, f64) {
        self.base.best()
    }

    /// `max(r₁/r₀, r₀/r₁)` for the best variant's maximal residuals.
    pub fn stability(&self) -> f64 {
        let (v, r0) = self.base.best();
        let r1 = self.refined.residual(v);
        (r1 / r0).max(r0 / r1)
    }

    /// Within a factor 2 under refinement, or numerically zero in both runs.
    pub fn is_stable(&self) -> bool {
        let (v, r0) = self.base.best();
        let r1 = self.refined.residual(v);
        self.stability() <= 2.0 || (r0 <= RESIDUAL_FLOOR && r1 <= RESIDUAL_FLOOR)
    }
}

/// Relative residuals below this are indistinguishable from zero given
/// `V̌` tables accurate to about `1e-12·peak` and dual sums of length `~10⁶`.
pub const RESIDUAL_FLOOR: f64 = 1e-9;

/// Builds the identity twice: with `cfg` and with `cfg.refined()`.
pub fn verify_functional_identity(
    ctx: &PrimeContext,
    x: f64,
    lambda: &CoefficientSeries,
    cfg: &IdentityConfig,
) -> Result<IdentityReport> {
    let base = IdentitySummary::from_equation(&FunctionalEquation::new(ctx, x, lambda, cfg)?)?;
    let refined = IdentitySummary::from_equation(&FunctionalEquation::new(ctx, x, lambda, &cfg.refined())?)?;
    Ok(IdentityReport { base, refined })
}

// ---------------------------------------------------------------------------
// Level scans

/// `θ₄ = 2/5`.
pub const THETA_4: f64 = 2.0 / 5.0;
/// `θ_f = 21/52`.
pub const THETA_F: f64 = 21.0 / 52.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LevelScanConfig {
    pub xs: Vec<f64>,
    pub thetas: Vec<f64>,
    /// Random classes per modulus.
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRow {
    pub x: f64,
    pub theta: f64,
    pub q: u64,
    pub a: u64,
    pub delta: f64,
    pub trivial: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LevelScan {
    pub rows: Vec<LevelRow>,
    /// Skipped `(X, θ)` cells with the reason.
    pub notes: Vec<String>,
}

impl LevelScan {
    /// CSV `X,theta,q,a,delta,trivial,ratio` after `#` metadata lines.
    pub fn csv(&self) -> String {
        let mut s = format!("# theta_4={THETA_4} theta_f={THETA_F}\n");
        for n in &self.notes {
            let _ = writeln!(s, "# skipped: {n}");
        }
        s.push_str("X,theta,q,a,delta,trivial,ratio\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.17e},{:.17e},{:.17e}",
                r.x, r.theta, r.q, r.a, r.delta, r.trivial, r.ratio
            );
        }
        s
    }
}

/// Least prime `q ≥ ⌊X^θ⌋` usable as a modulus, if any.
pub fn scan_modulus(x: f64, theta: f64) -> Option<u64> {
    let start = x.powf(theta).floor().max(3.0);
    if start >= MAX_MODULUS as f64 {
        return None;
    }
    let q = next_prime(start as u64);
    (q < MAX_MODULUS && (q as f64) <= 2.0 * x).then_some(q)
}

/// `|Δ|/(X/q)` at `q` near `X^θ` for random unit classes.
pub fn level_scan(lambda: &CoefficientSeries, cfg: &LevelScanConfig, v: &TestFunction) -> Result<LevelScan> {
    let mut cells = Vec::new();
    let mut notes = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for &x in &cfg.xs {
        for &theta in &cfg.thetas {
            match scan_modulus(x, theta) {
                Some(q) => {
                    let classes: Vec<u64> = (0..cfg.samples).map(|_| rng.gen_range(1..q)).collect();
                    cells.push((x, theta, q, classes));
                }
                None => notes.push(format!("X={x} theta={theta}: no prime modulus in range")),
            }
        }
    }
    let blocks: Vec<Vec<LevelRow>> = cells
        .par_iter()
        .map(|(x, theta, q, classes)| -> Result<Vec<LevelRow>> {
            let ctx = PrimeContext::new(*q)?;
            let sums = class_sums(lambda, *x, *q, v)?;
            let mean = unit_average(&ctx, &sums);
            Ok(classes
                .iter()
                .map(|&a| {
                    let r = report(&ctx, *x, a, &sums, mean, lambda, v);
                    LevelRow {
                        x: *x,
                        theta: *theta,
                        q: *q,
                        a,
                        delta: r.delta,
                        trivial: r.trivial_bound,
                        ratio: r.ratio.abs(),
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(LevelScan {
        rows: blocks.into_iter().flatten().collect(),
        notes,
    })
}
