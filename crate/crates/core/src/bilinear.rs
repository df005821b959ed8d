//! Bilinear forms in hyper-Kloosterman sums: dyadic partition, Poisson
//! summation in `l`, the Cauchy–Schwarz split, and the regime map.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::archimedean::TestFunction;
use crate::coeffs::CoefficientSeries;
use crate::error::{Error, Result};
use crate::expsum::{correlation_row, TraceTable};
use crate::field::PrimeContext;
use crate::sum::{ComplexKahanSum, KahanSum};

/// Largest number of `(l, m)` pairs summed directly.
pub const PAIR_LIMIT: f64 = 1e7;

/// Smooth weight on `(0, ∞)` with bounded support.
pub trait Weight: Sync {
    fn eval(&self, x: f64) -> f64;
    /// Open interval outside which the weight vanishes.
    fn support(&self) -> (f64, f64);

    /// Positive integers inside the support.
    fn integers(&self) -> std::ops::RangeInclusive<u64> {
        let (lo, hi) = self.support();
        let first = lo.max(0.0).floor() as u64 + 1;
        let last = if hi.fract() == 0.0 {
            hi as u64 - 1
        } else {
            hi.floor() as u64
        };
        first.max(1)..=last
    }
}

impl Weight for TestFunction {
    fn eval(&self, x: f64) -> f64 {
        TestFunction::eval(self, x)
    }

    fn support(&self) -> (f64, f64) {
        TestFunction::support(self)
    }
}

/// `x ↦ w(x/scale)`.
#[derive(Debug, Clone, Copy)]
pub struct Dilated<'a, W: ?Sized> {
    pub inner: &'a W,
    pub scale: f64,
}

impl<W: Weight + ?Sized> Weight for Dilated<'_, W> {
    fn eval(&self, x: f64) -> f64 {
        self.inner.eval(x / self.scale)
    }

    fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.inner.support();
        (lo * self.scale, hi * self.scale)
    }
}

/// Pointwise product of two weights.
#[derive(Debug, Clone, Copy)]
pub struct Product<'a, A: ?Sized, B: ?Sized>(pub &'a A, pub &'a B);

impl<A: Weight + ?Sized, B: Weight + ?Sized> Weight for Product<'_, A, B> {
    fn eval(&self, x: f64) -> f64 {
        self.0.eval(x) * self.1.eval(x)
    }

    fn support(&self) -> (f64, f64) {
        let (a, b) = (self.0.support(), self.1.support());
        let lo = a.0.max(b.0);
        (lo, a.1.min(b.1).max(lo))
    }
}

// ---------------------------------------------------------------------------
// Dyadic partition

fn step_kernel(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Smooth step: `0` for `u ≤ 0`, `1` for `u ≥ 1`.
fn smooth_step(u: f64) -> f64 {
    let a = step_kernel(u);
    let b = step_kernel(1.0 - u);
    a / (a + b)
}

/// `W_j(x) = h(2log₂x − j) − h(2log₂x − j − 1)` with `h` a smooth step;
/// supported in `(2^{j/2}, 2^{(j+2)/2})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicBump {
    pub j: i32,
}

impl Weight for DyadicBump {
    fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let u = 2.0 * x.log2() - self.j as f64;
        smooth_step(u) - smooth_step(u - 1.0)
    }

    fn support(&self) -> (f64, f64) {
        (2f64.powf(self.j as f64 / 2.0), 2f64.powf((self.j + 2) as f64 / 2.0))
    }
}

/// Bumps `W_j`, `j ≥ −1`, meeting `[1, x_max]`; they sum to 1 on `[1, ∞)`.
pub fn dyadic_partition(x_max: f64) -> Vec<DyadicBump> {
    let last = (2.0 * x_max.max(1.0).log2()).ceil() as i32;
    (-1..=last).map(|j| DyadicBump { j }).collect()
}

// ---------------------------------------------------------------------------
// Bilinear sums

fn count(r: std::ops::RangeInclusive<u64>) -> f64 {
    (r.end() + 1).saturating_sub(*r.start()) as f64
}

fn check_pairs(w1: &impl Weight, w2: &impl Weight) -> Result<()> {
    let pairs = count(w1.integers()) * count(w2.integers());
    if pairs > PAIR_LIMIT {
        return Err(Error::ResourceLimit {
            what: "bilinear (l, m) pairs",
            value: pairs as u128,
            limit: PAIR_LIMIT as u128,
        });
    }
    Ok(())
}

/// `(X/q^{5/2}) Σ_l Σ_m λ(m) Kl₄(alm) w₁(l) w₂(m)`.
pub fn bilinear_sum_weighted(
    lambda: &CoefficientSeries,
    kl4: &TraceTable,
    a: i64,
    x: f64,
    w1: &impl Weight,
    w2: &impl Weight,
) -> Result<Complex64> {
    check_pairs(w1, w2)?;
    let q = kl4.q();
    let ms = w2.integers();
    if let Some(&last) = ms.clone().last().as_ref() {
        lambda.require_len(last as usize)?;
    }
    // Σ_l w₁(l) Kl₄(alm) depends on m through m mod q only, so group l by class.
    let mut by_class = vec![0.0f64; q as usize];
    for l in w1.integers() {
        by_class[(l % q) as usize] += w1.eval(l as f64);
    }
    let a = a.rem_euclid(q as i64) as u64;
    let mut acc = ComplexKahanSum::default();
    for m in ms {
        let w = w2.eval(m as f64);
        if w == 0.0 {
            continue;
        }
        let am = (a * (m % q)) % q;
        let mut inner = Complex64::new(0.0, 0.0);
        for (r, &c) in by_class.iter().enumerate() {
            if c != 0.0 {
                inner += kl4.at((am * r as u64 % q) as i64) * c;
            }
        }
        acc.add(inner * (lambda.value(m as usize) * w));
    }
    Ok(acc.value() * (x / (q as f64).powf(2.5)))
}

/// [`bilinear_sum_weighted`] with `w₁ = V₁(·/L)`, `w₂ = V₂(·/M)`.
#[allow(clippy::too_many_arguments)]
pub fn bilinear_sum(
    lambda: &CoefficientSeries,
    kl4: &TraceTable,
    a: i64,
    x: f64,
    l: f64,
    m: f64,
    v1: &TestFunction,
    v2: &TestFunction,
) -> Result<Complex64> {
    let w1 = Dilated { inner: v1, scale: l };
    let w2 = Dilated { inner: v2, scale: m };
    bilinear_sum_weighted(lambda, kl4, a, x, &w1, &w2)
}

/// `(X/q^{5/2}) Σ_l Σ_m λ(m) Kl₄(alm) w₁(l) w₂(m)` regrouped over the
/// dyadic partition in both variables, next to the same sum taken whole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regrouping {
    pub whole: Complex64,
    pub partitioned: Complex64,
    pub cells: usize,
}

impl Regrouping {
    pub fn relative_error(&self) -> f64 {
        (self.whole - self.partitioned).norm() / self.whole.norm()
    }
}

pub fn partition_regrouping(
    lambda: &CoefficientSeries,
    kl4: &TraceTable,
    a: i64,
    x: f64,
    w1: &impl Weight,
    w2: &impl Weight,
) -> Result<Regrouping> {
    let whole = bilinear_sum_weighted(lambda, kl4, a, x, w1, w2)?;
    let mut acc = ComplexKahanSum::default();
    let mut cells = 0;
    for bl in dyadic_partition(w1.support().1) {
        for bm in dyadic_partition(w2.support().1) {
            let p1 = Product(w1, &bl);
            let p2 = Product(w2, &bm);
            if p1.integers().is_empty() || p2.integers().is_empty() {
                continue;
            }
            acc.add(bilinear_sum_weighted(lambda, kl4, a, x, &p1, &p2)?);
            cells += 1;
        }
    }
    Ok(Regrouping {
        whole,
        partitioned: acc.value(),
        cells,
    })
}

// ---------------------------------------------------------------------------
// Poisson summation in l

/// `|V̂(ξ)|` is below `tol·|V̂(0)|` on `[ξ_c, 2ξ_c]` at the returned `ξ_c`.
pub fn fourier_cutoff(v: &TestFunction, tol: f64) -> Result<f64> {
    let zero = v.fourier(0.0)?.norm();
    let mut xi = 1.0;
    while xi < 1e6 {
        let mut worst: f64 = 0.0;
        for k in 0..=32 {
            worst = worst.max(v.fourier(xi * (1.0 + k as f64 / 32.0))?.norm());
        }
        if worst < tol * zero {
            return Ok(xi);
        }
        xi *= 1.5;
    }
    Err(Error::Truncation(format!(
        "Fourier transform of {} stays above {tol:e} of its peak",
        v.label()
    )))
}

/// `V̂(h·scale/q)` for `|h| ≤ h_max`, index `h + h_max`.
fn fourier_samples(v: &TestFunction, scale: f64, q: u64, h_max: i64) -> Result<Vec<Complex64>> {
    let half: Vec<Complex64> = (0..=h_max)
        .into_par_iter()
        .map(|h| v.fourier(h as f64 * scale / q as f64))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(2 * h_max as usize + 1);
    // V real, so V̂(−ξ) = conj V̂(ξ).
    out.extend(half[1..].iter().rev().map(|z| z.conj()));
    out.extend_from_slice(&half);
    Ok(out)
}

/// Tail tolerance of the Fourier-side truncation, relative to `|V̂(0)|`.
/// Computed `|V̂|` bottoms out near `1e-14·|V̂(0)|`.
pub const FOURIER_TAIL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonReport {
    pub q: u64,
    pub l: f64,
    pub m: f64,
    pub a: u64,
    /// `max_m |direct − Poisson| / max(1, |direct|)` over the `V₂` support.
    pub residual: f64,
    /// Dual frequencies used, `|l̃| ≤ h_max`.
    pub h_max: i64,
    /// Largest change from doubling `h_max`.
    pub doubling_change: f64,
    /// The `l̃ = 0` term `(L/√q) q^{-2} V̂₁(0)`.
    pub zero_term: Complex64,
}

/// Checks `Σ_l Kl₄(alm)V₁(l/L) = (L/√q) Σ_{l̃} [δ Kl₃(−am·l̃⁻¹) + q^{-2}] V̂₁(l̃L/q)`
/// for each `m` with `V₂(m/M) ≠ 0`.
#[allow(clippy::too_many_arguments)]
pub fn poisson_l_identity(
    ctx: &PrimeContext,
    kl4: &TraceTable,
    kl3: &TraceTable,
    a: i64,
    l: f64,
    m: f64,
    v1: &TestFunction,
    v2: &TestFunction,
) -> Result<PoissonReport> {
    if !ctx.is_unit(a) {
        return Err(Error::NotUnit {
            value: a,
            modulus: ctx.q(),
        });
    }
    let q = ctx.q();
    let qf = q as f64;
    let w1 = Dilated { inner: v1, scale: l };
    let w2 = Dilated { inner: v2, scale: m };
    check_pairs(&w1, &w2)?;
    let cut = fourier_cutoff(v1, FOURIER_TAIL)?;
    let h_max = (cut * qf / l).ceil() as i64;
    let samples = fourier_samples(v1, l, q, 2 * h_max)?;
    let q_m2 = qf.powi(-2);
    let a = ctx.reduce(a);

    let poisson = |mm: u64, h_lim: i64| -> Complex64 {
        let am = ctx.mul(a, mm % q);
        if am == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut acc = ComplexKahanSum::default();
        for h in -h_lim..=h_lim {
            let k_hat = match ctx.inverse(h) {
                Some(h_inv) => kl3.at(-((am * h_inv % q) as i64)) + q_m2,
                None => Complex64::new(q_m2, 0.0),
            };
            acc.add(k_hat * samples[(h + 2 * h_max) as usize]);
        }
        acc.value() * (l / qf.sqrt())
    };

    let mut residual: f64 = 0.0;
    let mut doubling: f64 = 0.0;
    for mm in w2.integers() {
        let am = ctx.mul(a, mm % q) as i64;
        let mut direct = ComplexKahanSum::default();
        for ll in w1.integers() {
            direct.add(kl4.at(am * ll as i64) * w1.eval(ll as f64));
        }
        let direct = direct.value();
        let p = poisson(mm, h_max);
        residual = residual.max((direct - p).norm() / direct.norm().max(1.0));
        doubling = doubling.max((poisson(mm, 2 * h_max) - p).norm());
    }
    Ok(PoissonReport {
        q,
        l,
        m,
        a,
        residual,
        h_max,
        doubling_change: doubling,
        zero_term: samples[2 * h_max as usize] * (q_m2 * l / qf.sqrt()),
    })
}

// ---------------------------------------------------------------------------
// Cauchy–Schwarz split

#[derive(Debug, Clone, PartialEq)]
pub struct CsSplitReport {
    pub q: u64,
    pub l: f64,
    pub m: f64,
    pub a: u64,
    /// `Σ_m |Σ_l Kl₄(alm)V₁(l/L)|² V₂(m/M)`.
    pub direct: f64,
    /// Terms with `l₁ = l₂`.
    pub diagonal: f64,
    /// Terms with `l₁ ≠ l₂`, via correlation sums and Poisson in `m`.
    pub off_diagonal: Complex64,
    /// `|direct − diagonal − off_diagonal| / direct`.
    pub residual: f64,
    /// `16 (Σ V₁²)(Σ V₂)`.
    pub diagonal_bound: f64,
    /// Reference shapes `LM` and `L²q^{1/2}`.
    pub lm_shape: f64,
    pub off_shape: f64,
    /// `|Σ_m λ(m)V₂ Σ_l Kl₄ V₁|²` and `(Σ_m |λ(m)|²V₂) · direct`.
    pub cs_lhs: f64,
    pub cs_rhs: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn cauchy_schwarz_split(
    ctx: &PrimeContext,
    kl4: &TraceTable,
    lambda: &CoefficientSeries,
    a: i64,
    l: f64,
    m: f64,
    v1: &TestFunction,
    v2: &TestFunction,
) -> Result<CsSplitReport> {
    if !ctx.is_unit(a) {
        return Err(Error::NotUnit {
            value: a,
            modulus: ctx.q(),
        });
    }
    let q = ctx.q();
    let qf = q as f64;
    let w1 = Dilated { inner: v1, scale: l };
    let w2 = Dilated { inner: v2, scale: m };
    check_pairs(&w1, &w2)?;
    let ls: Vec<(i64, f64)> = w1.integers().map(|x| (x as i64, w1.eval(x as f64))).collect();
    let pairs = (ls.len() * ls.len()) as f64 * qf;
    if pairs > PAIR_LIMIT * 10.0 {
        return Err(Error::ResourceLimit {
            what: "off-diagonal (l1, l2, x) triples",
            value: pairs as u128,
            limit: (PAIR_LIMIT * 10.0) as u128,
        });
    }
    if let Some(last) = w2.integers().last() {
        lambda.require_len(last as usize)?;
    }
    let a = ctx.reduce(a) as i64;

    let mut direct = KahanSum::default();
    let mut diagonal = KahanSum::default();
    let mut cs_left = ComplexKahanSum::default();
    let mut lambda_sq = KahanSum::default();
    let mut v2_mass = KahanSum::default();
    for mm in w2.integers() {
        let w = w2.eval(mm as f64);
        let mut inner = ComplexKahanSum::default();
        let mut diag = 0.0;
        for &(ll, v) in &ls {
            let k = kl4.at(a * ll * mm as i64);
            inner.add(k * v);
            diag += k.norm_sqr() * v * v;
        }
        let inner = inner.value();
        direct.add(inner.norm_sqr() * w);
        diagonal.add(diag * w);
        let lam = lambda.value(mm as usize);
        cs_left.add(inner * (lam * w));
        lambda_sq.add(lam * lam * w);
        v2_mass.add(w);
    }

    // Σ_m F(m)V₂(m/M) = (M/√q) Σ_h F̂(h) V̂₂(hM/q) with F̂ the correlation sum.
    let cut = fourier_cutoff(v2, FOURIER_TAIL)?;
    let h_max = (cut * qf / m).ceil() as i64;
    let samples = fourier_samples(v2, m, q, h_max)?;
    let off: Vec<Complex64> = ls
        .par_iter()
        .map(|&(l1, v1w)| {
            let mut acc = ComplexKahanSum::default();
            for &(l2, v2w) in &ls {
                if l1 == l2 {
                    continue;
                }
                let row = correlation_row(kl4, a, l1, l2);
                let mut inner = ComplexKahanSum::default();
                for h in -h_max..=h_max {
                    inner.add(row.at(h) * samples[(h + h_max) as usize]);
                }
                acc.add(inner.value() * (v1w * v2w));
            }
            acc.value()
        })
        .collect();
    let mut off_diagonal = ComplexKahanSum::default();
    off.into_iter().for_each(|z| off_diagonal.add(z));
    let off_diagonal = off_diagonal.value() * (m / qf.sqrt());

    let direct = direct.value();
    let diagonal = diagonal.value();
    let v1_sq: f64 = ls.iter().map(|(_, v)| v * v).sum();
    Ok(CsSplitReport {
        q,
        l,
        m,
        a: a as u64,
        direct,
        diagonal,
        off_diagonal,
        residual: (Complex64::new(direct - diagonal, 0.0) - off_diagonal).norm() / direct.max(f64::MIN_POSITIVE),
        diagonal_bound: 16.0 * v1_sq * v2_mass.value(),
        lm_shape: l * m,
        off_shape: l * l * qf.sqrt(),
        cs_lhs: cs_left.value().norm_sqr(),
        cs_rhs: lambda_sq.value() * direct,
    })
}

// ---------------------------------------------------------------------------
// Regimes

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeCase {
    Trivial,
    CauchySchwarz,
    PoissonL,
    Klms,
    CauchySchwarzHigh,
}

impl RegimeCase {
    pub const ALL: [RegimeCase; 5] = [
        RegimeCase::Trivial,
        RegimeCase::CauchySchwarz,
        RegimeCase::PoissonL,
        RegimeCase::Klms,
        RegimeCase::CauchySchwarzHigh,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegimeCase::Trivial => "trivial",
            RegimeCase::CauchySchwarz => "cauchy-schwarz",
            RegimeCase::PoissonL => "poisson-l",
            RegimeCase::Klms => "klms",
            RegimeCase::CauchySchwarzHigh => "cauchy-schwarz-high",
        }
    }
}

impl std::fmt::Display for RegimeCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Thresholds of the case split at fixed `(q, X, η)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeParams {
    pub q: f64,
    pub x: f64,
    pub eta: f64,
}

impl RegimeParams {
    pub const DEFAULT_ETA: f64 = 0.01;

    pub fn new(q: f64, x: f64, eta: f64) -> Result<Self> {
        if !(q >= 1.0 && x >= 1.0) {
            return Err(Error::InvalidArgument(format!("need q, X ≥ 1, got q = {q}, X = {x}")));
        }
        if !(eta > 0.0 && eta < 1.0 / 15.0) {
            return Err(Error::InvalidArgument(format!("η must lie in (0, 1/15), got {eta}")));
        }
        Ok(Self { q, x, eta })
    }

    /// `L₀ = X^{1/52}`.
    pub fn l0(&self) -> f64 {
        self.x.powf(1.0 / 52.0)
    }

    /// `q^{4/3}`.
    pub fn m_split(&self) -> f64 {
        self.q.powf(4.0 / 3.0)
    }

    /// `q^{8/15 + η}`.
    pub fn l_split(&self) -> f64 {
        self.q.powf(8.0 / 15.0 + self.eta)
    }

    /// Lower bounds sit in the higher case: `M > q^{4/3}`, `L > L₀`,
    /// `L ≥ q^{8/15+η}`.
    pub fn classify(&self, l: f64, m: f64) -> RegimeCase {
        if m <= self.m_split() {
            if l <= self.l0() {
                RegimeCase::Trivial
            } else if l < self.l_split() {
                RegimeCase::CauchySchwarz
            } else {
                RegimeCase::PoissonL
            }
        } else if l <= self.l0() {
            RegimeCase::Klms
        } else {
            RegimeCase::CauchySchwarzHigh
        }
    }

    /// Predicted size of `|S|` for a case, implied constants set to 1.
    pub fn envelope(&self, case: RegimeCase, l: f64, m: f64) -> f64 {
        let (q, x) = (self.q, self.x);
        let base = x / q;
        match case {
            RegimeCase::Trivial => base * l * m / q.powf(1.5),
            RegimeCase::PoissonL => base * m / q,
            RegimeCase::CauchySchwarz | RegimeCase::CauchySchwarzHigh => {
                base * (l * m * m / q.powi(3) + l * l * m / q.powf(2.5)).sqrt()
            }
            // In logs: q^{37} and X^{15} overflow long before the ratio does.
            RegimeCase::Klms => base * ((3.0 * l.ln() + 37.0 * q.ln() - 15.0 * x.ln()) / 18.0).exp(),
        }
    }
}

/// Case of `(L, M)` with its envelope.
pub fn classify_regime(l: f64, m: f64, q: f64, x: f64, eta: f64) -> Result<(RegimeCase, f64)> {
    let p = RegimeParams::new(q, x, eta)?;
    let case = p.classify(l, m);
    Ok((case, p.envelope(case, l, m)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeRow {
    pub l: f64,
    pub m: f64,
    pub case: RegimeCase,
    pub abs_s: f64,
    /// `(X/q^{5/2}) max|Kl₄| (Σ_l V₁) (Σ_m |λ(m)|V₂)`.
    pub trivial: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegimeScan {
    pub rows: Vec<RegimeRow>,
    pub notes: Vec<String>,
}

impl RegimeScan {
    /// CSV `L,M,case,abs_S,trivial,envelope`.
    pub fn csv(&self) -> String {
        let mut s = String::new();
        for n in &self.notes {
            let _ = writeln!(s, "# skipped: {n}");
        }
        s.push_str("L,M,case,abs_S,trivial,envelope\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.12e},{:.12e},{:.12e}",
                r.l, r.m, r.case, r.abs_s, r.trivial, r.envelope
            );
        }
        s
    }
}

/// Every power-of-two cell `(L, M)` with `LM ≤ q⁴/X`, ordered by `(L, M)`.
pub fn regime_scan(
    lambda: &CoefficientSeries,
    kl4: &TraceTable,
    a: i64,
    params: &RegimeParams,
    v: &TestFunction,
) -> Result<RegimeScan> {
    let q = kl4.q();
    let limit = (q as f64).powi(4) / params.x;
    let mut cells = Vec::new();
    let mut notes = Vec::new();
    let mut l = 1.0;
    while l <= limit {
        let mut m = 1.0;
        while l * m <= limit {
            if l * m > PAIR_LIMIT {
                notes.push(format!("L={l} M={m}: L·M above {PAIR_LIMIT:e}"));
            } else {
                cells.push((l, m));
            }
            m *= 2.0;
        }
        l *= 2.0;
    }
    let kl_max = kl4.max_abs();
    let scale = params.x / (q as f64).powf(2.5);
    let rows = cells
        .par_iter()
        .map(|&(l, m)| -> Result<RegimeRow> {
            let s = bilinear_sum(lambda, kl4, a, params.x, l, m, v, v)?;
            let w1 = Dilated { inner: v, scale: l };
            let w2 = Dilated { inner: v, scale: m };
            let l_mass: f64 = w1.integers().map(|x| w1.eval(x as f64)).sum();
            let m_mass: f64 = w2
                .integers()
                .map(|x| lambda.value(x as usize).abs() * w2.eval(x as f64))
                .sum();
            let case = params.classify(l, m);
            Ok(RegimeRow {
                l,
                m,
                case,
                abs_s: s.norm(),
                trivial: scale * kl_max * l_mass * m_mass,
                envelope: params.envelope(case, l, m),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegimeScan { rows, notes })
}
