//! Hyper-Kloosterman sums, Gauss sums, the unitary Fourier transform on
//! `Z/qZ`, and correlation sums of products of `Kl_4`.
//!
//! `Kl_d(n;q) = q^{-(d-1)/2} Σ_{x_1···x_d ≡ n} e((x_1+···+x_d)/q)` with all
//! `x_i` units, so `Kl_d(0;q) = 0`. Three engines build it: a brute-force
//! enumeration, a level-by-level recursion, and a convolution over discrete
//! logarithms done with FFTs. The FFT engine is the production path.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::{Direction, Fft};
use crate::field::{DirichletCharacter, PrimeContext};
use crate::sum::{csum, ComplexKahanSum};

/// Largest `q^{d-1}` enumerated by [`kl_brute`].
pub const BRUTE_LIMIT: u128 = 10_000_000;

/// A function on `Z/qZ`, stored by residue.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    q: u64,
    values: Vec<Complex64>,
    label: String,
}

impl TraceTable {
    pub fn new(q: u64, values: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if values.len() as u64 != q {
            return Err(Error::TableLength { len: values.len(), q });
        }
        Ok(Self {
            q,
            values,
            label: label.into(),
        })
    }

    /// Tabulates `f` on `0..q`.
    pub fn from_fn(q: u64, label: impl Into<String>, f: impl Fn(u64) -> Complex64) -> Self {
        Self {
            q,
            values: (0..q).map(f).collect(),
            label: label.into(),
        }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Value at `n mod q`.
    #[inline]
    pub fn at(&self, n: i64) -> Complex64 {
        self.values[n.rem_euclid(self.q as i64) as usize]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_diff(&self, other: &TraceTable) -> f64 {
        assert_eq!(self.q, other.q);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# q={} label={}", self.q, self.label)?;
        writeln!(out, "n,re,im")?;
        for (n, z) in self.values.iter().enumerate() {
            writeln!(out, "{n},{:.17e},{:.17e}", z.re, z.im)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut q = None;
        let mut label = String::new();
        let mut values = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let parse_err = |message: String| Error::Parse { line: lineno, message };
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(header) = trimmed.strip_prefix('#') {
                let header = header.trim();
                let rest = header
                    .strip_prefix("q=")
                    .ok_or_else(|| parse_err("expected `# q=<q> label=<label>`".into()))?;
                let (qs, lab) = match rest.split_once(' ') {
                    Some((qs, lab)) => (qs, lab.trim()),
                    None => (rest, ""),
                };
                q = Some(qs.parse::<u64>().map_err(|e| parse_err(e.to_string()))?);
                label = lab.strip_prefix("label=").unwrap_or(lab).to_string();
                continue;
            }
            if trimmed == "n,re,im" {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').collect();
            if fields.len() != 3 {
                return Err(parse_err(format!("expected 3 fields, found {}", fields.len())));
            }
            let n: usize = fields[0]
                .parse()
                .map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?;
            if n != values.len() {
                return Err(parse_err(format!("row index {n} out of order")));
            }
            let re: f64 = fields[1]
                .parse()
                .map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?;
            let im: f64 = fields[2]
                .parse()
                .map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?;
            values.push(Complex64::new(re, im));
        }
        let q = q.ok_or_else(|| Error::Parse {
            line: 1,
            message: "missing `# q=` header".into(),
        })?;
        Self::new(q, values, label)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

#[inline]
fn normalization(d: u32, q: u64) -> f64 {
    (q as f64).powf(-((d as f64) - 1.0) / 2.0)
}

// ---------------------------------------------------------------------------
// Engines

/// Direct enumeration over `d-1` free units; the last is forced.
pub fn kl_brute(d: u32, n: i64, ctx: &PrimeContext) -> Result<Complex64> {
    if d == 0 {
        return Err(Error::InvalidArgument("degree d must be at least 1".into()));
    }
    let q = ctx.q();
    let work = (q as u128).checked_pow(d - 1).unwrap_or(u128::MAX);
    if work > BRUTE_LIMIT {
        return Err(Error::ResourceLimit {
            what: "brute-force enumeration q^(d-1)",
            value: work,
            limit: BRUTE_LIMIT,
        });
    }
    let n = ctx.reduce(n);
    if n == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let free = (d - 1) as usize;
    let mut xs = vec![1u64; free];
    let mut acc = ComplexKahanSum::new();
    loop {
        let mut prod = 1u64;
        let mut trace = 0u64;
        for &x in &xs {
            prod = prod * x % q;
            trace += x;
        }
        let last = ctx.mul(n, ctx.inverse(prod as i64).expect("product of units"));
        acc.add(ctx.additive_char(((trace + last) % q) as i64));
        // Odometer over (Z/qZ)^× in each free coordinate.
        let mut i = 0;
        loop {
            if i == free {
                return Ok(acc.value() * normalization(d, q));
            }
            xs[i] += 1;
            if xs[i] < q {
                break;
            }
            xs[i] = 1;
            i += 1;
        }
    }
}

/// Degree-1 table: `e(n/q)` on units, 0 at the origin.
fn kl1_table(ctx: &PrimeContext) -> Vec<Complex64> {
    (0..ctx.q())
        .map(|n| {
            if n == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                ctx.additive_char(n as i64)
            }
        })
        .collect()
}

/// `table_d[n] = q^{-1/2} Σ_x table_{d-1}[n x̄] e(x/q)`, `O(d q²)`.
pub fn kl_table_recursive(d: u32, ctx: &PrimeContext) -> Result<TraceTable> {
    if d == 0 {
        return Err(Error::InvalidArgument("degree d must be at least 1".into()));
    }
    let q = ctx.q();
    let scale = 1.0 / (q as f64).sqrt();
    let inverses: Vec<u64> = (1..q).map(|x| ctx.inverse(x as i64).unwrap()).collect();
    let mut table = kl1_table(ctx);
    for _ in 2..=d {
        let prev = &table;
        let next: Vec<Complex64> = (0..q)
            .into_par_iter()
            .map(|n| {
                if n == 0 {
                    return Complex64::new(0.0, 0.0);
                }
                let mut acc = ComplexKahanSum::new();
                for x in 1..q {
                    let idx = ctx.mul(n, inverses[(x - 1) as usize]);
                    acc.add(prev[idx as usize] * ctx.additive_char(x as i64));
                }
                acc.value() * scale
            })
            .collect();
        table = next;
    }
    TraceTable::new(q, table, format!("Kl{d} recursive"))
}

/// `d`-fold cyclic convolution of `k ↦ e(g^k/q)` over `Z/(q-1)Z`.
pub fn kl_table_fft(d: u32, ctx: &PrimeContext) -> Result<TraceTable> {
    if d == 0 {
        return Err(Error::InvalidArgument("degree d must be at least 1".into()));
    }
    let q = ctx.q();
    let order = (q - 1) as usize;
    let plan = Fft::new(order);
    let mut spectrum: Vec<Complex64> = (0..order as u64)
        .map(|k| ctx.additive_char(ctx.power(k) as i64))
        .collect();
    plan.forward(&mut spectrum);
    for z in spectrum.iter_mut() {
        *z = z.powu(d);
    }
    plan.inverse(&mut spectrum);
    let scale = normalization(d, q) / order as f64;
    let mut values = vec![Complex64::new(0.0, 0.0); q as usize];
    for (k, z) in spectrum.iter().enumerate() {
        values[ctx.power(k as u64) as usize] = z * scale;
    }
    TraceTable::new(q, values, format!("Kl{d}"))
}

// ---------------------------------------------------------------------------
// Fourier analysis on Z/qZ

/// `K̂(n) = q^{-1/2} Σ_x K(x) e(nx/q)`.
pub fn fourier_zq(k: &TraceTable) -> TraceTable {
    let q = k.q;
    let mut values = k.values.clone();
    Fft::new(q as usize).process(&mut values, Direction::Inverse);
    let scale = 1.0 / (q as f64).sqrt();
    values.iter_mut().for_each(|z| *z *= scale);
    TraceTable {
        q,
        values,
        label: format!("fourier({})", k.label),
    }
}

/// `ε_χ = q^{-1/2} Σ_x χ(x) e(x/q)` by direct summation.
pub fn gauss_sum(chi: &DirichletCharacter<'_>) -> Complex64 {
    let ctx = chi.context();
    let q = ctx.q();
    csum((1..q as i64).map(|x| chi.value(x) * ctx.additive_char(x))) / (q as f64).sqrt()
}

/// All `q-1` normalized Gauss sums, indexed by the character label `j`,
/// from one length-`(q-1)` FFT.
pub fn gauss_sums(ctx: &PrimeContext) -> Vec<Complex64> {
    let q = ctx.q();
    let order = (q - 1) as usize;
    let mut data: Vec<Complex64> = (0..order as u64)
        .map(|k| ctx.additive_char(ctx.power(k) as i64))
        .collect();
    // ε_j = q^{-1/2} Σ_k e(jk/(q-1)) e(g^k/q).
    Fft::new(order).process(&mut data, Direction::Inverse);
    let scale = 1.0 / (q as f64).sqrt();
    data.iter_mut().for_each(|z| *z *= scale);
    data
}

/// Outcome of an identity sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub label: String,
    pub max_error: f64,
    /// Description of the input attaining `max_error`.
    pub worst: String,
    pub checks: usize,
}

impl VerificationReport {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            max_error: 0.0,
            worst: String::new(),
            checks: 0,
        }
    }

    pub fn record(&mut self, error: f64, at: impl FnOnce() -> String) {
        self.checks += 1;
        if error > self.max_error || self.checks == 1 {
            self.max_error = error;
            self.worst = at();
        }
    }

    pub fn merge(&mut self, other: &VerificationReport) {
        if other.checks > 0 && (self.checks == 0 || other.max_error > self.max_error) {
            self.max_error = other.max_error;
            self.worst = other.worst.clone();
        }
        self.checks += other.checks;
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_error <= tolerance
    }
}

/// Checks `Σ_{χ≠χ0} χ̄(m) ε_χ⁴ = φ(q) q^{-1/2} Kl_4(m;q) − q^{-2}` for every
/// unit `m`, with the Gauss sums taken from the FFT.
pub fn verify_gauss_spectral(ctx: &PrimeContext, kl4: &TraceTable) -> VerificationReport {
    let q = ctx.q();
    let qf = q as f64;
    let eps4: Vec<Complex64> = gauss_sums(ctx).iter().map(|e| e.powu(4)).collect();
    let mut report = VerificationReport::new(format!("gauss spectral q={q}"));
    for m in 1..q as i64 {
        let lhs = csum(
            ctx.characters()
                .skip(1)
                .map(|chi| chi.value(m).conj() * eps4[chi.index() as usize]),
        );
        let rhs = kl4.at(m) * (ctx.phi() as f64 / qf.sqrt()) - qf.powi(-2);
        report.record((lhs - rhs).norm(), || format!("q={q} m={m}"));
    }
    report
}

/// Checks the Fourier transform of `x ↦ Kl_4(alx;q)` against
/// `δ_{(m,q)=1} Kl_3(−al·m̄;q) + q^{-2}` at every residue `m`.
pub fn verify_kl4_hat(
    ctx: &PrimeContext,
    kl4: &TraceTable,
    kl3: &TraceTable,
    a: i64,
    l: i64,
) -> Result<VerificationReport> {
    let q = ctx.q();
    for value in [a, l] {
        if !ctx.is_unit(value) {
            return Err(Error::NotUnit { value, modulus: q });
        }
    }
    let b = ctx.mul(ctx.reduce(a), ctx.reduce(l)) as i64;
    let k = TraceTable::from_fn(q, "Kl4(alx)", |x| kl4.at(b * x as i64));
    let khat = fourier_zq(&k);
    let qm2 = (q as f64).powi(-2);
    let mut report = VerificationReport::new(format!("kl4 hat q={q} a={a} l={l}"));
    for m in 0..q as i64 {
        let expect = match ctx.inverse(m) {
            Some(minv) => kl3.at(-b * minv as i64) + qm2,
            None => Complex64::new(qm2, 0.0),
        };
        report.record((khat.at(m) - expect).norm(), || format!("q={q} a={a} l={l} m={m}"));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Correlation sums

/// `m̃ ↦ C_a(m̃,l₁,l₂;q)` for every residue, as one Fourier transform.
pub fn correlation_row(kl4: &TraceTable, a: i64, l1: i64, l2: i64) -> TraceTable {
    let q = kl4.q();
    let product = TraceTable::from_fn(q, "Kl4 product", |x| {
        let x = x as i64;
        kl4.at(a * l1 * x) * kl4.at(a * l2 * x).conj()
    });
    let mut row = fourier_zq(&product);
    row.label = format!("C_a a={a} l1={l1} l2={l2}");
    row
}

/// `C_a(m̃,l₁,l₂;q) = q^{-1/2} Σ_x Kl_4(al₁x) conj(Kl_4(al₂x)) e(xm̃/q)`.
pub fn correlation_sum(ctx: &PrimeContext, kl4: &TraceTable, a: i64, m: i64, l1: i64, l2: i64) -> Complex64 {
    let q = ctx.q();
    csum((1..q as i64).map(|x| kl4.at(a * l1 * x) * kl4.at(a * l2 * x).conj() * ctx.additive_char(x * m)))
        / (q as f64).sqrt()
}

/// Maximum of `|C_a|` over `l₁ ≢ l₂` and all `m̃`, next to `q^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMax {
    pub q: u64,
    pub a: u64,
    pub max_abs: f64,
    pub argmax: (u64, u64, u64),
    pub sqrt_q: f64,
}

pub fn correlation_max(ctx: &PrimeContext, kl4: &TraceTable, a: u64) -> CorrelationMax {
    let q = ctx.q();
    let rows: Vec<(f64, (u64, u64, u64))> = (1..q)
        .into_par_iter()
        .map(|l1| {
            let mut best = (0.0f64, (l1, 0, 0));
            for l2 in 1..q {
                if l2 == l1 {
                    continue;
                }
                let row = correlation_row(kl4, a as i64, l1 as i64, l2 as i64);
                for (m, z) in row.values().iter().enumerate() {
                    if z.norm() > best.0 {
                        best = (z.norm(), (l1, l2, m as u64));
                    }
                }
            }
            best
        })
        .collect();
    let (max_abs, argmax) = rows
        .into_iter()
        .fold((0.0, (0, 0, 0)), |acc, r| if r.0 > acc.0 { r } else { acc });
    CorrelationMax {
        q,
        a,
        max_abs,
        argmax,
        sqrt_q: (q as f64).sqrt(),
    }
}

pub fn correlation_max_csv(rows: &[CorrelationMax]) -> String {
    let mut s = String::from("q,a,max_abs_c,l1,l2,m,sqrt_q\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{:.12e},{},{},{},{:.12e}",
            r.q, r.a, r.max_abs, r.argmax.0, r.argmax.1, r.argmax.2, r.sqrt_q
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::is_prime;
    use proptest::prelude::*;

    fn primes_upto(n: u64) -> Vec<u64> {
        (3..=n).filter(|&p| is_prime(p)).collect()
    }

    /// Kl_d by enumerating all d-tuples of units, with no forced variable.
    fn kl_full_enumeration(d: u32, n: u64, q: u64) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        let count = (q - 1).pow(d);
        for idx in 0..count {
            let mut rest = idx;
            let mut prod = 1;
            let mut trace = 0;
            for _ in 0..d {
                let x = rest % (q - 1) + 1;
                rest /= q - 1;
                prod = prod * x % q;
                trace += x;
            }
            if prod == n % q {
                let theta = std::f64::consts::TAU * (trace % q) as f64 / q as f64;
                total += Complex64::new(theta.cos(), theta.sin());
            }
        }
        total * (q as f64).powf(-((d as f64) - 1.0) / 2.0)
    }

    #[test]
    fn degree_one_is_additive_character() {
        let ctx = PrimeContext::new(11).unwrap();
        for n in 1..11 {
            let z = kl_brute(1, n, &ctx).unwrap();
            assert!((z - ctx.additive_char(n)).norm() < 1e-15);
        }
        let t = kl_table_fft(1, &ctx).unwrap();
        for n in 1..11 {
            assert!((t.at(n) - ctx.additive_char(n)).norm() < 1e-14);
        }
    }

    #[test]
    fn kl2_at_q5() {
        let ctx = PrimeContext::new(5).unwrap();
        let z = kl_brute(2, 1, &ctx).unwrap();
        // x ranges over units, x + 1/x: 2, 2+3=5≡0, 3+2=0, 4+4=8≡3.
        // e(2/5) + 2 + e(3/5) = 2 + 2cos(4π/5) = 0.381966...
        assert!((z.re - 0.381966 / 5f64.sqrt()).abs() < 1e-6);
        assert!((z.re - 0.170820).abs() < 1e-6 && z.im.abs() < 1e-14);
    }

    #[test]
    fn zero_residue_vanishes() {
        let ctx = PrimeContext::new(7).unwrap();
        for d in 1..=4 {
            assert_eq!(kl_brute(d, 0, &ctx).unwrap(), Complex64::new(0.0, 0.0));
            assert_eq!(kl_table_fft(d, &ctx).unwrap().at(0).norm(), 0.0);
            assert_eq!(kl_table_recursive(d, &ctx).unwrap().at(0).norm(), 0.0);
        }
    }

    #[test]
    fn brute_matches_full_enumeration() {
        for q in [3, 5, 7] {
            for d in 1..=3 {
                for n in 0..q {
                    let ctx = PrimeContext::new(q).unwrap();
                    let a = kl_brute(d, n as i64, &ctx).unwrap();
                    let b = kl_full_enumeration(d, n, q);
                    assert!((a - b).norm() < 1e-12, "q={q} d={d} n={n}");
                }
            }
        }
    }

    #[test]
    fn brute_guard() {
        let ctx = PrimeContext::new(101).unwrap();
        assert!(matches!(kl_brute(5, 1, &ctx), Err(Error::ResourceLimit { .. })));
    }

    #[test]
    fn engines_agree_small() {
        for q in primes_upto(61) {
            let ctx = PrimeContext::new(q).unwrap();
            for d in 1..=4 {
                let rec = kl_table_recursive(d, &ctx).unwrap();
                let fft = kl_table_fft(d, &ctx).unwrap();
                assert!(rec.max_diff(&fft) < 1e-10, "q={q} d={d}");
                if (q as u128).pow(d - 1) <= 200_000 {
                    for n in 0..q as i64 {
                        let b = kl_brute(d, n, &ctx).unwrap();
                        assert!((b - rec.at(n)).norm() < 1e-12, "q={q} d={d} n={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn even_degree_tables_are_real_and_bounded() {
        for q in [5, 31, 101, 499] {
            let ctx = PrimeContext::new(q).unwrap();
            for d in 1..=5 {
                let t = kl_table_fft(d, &ctx).unwrap();
                if d % 2 == 0 {
                    assert!(t.max_imag() < 1e-10);
                }
                assert!(t.max_abs() <= d as f64 + 1e-9, "q={q} d={d}");
                for n in 0..q as i64 {
                    let sign = if d % 2 == 0 { 1 } else { -1 };
                    assert!((t.at(n).conj() - t.at(sign * n)).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn fourier_of_delta_is_character() {
        let q = 13;
        let a = 4;
        let k = TraceTable::from_fn(q, "delta", |x| {
            if x == a {
                Complex64::new((q as f64).sqrt(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let ctx = PrimeContext::new(q).unwrap();
        let khat = fourier_zq(&k);
        for n in 0..q as i64 {
            assert!((khat.at(n) - ctx.additive_char(n * a as i64)).norm() < 1e-13);
        }
    }

    #[test]
    fn fourier_unitarity_and_inversion_on_kl_tables() {
        for q in [3, 7, 53, 101] {
            let ctx = PrimeContext::new(q).unwrap();
            for d in 1..=4 {
                let k = kl_table_fft(d, &ctx).unwrap();
                let khat = fourier_zq(&k);
                assert!((khat.energy() - k.energy()).abs() <= 1e-10 * k.energy());
                let back = fourier_zq(&khat);
                for x in 0..q as i64 {
                    assert!((back.at(x) - k.at(-x)).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn gauss_sums_fft_matches_direct() {
        for q in [3, 5, 7, 29, 101] {
            let ctx = PrimeContext::new(q).unwrap();
            let all = gauss_sums(&ctx);
            for chi in ctx.characters() {
                let direct = gauss_sum(&chi);
                assert!((direct - all[chi.index() as usize]).norm() < 1e-12);
                if chi.is_principal() {
                    assert!((direct + 1.0 / (q as f64).sqrt()).norm() < 1e-12);
                } else {
                    assert!((direct.norm() - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn gauss_spectral_identity() {
        for q in primes_upto(101) {
            let ctx = PrimeContext::new(q).unwrap();
            let kl4 = kl_table_fft(4, &ctx).unwrap();
            let r = verify_gauss_spectral(&ctx, &kl4);
            assert!(r.max_error <= 1e-9, "{r:?}");
        }
    }

    #[test]
    fn kl4_hat_identity() {
        let ctx = PrimeContext::new(5).unwrap();
        let kl4 = kl_table_fft(4, &ctx).unwrap();
        let kl3 = kl_table_fft(3, &ctx).unwrap();
        let r = verify_kl4_hat(&ctx, &kl4, &kl3, 1, 1).unwrap();
        assert!(r.max_error <= 1e-12, "{r:?}");
        for q in [7, 11, 47, 101] {
            let ctx = PrimeContext::new(q).unwrap();
            let kl4 = kl_table_fft(4, &ctx).unwrap();
            let kl3 = kl_table_fft(3, &ctx).unwrap();
            for (a, l) in [(1, 2), (3, q as i64 - 1), (5, 6)] {
                let r = verify_kl4_hat(&ctx, &kl4, &kl3, a, l).unwrap();
                assert!(r.max_error <= 1e-9, "{r:?}");
            }
        }
        assert!(verify_kl4_hat(&ctx, &kl4, &kl3, 5, 1).is_err());
    }

    #[test]
    fn correlation_row_matches_direct_and_parseval() {
        let q = 23;
        let ctx = PrimeContext::new(q).unwrap();
        let kl4 = kl_table_fft(4, &ctx).unwrap();
        let (a, l1, l2) = (3, 2, 7);
        let row = correlation_row(&kl4, a, l1, l2);
        for m in 0..q as i64 {
            let direct = correlation_sum(&ctx, &kl4, a, m, l1, l2);
            assert!((direct - row.at(m)).norm() < 1e-12);
        }
        let lhs = row.energy();
        let rhs: f64 = (1..q as i64)
            .map(|x| kl4.at(a * l1 * x).norm_sqr() * kl4.at(a * l2 * x).norm_sqr())
            .sum();
        assert!((lhs - rhs).abs() <= 1e-9 * rhs);
        let diag = correlation_sum(&ctx, &kl4, a, 0, l1, l1);
        assert!(diag.re > 0.0 && diag.im.abs() < 1e-12);
    }

    #[test]
    fn correlation_max_is_reported() {
        let ctx = PrimeContext::new(13).unwrap();
        let kl4 = kl_table_fft(4, &ctx).unwrap();
        let r = correlation_max(&ctx, &kl4, 1);
        assert!(r.max_abs > 0.0 && r.argmax.0 != r.argmax.1);
        let csv = correlation_max_csv(&[r]);
        assert!(csv.starts_with("q,a,max_abs_c"));
    }

    #[test]
    fn csv_round_trip() {
        let ctx = PrimeContext::new(17).unwrap();
        let t = kl_table_fft(3, &ctx).unwrap();
        let text = t.to_csv_string();
        assert!(text.starts_with("# q=17 label=Kl3\nn,re,im\n"));
        let back = TraceTable::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_wrong_length() {
        assert!(TraceTable::new(5, vec![Complex64::new(0.0, 0.0); 4], "x").is_err());
    }

    proptest! {
        #[test]
        fn fft_and_recursive_engines_agree(qi in 0usize..8, d in 1u32..=5) {
            let q = [3u64, 5, 67, 97, 101, 211, 331, 499][qi];
            let ctx = PrimeContext::new(q).unwrap();
            let rec = kl_table_recursive(d, &ctx).unwrap();
            let fft = kl_table_fft(d, &ctx).unwrap();
            prop_assert!(rec.max_diff(&fft) < 1e-10);
        }

        #[test]
        fn kl_is_invariant_under_scaling_by_dth_powers(qi in 0usize..4, t in 1u64..1000, n in 1u64..1000) {
            // x_i -> t x_i: Σ_{Πx_i = n} e(t Σx_i / q) = Kl_d(n t^d).
            let q = [7u64, 13, 29, 41][qi];
            let ctx = PrimeContext::new(q).unwrap();
            prop_assume!(t % q != 0 && n % q != 0);
            let k = kl_table_fft(2, &ctx).unwrap();
            let t = t % q;
            let scaled = csum((1..q).map(|x| {
                let y = ctx.mul(n % q, ctx.inverse(x as i64).unwrap());
                ctx.additive_char((t * (x + y)) as i64)
            })) / (q as f64).sqrt();
            prop_assert!((scaled - k.at((n * t % q * t % q) as i64)).norm() < 1e-11);
        }
    }
}
