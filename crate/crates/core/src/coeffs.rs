//! Coefficient series attached to the discriminant form `Δ` of weight 12.
//!
//! `τ(n)` comes from `Δ = x·Π(1−x^m)^24`. The cube `Π(1−x^m)^3` has Jacobi's
//! sparse expansion `Σ (−1)^k (2k+1) x^{k(k+1)/2}`, and three exact squarings
//! take it to the 24th power. From `τ` we derive `λ_f(n) = τ(n)/n^{11/2}`,
//! the symmetric-square coefficients, `1 ⋆ λ`, and the convolution identity
//! `λ_f(n)² = Σ_{d²k=n} μ(d) (1⋆λ_{sym²})(k)`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::expsum::VerificationReport;
use crate::ntt::square_truncated;

/// Largest `N` accepted by [`ramanujan_tau`].
pub const TAU_LIMIT: usize = 1 << 22;

/// Largest `n` at which the two symmetric-square routes are compared.
pub const SYM2_CHECK_LIMIT: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Exact integers, e.g. `τ(n)` or `μ(n)`.
    Arithmetic,
    /// Real values normalized so that `ℜs = 1/2` is the critical line.
    Unitary,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::Arithmetic => "arithmetic",
            Normalization::Unitary => "unitary",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "arithmetic" => Some(Normalization::Arithmetic),
            "unitary" => Some(Normalization::Unitary),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Values {
    Exact(Vec<i128>),
    Real(Vec<f64>),
}

/// `n ↦ λ(n)` for `1 ≤ n ≤ N`. Index 0 is stored as 0 and never read.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSeries {
    label: String,
    values: Values,
}

impl CoefficientSeries {
    /// Integer series; `values[0]` is ignored.
    pub fn exact(label: impl Into<String>, mut values: Vec<i128>) -> Self {
        if let Some(v) = values.first_mut() {
            *v = 0;
        }
        Self {
            label: label.into(),
            values: Values::Exact(values),
        }
    }

    /// Real series; `values[0]` is ignored.
    pub fn real(label: impl Into<String>, mut values: Vec<f64>) -> Self {
        if let Some(v) = values.first_mut() {
            *v = 0.0;
        }
        Self {
            label: label.into(),
            values: Values::Real(values),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn normalization(&self) -> Normalization {
        match self.values {
            Values::Exact(_) => Normalization::Arithmetic,
            Values::Real(_) => Normalization::Unitary,
        }
    }

    /// Truncation length `N`.
    pub fn len(&self) -> usize {
        match &self.values {
            Values::Exact(v) => v.len().saturating_sub(1),
            Values::Real(v) => v.len().saturating_sub(1),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn value(&self, n: usize) -> f64 {
        match &self.values {
            Values::Exact(v) => v[n] as f64,
            Values::Real(v) => v[n],
        }
    }

    pub fn exact_value(&self, n: usize) -> Option<i128> {
        match &self.values {
            Values::Exact(v) => Some(v[n]),
            Values::Real(_) => None,
        }
    }

    pub fn exact_values(&self) -> Option<&[i128]> {
        match &self.values {
            Values::Exact(v) => Some(v),
            Values::Real(_) => None,
        }
    }

    /// Real values indexed by `n`, converting exact integers.
    pub fn to_real(&self) -> Vec<f64> {
        match &self.values {
            Values::Exact(v) => v.iter().map(|&x| x as f64).collect(),
            Values::Real(v) => v.clone(),
        }
    }

    pub fn require_len(&self, need: usize) -> Result<()> {
        if self.len() < need {
            return Err(Error::SeriesTooShort {
                label: self.label.clone(),
                len: self.len(),
                need,
            });
        }
        Ok(())
    }

    /// First `n` terms.
    pub fn truncate(&self, n: usize) -> Self {
        let n = n.min(self.len());
        let values = match &self.values {
            Values::Exact(v) => Values::Exact(v[..=n].to_vec()),
            Values::Real(v) => Values::Real(v[..=n].to_vec()),
        };
        Self {
            label: self.label.clone(),
            values,
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# label={} normalization={}",
            self.label,
            self.normalization().as_str()
        )?;
        writeln!(out, "n,value")?;
        match &self.values {
            Values::Exact(v) => {
                for (n, x) in v.iter().enumerate().skip(1) {
                    writeln!(out, "{n},{x}")?;
                }
            }
            Values::Real(v) => {
                for (n, x) in v.iter().enumerate().skip(1) {
                    writeln!(out, "{n},{x:.17e}")?;
                }
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Reads the format written by [`CoefficientSeries::write_csv`]. Rows
    /// must list `n = 1, 2, ...` in order.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut label = String::new();
        let mut norm = None;
        let mut exact = vec![0i128];
        let mut real = vec![0.0f64];
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let err = |message: String| Error::Parse { line: lineno, message };
            let t = line.trim();
            if t.is_empty() || t == "n,value" {
                continue;
            }
            if let Some(header) = t.strip_prefix('#') {
                for field in header.split_whitespace() {
                    if let Some(l) = field.strip_prefix("label=") {
                        label = l.to_string();
                    } else if let Some(n) = field.strip_prefix("normalization=") {
                        norm =
                            Some(Normalization::parse(n).ok_or_else(|| err(format!("unknown normalization `{n}`")))?);
                    }
                }
                continue;
            }
            let norm = norm.ok_or_else(|| err("missing `# normalization=` header".into()))?;
            let (n, v) = t.split_once(',').ok_or_else(|| err("expected `n,value`".into()))?;
            let n: usize = n
                .trim()
                .parse()
                .map_err(|e: std::num::ParseIntError| err(e.to_string()))?;
            let expected = match norm {
                Normalization::Arithmetic => exact.len(),
                Normalization::Unitary => real.len(),
            };
            if n != expected {
                return Err(err(format!("row n = {n} out of order (expected {expected})")));
            }
            match norm {
                Normalization::Arithmetic => exact.push(
                    v.trim()
                        .parse()
                        .map_err(|e: std::num::ParseIntError| err(e.to_string()))?,
                ),
                Normalization::Unitary => real.push(
                    v.trim()
                        .parse()
                        .map_err(|e: std::num::ParseFloatError| err(e.to_string()))?,
                ),
            }
        }
        match norm {
            Some(Normalization::Arithmetic) => Ok(Self::exact(label, exact)),
            Some(Normalization::Unitary) => Ok(Self::real(label, real)),
            None => Err(Error::Parse {
                line: 1,
                message: "missing `# normalization=` header".into(),
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Sieves

/// Smallest prime factor of each `n ≤ N` (`spf[0] = spf[1] = 0`).
pub fn smallest_prime_factors(n: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            let mut j = i;
            while j <= n {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    spf
}

/// Splits `n = p^e · m` with `p` the smallest prime factor of `n`.
#[inline]
fn split_prime_power(n: usize, spf: &[u32]) -> (usize, u32, usize) {
    let p = spf[n] as usize;
    let mut m = n;
    let mut e = 0;
    while m % p == 0 {
        m /= p;
        e += 1;
    }
    (p, e, m)
}

/// Möbius function by a linear sieve.
pub fn mobius(n: usize) -> CoefficientSeries {
    let mut mu = vec![0i128; n + 1];
    if n >= 1 {
        mu[1] = 1;
    }
    let spf = smallest_prime_factors(n);
    for k in 2..=n {
        let (_, e, m) = split_prime_power(k, &spf);
        mu[k] = if e > 1 { 0 } else { -mu[m] };
    }
    CoefficientSeries::exact("mobius", mu)
}

/// The constant function 1.
pub fn one(n: usize) -> CoefficientSeries {
    CoefficientSeries::exact("one", vec![1; n + 1])
}

/// `(a ⋆ b)(n) = Σ_{lm=n} a(l) b(m)` for `n ≤ N`. Exact when both inputs
/// are exact.
pub fn dirichlet_convolve(a: &CoefficientSeries, b: &CoefficientSeries, n: usize) -> Result<CoefficientSeries> {
    a.require_len(n)?;
    b.require_len(n)?;
    let label = format!("({})*({})", a.label, b.label);
    match (&a.values, &b.values) {
        (Values::Exact(x), Values::Exact(y)) => {
            let mut out = vec![0i128; n + 1];
            for l in 1..=n {
                if x[l] == 0 {
                    continue;
                }
                for m in 1..=n / l {
                    let term = x[l].checked_mul(y[m]).ok_or(Error::ResourceLimit {
                        what: "exact convolution term (i128)",
                        value: u128::MAX,
                        limit: i128::MAX as u128,
                    })?;
                    out[l * m] = out[l * m].checked_add(term).ok_or(Error::ResourceLimit {
                        what: "exact convolution sum (i128)",
                        value: u128::MAX,
                        limit: i128::MAX as u128,
                    })?;
                }
            }
            Ok(CoefficientSeries::exact(label, out))
        }
        _ => {
            let x = a.to_real();
            let y = b.to_real();
            let mut out = vec![0.0f64; n + 1];
            for l in 1..=n {
                if x[l] == 0.0 {
                    continue;
                }
                for m in 1..=n / l {
                    out[l * m] += x[l] * y[m];
                }
            }
            Ok(CoefficientSeries::real(label, out))
        }
    }
}

/// `λ_{1⊞π}(n) = Σ_{m|n} λ_π(m)`.
pub fn one_boxplus(lambda: &CoefficientSeries, n: usize) -> Result<CoefficientSeries> {
    let s = dirichlet_convolve(&one(n), lambda, n)?;
    Ok(s.with_label(format!("1+{}", lambda.label)))
}

// ---------------------------------------------------------------------------
// Ramanujan tau

/// `Π_{m≥1}(1−x^m)` to `len` terms from Euler's pentagonal theorem.
pub fn euler_product(len: usize) -> Vec<i128> {
    let mut out = vec![0i128; len];
    if len == 0 {
        return out;
    }
    out[0] = 1;
    for k in 1.. {
        let sign = if k % 2 == 1 { -1 } else { 1 };
        let a = k * (3 * k - 1) / 2;
        let b = k * (3 * k + 1) / 2;
        if a >= len {
            break;
        }
        out[a] += sign;
        if b < len {
            out[b] += sign;
        }
    }
    out
}

/// `Π_{m≥1}(1−x^m)^3` to `len` terms from Jacobi's identity.
pub fn euler_product_cubed(len: usize) -> Vec<i128> {
    let mut out = vec![0i128; len];
    for k in 0.. {
        let e = k * (k + 1) / 2;
        if e >= len {
            break;
        }
        let sign = if k % 2 == 0 { 1 } else { -1 };
        out[e] = sign * (2 * k as i128 + 1);
    }
    out
}

/// `τ(n)` for `n ≤ N`, exact.
pub fn ramanujan_tau(n: usize) -> Result<CoefficientSeries> {
    if n > TAU_LIMIT {
        return Err(Error::ResourceLimit {
            what: "tau length N",
            value: n as u128,
            limit: TAU_LIMIT as u128,
        });
    }
    // τ(n) is the coefficient of x^{n-1} in Π(1−x^m)^24.
    let len = n;
    let mut series = euler_product_cubed(len);
    for _ in 0..3 {
        series = square_truncated(&series, len)?;
    }
    let mut values = Vec::with_capacity(n + 1);
    values.push(0);
    values.extend_from_slice(&series[..n]);
    Ok(CoefficientSeries::exact("tau", values))
}

/// `λ_f(n) = τ(n)/n^{11/2}`.
pub fn hecke_normalized(tau: &CoefficientSeries) -> Result<CoefficientSeries> {
    let exact = tau
        .exact_values()
        .ok_or_else(|| Error::InvalidArgument("tau series must be exact".into()))?;
    let values = exact
        .iter()
        .enumerate()
        .map(|(n, &t)| {
            if n == 0 {
                0.0
            } else {
                let nf = n as f64;
                t as f64 / (nf.powi(5) * nf.sqrt())
            }
        })
        .collect();
    Ok(CoefficientSeries::real("lambda_f", values))
}

// ---------------------------------------------------------------------------
// Symmetric square

/// Coefficients `h_0..=h_e` of `1/((1−α²x)(1−x)(1−α^{-2}x))` with
/// `α + α^{-1} = λ`. With `c = λ² − 1` the denominator is
/// `1 − c x + c x² − x³`.
fn sym2_prime_power_coeffs(lambda_p: f64, e: u32) -> Vec<f64> {
    let c = lambda_p * lambda_p - 1.0;
    let mut h = Vec::with_capacity(e as usize + 1);
    h.push(1.0);
    for j in 1..=e as usize {
        let mut v = c * h[j - 1];
        if j >= 2 {
            v -= c * h[j - 2];
        }
        if j >= 3 {
            v += h[j - 3];
        }
        h.push(v);
    }
    h
}

/// `λ_f(p^k)` for `k ≤ e` from `λ_f(p^{k+1}) = λ_f(p)λ_f(p^k) − λ_f(p^{k−1})`.
fn hecke_prime_power_coeffs(lambda_p: f64, e: u32) -> Vec<f64> {
    let mut h = Vec::with_capacity(e as usize + 1);
    h.push(1.0);
    if e >= 1 {
        h.push(lambda_p);
    }
    for k in 2..=e as usize {
        h.push(lambda_p * h[k - 1] - h[k - 2]);
    }
    h
}

/// Route (i): multiplicative extension of the local Euler factors.
pub fn sym2_euler(lambda_f: &CoefficientSeries, n: usize) -> Result<CoefficientSeries> {
    lambda_f.require_len(n)?;
    let spf = smallest_prime_factors(n);
    let mut out = vec![0.0f64; n + 1];
    if n >= 1 {
        out[1] = 1.0;
    }
    for k in 2..=n {
        let (p, e, m) = split_prime_power(k, &spf);
        if m > 1 {
            out[k] = out[k / m] * out[m];
        } else {
            out[k] = sym2_prime_power_coeffs(lambda_f.value(p), e)[e as usize];
        }
    }
    Ok(CoefficientSeries::real("sym2", out))
}

/// Route (ii): `λ_{sym²}(n) = Σ_{d²m=n} λ_f(m²)`, with `λ_f(m²)` built
/// multiplicatively from the Hecke recursion at each prime.
pub fn sym2_divisor(lambda_f: &CoefficientSeries, n: usize) -> Result<CoefficientSeries> {
    lambda_f.require_len(n)?;
    let spf = smallest_prime_factors(n);
    let mut at_square = vec![0.0f64; n + 1];
    if n >= 1 {
        at_square[1] = 1.0;
    }
    for m in 2..=n {
        let (p, e, r) = split_prime_power(m, &spf);
        if r > 1 {
            at_square[m] = at_square[m / r] * at_square[r];
        } else {
            at_square[m] = hecke_prime_power_coeffs(lambda_f.value(p), 2 * e)[2 * e as usize];
        }
    }
    let mut out = vec![0.0f64; n + 1];
    let mut d = 1;
    while d * d <= n {
        let dd = d * d;
        for m in 1..=n / dd {
            out[dd * m] += at_square[m];
        }
        d += 1;
    }
    Ok(CoefficientSeries::real("sym2 (divisor route)", out))
}

/// Symmetric-square coefficients via route (i), checked against route (ii)
/// for `n ≤ min(N, SYM2_CHECK_LIMIT)`; disagreement beyond `1e-9` is an error.
pub fn sym2_series(lambda_f: &CoefficientSeries, n: usize) -> Result<CoefficientSeries> {
    let primary = sym2_euler(lambda_f, n)?;
    let check_len = n.min(SYM2_CHECK_LIMIT);
    let oracle = sym2_divisor(lambda_f, check_len)?;
    let report = compare_series(&primary, &oracle, check_len);
    if report.max_error > 1e-9 {
        let at = report.worst.trim_start_matches("n=").parse().unwrap_or(0);
        return Err(Error::Mismatch {
            what: "symmetric-square routes",
            n: at,
            difference: report.max_error,
        });
    }
    Ok(primary)
}

/// `max_{n ≤ N} |a(n) − b(n)|`.
pub fn compare_series(a: &CoefficientSeries, b: &CoefficientSeries, n: usize) -> VerificationReport {
    let mut r = VerificationReport::new(format!("{} vs {}", a.label, b.label));
    for k in 1..=n {
        r.record((a.value(k) - b.value(k)).abs(), || format!("n={k}"));
    }
    r
}

// ---------------------------------------------------------------------------
// Convolution identity

/// `max_{n≤N} |λ_f(n)² − Σ_{d²k=n} μ(d) λ_{1⊞sym²}(k)|`.
pub fn verify_convolution_identity(
    lambda_f: &CoefficientSeries,
    one_sym2: &CoefficientSeries,
    n: usize,
) -> Result<VerificationReport> {
    lambda_f.require_len(n)?;
    one_sym2.require_len(n)?;
    let sqrt_n = (n as f64).sqrt() as usize + 1;
    let mu = mobius(sqrt_n);
    let mut rhs = vec![0.0f64; n + 1];
    let mut d = 1;
    while d * d <= n {
        let m = mu.exact_value(d).unwrap();
        if m != 0 {
            let dd = d * d;
            for k in 1..=n / dd {
                rhs[dd * k] += m as f64 * one_sym2.value(k);
            }
        }
        d += 1;
    }
    let mut r = VerificationReport::new(format!("convolution identity N={n}"));
    for k in 1..=n {
        let lhs = lambda_f.value(k).powi(2);
        r.record((lhs - rhs[k]).abs(), || format!("n={k}"));
    }
    Ok(r)
}

/// Integer polynomial in one indeterminate, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntPoly(pub Vec<i128>);

impl IntPoly {
    pub fn constant(c: i128) -> Self {
        IntPoly(vec![c]).normalized()
    }

    pub fn t() -> Self {
        IntPoly(vec![0, 1])
    }

    fn normalized(mut self) -> Self {
        while self.0.last() == Some(&0) {
            self.0.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.0.len().max(o.0.len());
        IntPoly(
            (0..n)
                .map(|i| self.0.get(i).unwrap_or(&0) + o.0.get(i).unwrap_or(&0))
                .collect(),
        )
        .normalized()
    }

    pub fn neg(&self) -> Self {
        IntPoly(self.0.iter().map(|c| -c).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return IntPoly::default();
        }
        let mut out = vec![0i128; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly(out).normalized()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * t + c as f64)
    }
}

impl std::fmt::Display for IntPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.0.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, "{}", if c < 0 { " - " } else { " + " })?;
            } else if c < 0 {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            match i {
                0 => write!(f, "{a}")?,
                1 if a == 1 => write!(f, "t")?,
                1 => write!(f, "{a}t")?,
                _ if a == 1 => write!(f, "t^{i}")?,
                _ => write!(f, "{a}t^{i}")?,
            }
        }
        Ok(())
    }
}

/// Result of the prime-power check with `λ_f(p) = t` indeterminate.
#[derive(Debug, Clone)]
pub struct SymbolicReport {
    pub max_exponent: u32,
    /// Exponents `j` at which `λ_f(p^j)² ≠ Σ_{d²k=p^j} μ(d) λ_{1⊞sym²}(k)`.
    pub failures: Vec<u32>,
    /// Exponents at which the two symmetric-square routes differ.
    pub route_failures: Vec<u32>,
    /// `(j, λ_f(p^j)²)` for display.
    pub lhs: Vec<(u32, IntPoly)>,
}

impl SymbolicReport {
    pub fn passes(&self) -> bool {
        self.failures.is_empty() && self.route_failures.is_empty()
    }
}

/// Exact check of the convolution identity at `n = p^j`, `j ≤ max_exponent`.
///
/// `P_j = λ_f(p^j)` satisfies `P_{j+1} = tP_j − P_{j−1}`; `S_j = λ_{sym²}(p^j)`
/// follows the Euler-factor recursion and is compared with
/// `Σ_{2i≤j} P_{2(j−2i)}`; the right side at `p^j` is
/// `B_j − B_{j−2}` with `B_j = Σ_{i≤j} S_i`.
pub fn verify_convolution_symbolic(max_exponent: u32) -> SymbolicReport {
    let jmax = max_exponent as usize;
    let t = IntPoly::t();
    let mut p = vec![IntPoly::constant(1), t.clone()];
    while p.len() < 2 * jmax + 2 {
        let k = p.len();
        let next = t.mul(&p[k - 1]).sub(&p[k - 2]);
        p.push(next);
    }
    let c = t.mul(&t).sub(&IntPoly::constant(1));
    let mut s: Vec<IntPoly> = vec![IntPoly::constant(1)];
    for j in 1..=jmax {
        let mut v = c.mul(&s[j - 1]);
        if j >= 2 {
            v = v.sub(&c.mul(&s[j - 2]));
        }
        if j >= 3 {
            v = v.add(&s[j - 3]);
        }
        s.push(v);
    }
    let mut route_failures = Vec::new();
    for (j, sj) in s.iter().enumerate() {
        let mut via_divisors = IntPoly::default();
        let mut i = 0;
        while 2 * i <= j {
            via_divisors = via_divisors.add(&p[2 * (j - 2 * i)]);
            i += 1;
        }
        if &via_divisors != sj {
            route_failures.push(j as u32);
        }
    }
    let mut b = Vec::with_capacity(jmax + 1);
    let mut acc = IntPoly::default();
    for sj in &s {
        acc = acc.add(sj);
        b.push(acc.clone());
    }
    let mut failures = Vec::new();
    let mut lhs = Vec::new();
    for j in 0..=jmax {
        let left = p[j].mul(&p[j]);
        let right = if j >= 2 { b[j].sub(&b[j - 2]) } else { b[j].clone() };
        if left != right {
            failures.push(j as u32);
        }
        lhs.push((j as u32, left));
    }
    SymbolicReport {
        max_exponent,
        failures,
        route_failures,
        lhs,
    }
}

// ---------------------------------------------------------------------------
// Reports

/// Ramanujan–Petersson exponent used in reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanujanConfig {
    pub weight: u32,
    pub varpi: f64,
}

impl Default for RamanujanConfig {
    fn default() -> Self {
        Self { weight: 12, varpi: 0.0 }
    }
}

impl RamanujanConfig {
    /// Reference exponent `7/64`.
    pub const KIM_SARNAK: f64 = 7.0 / 64.0;

    pub fn new(varpi: f64) -> Result<Self> {
        if !(0.0..=Self::KIM_SARNAK).contains(&varpi) {
            return Err(Error::InvalidArgument(format!(
                "varpi must lie in [0, 7/64], got {varpi}"
            )));
        }
        Ok(Self { weight: 12, varpi })
    }

    /// Level exponent `21/(52(1+4ϖ))`.
    pub fn theta_f(&self) -> f64 {
        21.0 / 52.0 / (1.0 + 4.0 * self.varpi)
    }
}

/// `(X', Σ_{m≤X'} |λ(m)|² / X')`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankinSelbergRow {
    pub x: usize,
    pub ratio: f64,
}

/// Partial sums of `|λ|²` normalized by length, at `X' = 1, 2, 4, ...` and at
/// every power of ten up to `X`.
pub fn rankin_selberg_report(series: &CoefficientSeries, x: usize) -> Result<Vec<RankinSelbergRow>> {
    series.require_len(x)?;
    let mut points: Vec<usize> = Vec::new();
    let mut p = 1;
    while p <= x {
        points.push(p);
        p *= 2;
    }
    let mut p = 10;
    while p <= x {
        points.push(p);
        p *= 10;
    }
    points.sort_unstable();
    points.dedup();
    let mut rows = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    let mut next = 1;
    for &xp in &points {
        while next <= xp {
            acc += series.value(next).powi(2);
            next += 1;
        }
        rows.push(RankinSelbergRow {
            x: xp,
            ratio: acc / xp as f64,
        });
    }
    Ok(rows)
}

pub fn rankin_selberg_csv(rows: &[RankinSelbergRow]) -> String {
    let mut s = String::from("X,ratio\n");
    for r in rows {
        let _ = writeln!(s, "{},{:.12e}", r.x, r.ratio);
    }
    s
}

/// The series every analytic module consumes, built to length `N`.
#[derive(Debug, Clone)]
pub struct DeltaSeries {
    pub tau: CoefficientSeries,
    pub lambda_f: CoefficientSeries,
    pub sym2: CoefficientSeries,
    pub one_sym2: CoefficientSeries,
}

impl DeltaSeries {
    pub fn build(n: usize) -> Result<Self> {
        let tau = ramanujan_tau(n)?;
        let lambda_f = hecke_normalized(&tau)?;
        let sym2 = sym2_series(&lambda_f, n)?;
        let one_sym2 = one_boxplus(&sym2, n)?;
        Ok(Self {
            tau,
            lambda_f,
            sym2,
            one_sym2,
        })
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// `λ_f(n)²` as a series.
    pub fn rankin_selberg(&self) -> CoefficientSeries {
        let values = (0..=self.len())
            .map(|n| if n == 0 { 0.0 } else { self.lambda_f.value(n).powi(2) })
            .collect();
        CoefficientSeries::real("lambda_f^2", values)
    }
}
