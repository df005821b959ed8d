//! Archimedean data: `L_∞` factors, transforms of the smooth weight `V`, and
//! the dual transform
//!
//! ```text
//! V̌(y) = (1/2πi) ∫_{(c)} L_∞(π̄, s+κ) / L_∞(π, 1−s+κ) · Ṽ(1−s) y^{−s} ds.
//! ```
//!
//! The integrand has no poles in `ℜs > 0` for the presets here, so any
//! `c > 0` gives the same value. On `c = 1/2` the Gamma ratio has modulus 1
//! and the integrand is bounded by `|Ṽ|`, which keeps cancellation small;
//! that is the default contour.

use std::f64::consts::{LN_2, PI, TAU};
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gamma::ln_gamma_r;
use crate::quad::GaussLegendre;

// ---------------------------------------------------------------------------
// Spectral data

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub mu: [Complex64; 4],
    pub kappa: u8,
    pub preset: String,
}

impl SpectralData {
    /// `1 ⊞ sym²f` for holomorphic `f` of weight `k`: `μ = {0, −1, 1−k, −k}`.
    pub fn holomorphic_sym2(k: u32) -> Self {
        let k = k as f64;
        Self {
            mu: [0.0, -1.0, 1.0 - k, -k].map(|x| Complex64::new(x, 0.0)),
            kappa: 0,
            preset: format!("holomorphic sym2 k={k}"),
        }
    }

    /// `1 ⊞ π` from the parameters `(ν₁, ν₂)`:
    /// `μ = {0, ν₂−ν₁, 2ν₁+ν₂−1, 1−ν₁−2ν₂}`.
    pub fn maass(nu1: Complex64, nu2: Complex64) -> Self {
        Self {
            mu: [
                Complex64::new(0.0, 0.0),
                nu2 - nu1,
                2.0 * nu1 + nu2 - 1.0,
                1.0 - nu1 - 2.0 * nu2,
            ],
            kappa: 0,
            preset: format!("maass nu1={nu1} nu2={nu2}"),
        }
    }

    pub fn from_mu(mu: [Complex64; 4], label: impl Into<String>) -> Self {
        Self {
            mu,
            kappa: 0,
            preset: label.into(),
        }
    }

    pub fn with_kappa(mut self, kappa: u8) -> Self {
        assert!(kappa <= 1, "parity must be 0 or 1");
        self.kappa = kappa;
        self
    }

    pub fn conj(&self) -> Self {
        Self {
            mu: self.mu.map(|m| m.conj()),
            kappa: self.kappa,
            preset: format!("conj({})", self.preset),
        }
    }

    pub fn is_real(&self) -> bool {
        self.mu.iter().all(|m| m.im == 0.0)
    }
}

/// `ln L_∞(s) = Σ ln Γ_R(s − μ_i)`.
pub fn ln_l_infty(data: &SpectralData, s: Complex64) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for m in data.mu {
        acc += ln_gamma_r(s - m)?;
    }
    Ok(acc)
}

/// `L_∞(1⊞π, s) = Π Γ_R(s − μ_i)`.
pub fn l_infty(data: &SpectralData, s: Complex64) -> Result<Complex64> {
    Ok(ln_l_infty(data, s)?.exp())
}

/// `L_∞(π̄, w+κ) / L_∞(π, 1−w+κ)`.
pub fn gamma_ratio(data: &SpectralData, w: Complex64) -> Result<Complex64> {
    let k = data.kappa as f64;
    let num = ln_l_infty(&data.conj(), w + k)?;
    let den = ln_l_infty(data, Complex64::new(1.0 + k, 0.0) - w)?;
    Ok((num - den).exp())
}

// ---------------------------------------------------------------------------
// Test functions

/// `V(x) = A·exp(p(1 − 1/(1−t²)))`, `t = 2x − 3`, on `(1, 2)`.
///
/// `p = 1` is the standard bump. Larger `p` concentrates `V` near `3/2`
/// and makes `Ṽ(σ+it)` decay faster in `t`, which shortens the dual sums.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    sharpness: f64,
    amplitude: f64,
}

impl Default for TestFunction {
    fn default() -> Self {
        Self::bump()
    }
}

/// Panels are refined until two successive estimates agree to this.
const TRANSFORM_TOL: f64 = 1e-13;
const MAX_PANELS: usize = 1 << 14;

impl TestFunction {
    pub fn bump() -> Self {
        Self::sharp_bump(1.0)
    }

    pub fn sharp_bump(sharpness: f64) -> Self {
        assert!(sharpness > 0.0);
        Self {
            sharpness,
            amplitude: 1.0,
        }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.amplitude *= factor;
        self
    }

    pub fn sharpness(&self) -> f64 {
        self.sharpness
    }

    pub fn label(&self) -> String {
        if self.amplitude == 1.0 {
            format!("bump p={}", self.sharpness)
        } else {
            format!("{}*bump p={}", self.amplitude, self.sharpness)
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (1.0, 2.0)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let t = 2.0 * x - 3.0;
        let d = 1.0 - t * t;
        if d <= 0.0 {
            return 0.0;
        }
        self.amplitude * (self.sharpness * (1.0 - 1.0 / d)).exp()
    }

    /// Panels so that each covers at most ~3 radians of phase.
    fn initial_panels(phase_span: f64) -> usize {
        ((phase_span / 3.0).ceil() as usize).max(8)
    }

    fn adaptive<F>(&self, phase_span: f64, what: &str, integrate: F) -> Result<Complex64>
    where
        F: Fn(usize) -> Complex64,
    {
        let mut panels = Self::initial_panels(phase_span);
        let mut prev = integrate(panels);
        while panels < MAX_PANELS {
            panels *= 2;
            let next = integrate(panels);
            if (next - prev).norm() <= TRANSFORM_TOL * (1.0 + next.norm()) {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::Quadrature(format!(
            "{what}: no convergence within {MAX_PANELS} panels"
        )))
    }

    /// `Ṽ(s) = ∫ V(y) y^{s−1} dy = ∫_0^{ln 2} V(e^u) e^{su} du`.
    pub fn mellin(&self, s: Complex64) -> Result<Complex64> {
        let rule = GaussLegendre::new(20);
        self.adaptive(s.im.abs() * LN_2, "Mellin transform", |panels| {
            let h = LN_2 / panels as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..panels {
                let lo = k as f64 * h;
                for (u, w) in rule.on_interval(lo, lo + h) {
                    acc += (s * u).exp() * (w * self.eval(u.exp()));
                }
            }
            acc
        })
    }

    /// `V̂(ξ) = ∫ V(x) e(−xξ) dx`.
    pub fn fourier(&self, xi: f64) -> Result<Complex64> {
        let rule = GaussLegendre::new(20);
        self.adaptive(TAU * xi.abs(), "Fourier transform", |panels| {
            let h = 1.0 / panels as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..panels {
                let lo = 1.0 + k as f64 * h;
                for (x, w) in rule.on_interval(lo, lo + h) {
                    let (sn, cs) = (-TAU * x * xi).sin_cos();
                    acc += Complex64::new(cs, sn) * (w * self.eval(x));
                }
            }
            acc
        })
    }

    /// `∫ V(x) dx`.
    pub fn integral(&self) -> f64 {
        let rule = GaussLegendre::new(20);
        rule.composite(1.0, 2.0, 64, |x| self.eval(x))
    }

    /// Nodes for evaluating `Ṽ(s)` at many `s` with `|ℑs| ≤ t_max`.
    pub fn mellin_sampler(&self, t_max: f64) -> Result<MellinSampler> {
        let rule = GaussLegendre::new(20);
        let mut panels = Self::initial_panels(t_max * LN_2) * 2;
        loop {
            let sampler = MellinSampler::build(self, &rule, panels);
            let finer = MellinSampler::build(self, &rule, 2 * panels);
            let worst = [0.0, 0.3, 0.7, 1.0]
                .iter()
                .flat_map(|f| [-1.0, 0.5, 2.0].map(|sigma| Complex64::new(sigma, f * t_max)))
                .map(|s| (sampler.eval(s) - finer.eval(s)).norm())
                .fold(0.0, f64::max);
            if worst <= TRANSFORM_TOL {
                return Ok(sampler);
            }
            panels *= 2;
            if panels > MAX_PANELS {
                return Err(Error::Quadrature(format!(
                    "Mellin sampler for |t| <= {t_max}: residual {worst:e}"
                )));
            }
        }
    }
}

/// Fixed quadrature nodes `(u_k, w_k V(e^{u_k}))` on `[0, ln 2]`.
#[derive(Debug, Clone)]
pub struct MellinSampler {
    nodes: Vec<(f64, f64)>,
}

impl MellinSampler {
    fn build(v: &TestFunction, rule: &GaussLegendre, panels: usize) -> Self {
        let h = LN_2 / panels as f64;
        let mut nodes = Vec::with_capacity(panels * rule.order());
        for k in 0..panels {
            let lo = k as f64 * h;
            for (u, w) in rule.on_interval(lo, lo + h) {
                let weight = w * v.eval(u.exp());
                if weight != 0.0 {
                    nodes.push((u, weight));
                }
            }
        }
        Self { nodes }
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.nodes.iter().map(|&(u, w)| (s * u).exp() * w).sum()
    }
}

/// `(1/2πi) ∫_{(σ)} Ṽ(s) x^{−s} ds`, truncated at `|ℑs| = height`.
pub fn mellin_inverse(v: &TestFunction, x: f64, sigma: f64, height: f64) -> Result<f64> {
    let sampler = v.mellin_sampler(height)?;
    let rule = GaussLegendre::new(20);
    let panels = height.ceil() as usize;
    let h = height / panels as f64;
    let lx = x.ln();
    let mut acc = 0.0;
    for k in 0..panels {
        let lo = k as f64 * h;
        for (t, w) in rule.on_interval(lo, lo + h) {
            let s = Complex64::new(sigma, t);
            let term = sampler.eval(s) * (-s * lx).exp();
            // Conjugate symmetry of the integrand for real V.
            acc += w * term.re;
        }
    }
    Ok(acc / PI)
}

// ---------------------------------------------------------------------------
// Dual transform

#[derive(Debug, Clone, PartialEq)]
pub struct DualConfig {
    /// `ℜs` of the contour.
    pub contour: f64,
    /// Gauss–Legendre points per panel.
    pub order: usize,
    pub panel_width: f64,
    /// Fixed truncation height; `None` selects it adaptively.
    pub height: Option<f64>,
    pub min_height: f64,
    pub max_height: f64,
    /// Target for the discarded tail `(1/2π)∫_{|t|>T} |integrand| dt`.
    pub tail_tol: f64,
}

impl Default for DualConfig {
    fn default() -> Self {
        Self {
            contour: 0.5,
            order: 20,
            panel_width: 1.0,
            height: None,
            min_height: 60.0,
            max_height: 4000.0,
            tail_tol: 1e-10,
        }
    }
}

impl DualConfig {
    /// Twice the quadrature order and half the panel width.
    pub fn refined(&self) -> Self {
        Self {
            order: self.order * 2,
            panel_width: self.panel_width / 2.0,
            ..self.clone()
        }
    }
}

/// `V̌` for fixed `(V, L_∞, κ)`, as quadrature weights on a vertical line.
#[derive(Debug, Clone)]
pub struct DualTransform {
    contour: f64,
    height: f64,
    tail_bound: f64,
    /// `(t_k, w_k · integrand(c + i t_k) / 2π)` over `[−T, T]`.
    nodes: Vec<(f64, Complex64)>,
    label: String,
}

impl DualTransform {
    pub fn new(v: &TestFunction, data: &SpectralData, cfg: &DualConfig) -> Result<Self> {
        let c = cfg.contour;
        if c <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "contour must lie in re(s) > 0, got {c}"
            )));
        }
        let (height, tail_bound) = match cfg.height {
            Some(t) => (t, f64::NAN),
            None => Self::choose_height(v, data, cfg)?,
        };
        let sampler = v.mellin_sampler(height)?;
        let integrand = |t: f64| -> Result<Complex64> {
            let w = Complex64::new(c, t);
            Ok(gamma_ratio(data, w)? * sampler.eval(Complex64::new(1.0, 0.0) - w))
        };
        let rule = GaussLegendre::new(cfg.order);
        let panels = (height / cfg.panel_width).ceil() as usize;
        let h = height / panels as f64;
        let mut nodes = Vec::with_capacity(2 * panels * cfg.order);
        for k in 0..panels {
            let lo = k as f64 * h;
            for (t, w) in rule.on_interval(lo, lo + h) {
                nodes.push((t, integrand(t)? * (w / TAU)));
                nodes.push((-t, integrand(-t)? * (w / TAU)));
            }
        }
        Ok(Self {
            contour: c,
            height,
            tail_bound,
            nodes,
            label: format!("{} kappa={} c={c}", data.preset, data.kappa),
        })
    }

    /// Smallest height (on a 1.25 ratio ladder from `min_height`) whose
    /// measured envelope on `[T, 2T]`, times `2T/π`, is below `tail_tol`
    /// and is not increasing from `[T, 1.5T]` to `[1.5T, 2T]`.
    fn choose_height(v: &TestFunction, data: &SpectralData, cfg: &DualConfig) -> Result<(f64, f64)> {
        let c = cfg.contour;
        let envelope = |t: f64| -> Result<f64> {
            let mut worst = 0.0f64;
            for sign in [1.0, -1.0] {
                let w = Complex64::new(c, sign * t);
                let z = gamma_ratio(data, w)? * v.mellin(Complex64::new(1.0, 0.0) - w)?;
                worst = worst.max(z.norm());
            }
            Ok(worst)
        };
        let mut t = cfg.min_height;
        while t <= cfg.max_height {
            let steps = 40;
            let mut lower = 0.0f64;
            let mut upper = 0.0f64;
            for j in 0..=steps {
                let tt = t * (1.0 + j as f64 / steps as f64);
                let e = envelope(tt)?;
                if j <= steps / 2 {
                    lower = lower.max(e);
                } else {
                    upper = upper.max(e);
                }
            }
            let sup = lower.max(upper);
            let tail = sup * 2.0 * t / PI;
            if tail <= cfg.tail_tol && upper <= lower {
                return Ok((t, tail));
            }
            t = (t * 1.25).round();
        }
        Err(Error::Truncation(format!(
            "dual transform tail above {:e} up to height {}",
            cfg.tail_tol, cfg.max_height
        )))
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    /// Measured tail estimate; NaN when the height was fixed by hand.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn contour(&self) -> f64 {
        self.contour
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// `V̌(y)` by direct summation over the nodes.
    pub fn eval(&self, y: f64) -> Complex64 {
        let v = y.ln();
        let mut acc = Complex64::new(0.0, 0.0);
        for &(t, w) in &self.nodes {
            let (s, c) = (-t * v).sin_cos();
            acc += w * Complex64::new(c, s);
        }
        acc * (-self.contour * v).exp()
    }

    /// Tabulates `g(v) = e^{cv} V̌(e^v)` on a uniform grid covering
    /// `[ln y_lo, ln y_hi]`. `g` is band-limited to `|ω| ≤ T`, so a spacing of
    /// `π/(oversample·T)` with local interpolation recovers it.
    pub fn table(&self, y_lo: f64, y_hi: f64, oversample: f64) -> Result<DualTable> {
        if !(y_lo > 0.0 && y_hi > y_lo) {
            return Err(Error::InvalidArgument(format!("table range [{y_lo}, {y_hi}] is empty")));
        }
        let step = PI / (oversample * self.height);
        let pad = (DualTable::STENCIL as f64) * step;
        let v0 = y_lo.ln() - pad;
        let count = ((y_hi.ln() + pad - v0) / step).ceil() as usize + 1;
        const BLOCK: usize = 256;
        let blocks: Vec<Vec<Complex64>> = (0..count.div_ceil(BLOCK))
            .into_par_iter()
            .map(|b| {
                let start = b * BLOCK;
                let len = BLOCK.min(count - start);
                let v_start = v0 + start as f64 * step;
                let mut acc = vec![Complex64::new(0.0, 0.0); len];
                for &(t, w) in &self.nodes {
                    let (s, c) = (-t * v_start).sin_cos();
                    let mut z = w * Complex64::new(c, s);
                    let (s, c) = (-t * step).sin_cos();
                    let rot = Complex64::new(c, s);
                    for slot in acc.iter_mut() {
                        *slot += z;
                        z *= rot;
                    }
                }
                acc
            })
            .collect();
        let values = blocks.into_iter().flatten().collect();
        Ok(DualTable {
            contour: self.contour,
            v0,
            step,
            values,
        })
    }
}

/// Interpolation table for `V̌` on a logarithmic grid.
#[derive(Debug, Clone)]
pub struct DualTable {
    contour: f64,
    v0: f64,
    step: f64,
    values: Vec<Complex64>,
}

impl DualTable {
    /// Interpolation stencil width.
    pub const STENCIL: usize = 24;

    pub fn y_range(&self) -> (f64, f64) {
        let half = (Self::STENCIL / 2) as f64 * self.step;
        (
            (self.v0 + half).exp(),
            (self.v0 + (self.values.len() - 1) as f64 * self.step - half).exp(),
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `V̌(y)` by barycentric Lagrange interpolation on the nearest
    /// `STENCIL` grid points.
    pub fn eval(&self, y: f64) -> Complex64 {
        let v = y.ln();
        let x = (v - self.v0) / self.step;
        let n = Self::STENCIL;
        let first =
            (x.floor() as isize - (n as isize / 2 - 1)).clamp(0, self.values.len() as isize - n as isize) as usize;
        let local = x - first as f64;
        let g = if (local - local.round()).abs() < 1e-13 {
            self.values[first + local.round() as usize]
        } else {
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            for j in 0..n {
                let w = BARYCENTRIC_24[j] / (local - j as f64);
                num += self.values[first + j] * w;
                den += w;
            }
            num / den
        };
        g * (-self.contour * v).exp()
    }

    /// `(y, V̌(y))` at every grid point inside the range.
    pub fn samples(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.values.iter().enumerate().map(move |(j, g)| {
            let v = self.v0 + j as f64 * self.step;
            (v.exp(), g * (-self.contour * v).exp())
        })
    }

    /// Largest `|V̌|` over the grid.
    pub fn peak(&self) -> f64 {
        self.samples().map(|(_, z)| z.norm()).fold(0.0, f64::max)
    }

    /// Smallest `y` beyond which every tabulated `|V̌|` is below `threshold`.
    pub fn cutoff(&self, threshold: f64) -> Option<f64> {
        let (lo, hi) = self.y_range();
        let last = self
            .samples()
            .filter(|(y, _)| *y >= lo && *y <= hi)
            .filter(|(_, z)| z.norm() >= threshold)
            .map(|(y, _)| y)
            .last()?;
        if last >= hi * (1.0 - 1e-12) {
            None
        } else {
            Some(last)
        }
    }

    /// Largest `|V̌(y)|` for `y ≥ from` within the table.
    pub fn envelope_beyond(&self, from: f64) -> f64 {
        self.samples()
            .filter(|(y, _)| *y >= from)
            .map(|(_, z)| z.norm())
            .fold(0.0, f64::max)
    }

    /// CSV `y,re,im` at the given points.
    pub fn csv(&self, ys: &[f64]) -> String {
        let mut s = String::from("y,re,im\n");
        for &y in ys {
            let z = self.eval(y);
            let _ = writeln!(s, "{y:.12e},{:.17e},{:.17e}", z.re, z.im);
        }
        s
    }
}

/// Barycentric weights `(−1)^j C(23, j)` for 24 equispaced nodes.
const BARYCENTRIC_24: [f64; 24] = {
    let mut w = [0.0f64; 24];
    let mut c = 1.0f64;
    let mut j = 0;
    while j < 24 {
        w[j] = if j % 2 == 0 { c } else { -c };
        c = c * (23 - j) as f64 / (j + 1) as f64;
        j += 1;
    }
    w
};

/// `V̌(y)` with default settings.
pub fn vcheck4(v: &TestFunction, data: &SpectralData, y: f64) -> Result<Complex64> {
    Ok(DualTransform::new(v, data, &DualConfig::default())?.eval(y))
}

/// CSV `y,re,im` by direct evaluation.
pub fn vcheck_csv(dual: &DualTransform, ys: &[f64]) -> String {
    let mut s = String::from("y,re,im\n");
    for &y in ys {
        let z = dual.eval(y);
        let _ = writeln!(s, "{y:.12e},{:.17e},{:.17e}", z.re, z.im);
    }
    s
}
