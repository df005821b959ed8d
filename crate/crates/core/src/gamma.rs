//! Complex log-Gamma and the archimedean factor `Γ_R(s) = π^{-s/2} Γ(s/2)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Distance to a pole below which evaluation is refused.
pub const POLE_GUARD: f64 = 1e-8;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln sin(πz)` up to a multiple of `2πi`, without overflow for large `|ℑz|`.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    if z.im.abs() < 5.0 {
        return (z * PI).sin().ln();
    }
    if z.im < 0.0 {
        return ln_sin_pi(z.conj()).conj();
    }
    // sin(πz) = (i/2) e^{-iπz} (1 − e^{2πiz}), and |e^{2πiz}| = e^{-2πℑz} is tiny.
    let i = Complex64::i();
    let small = (i * z * (2.0 * PI)).exp();
    -i * PI * z + Complex64::new(0.5, 0.0).ln() + i * (PI / 2.0) + (Complex64::new(1.0, 0.0) - small).ln()
}

/// `ln Γ(z)` (some branch), Lanczos with reflection for `ℜz < 1/2`.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let reflected = ln_gamma(Complex64::new(1.0, 0.0) - z);
        return Complex64::new(PI.ln(), 0.0) - ln_sin_pi(z) - reflected;
    }
    let z = z - 1.0;
    let mut a = Complex64::new(LANCZOS_COEFFS[0], 0.0);
    for (k, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        a += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

pub fn gamma(z: Complex64) -> Result<Complex64> {
    check_pole(z)?;
    Ok(ln_gamma(z).exp())
}

fn check_pole(z: Complex64) -> Result<()> {
    if z.re <= 0.5 {
        let k = z.re.round();
        if k <= 0.0 {
            let pole = Complex64::new(k, 0.0);
            let distance = (z - pole).norm();
            if distance < POLE_GUARD {
                return Err(Error::Pole { pole, distance });
            }
        }
    }
    Ok(())
}

/// `ln Γ_R(s)`; the poles of `Γ(s/2)` sit at `s = 0, −2, −4, ...`.
pub fn ln_gamma_r(s: Complex64) -> Result<Complex64> {
    let half = s * 0.5;
    if let Err(Error::Pole { pole, distance }) = check_pole(half) {
        return Err(Error::Pole {
            pole: pole * 2.0,
            distance: distance * 2.0,
        });
    }
    Ok(-half * PI.ln() + ln_gamma(half))
}

/// `Γ_R(s) = π^{-s/2} Γ(s/2)`.
pub fn gamma_r(s: Complex64) -> Result<Complex64> {
    Ok(ln_gamma_r(s)?.exp())
}
