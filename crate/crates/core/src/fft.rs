//! Complex FFT of arbitrary length.
//!
//! Power-of-two lengths use an iterative radix-2 transform. Any other length
//! goes through Bluestein's chirp-z reformulation as a power-of-two cyclic
//! convolution. Twiddles are evaluated directly with `sin_cos` from exact
//! integer phases rather than by recurrence, so errors do not accumulate
//! with the length.

use std::f64::consts::TAU;

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Kernel `exp(-2πi jk/n)`.
    Forward,
    /// Kernel `exp(+2πi jk/n)`, unscaled.
    Inverse,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        }
    }
}

/// `exp(sign·2πi·k/n)` for an integer phase `k`.
#[inline]
fn root(k: u64, n: u64, sign: f64) -> Complex64 {
    let (s, c) = (TAU * (k % n) as f64 / n as f64).sin_cos();
    Complex64::new(c, sign * s)
}

struct Radix2 {
    n: usize,
    log_n: u32,
    /// `twiddles[k] = exp(-2πi k/n)` for `k < n/2`.
    twiddles: Vec<Complex64>,
}

impl Radix2 {
    fn new(n: usize) -> Self {
        assert!(n.is_power_of_two());
        let twiddles = (0..n / 2).map(|k| root(k as u64, n as u64, -1.0)).collect();
        Self {
            n,
            log_n: n.trailing_zeros(),
            twiddles,
        }
    }

    fn process(&self, data: &mut [Complex64], dir: Direction) {
        let n = self.n;
        debug_assert_eq!(data.len(), n);
        if n <= 1 {
            return;
        }
        let shift = usize::BITS - self.log_n;
        for i in 0..n {
            let j = i.reverse_bits() >> shift;
            if i < j {
                data.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if dir == Direction::Inverse {
                        w = w.conj();
                    }
                    let u = data[start + k];
                    let v = data[start + k + half] * w;
                    data[start + k] = u + v;
                    data[start + k + half] = u - v;
                }
            }
            half *= 2;
        }
    }
}

struct Bluestein {
    m: usize,
    inner: Radix2,
    /// `chirp[k] = exp(-πi k²/n)`.
    chirp: Vec<Complex64>,
    /// Forward transform of the conjugate chirp, wrapped to length `m`.
    kernel_hat: Vec<Complex64>,
}

impl Bluestein {
    fn new(n: usize) -> Self {
        let m = (2 * n - 1).next_power_of_two();
        let inner = Radix2::new(m);
        // k²/(2n) reduced exactly: exp(-πi k²/n) = exp(-2πi (k² mod 2n)/(2n)).
        let two_n = 2 * n as u64;
        let chirp: Vec<Complex64> = (0..n as u64).map(|k| root((k * k) % two_n, two_n, -1.0)).collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for k in 1..n {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        inner.process(&mut kernel, Direction::Forward);
        Self {
            m,
            inner,
            chirp,
            kernel_hat: kernel,
        }
    }

    fn process(&self, data: &mut [Complex64], dir: Direction) {
        let n = data.len();
        // The inverse transform is the conjugated forward transform of the
        // conjugated input.
        let conj = dir == Direction::Inverse;
        let mut work = vec![Complex64::new(0.0, 0.0); self.m];
        for k in 0..n {
            let x = if conj { data[k].conj() } else { data[k] };
            work[k] = x * self.chirp[k];
        }
        self.inner.process(&mut work, Direction::Forward);
        for (w, h) in work.iter_mut().zip(&self.kernel_hat) {
            *w *= h;
        }
        self.inner.process(&mut work, Direction::Inverse);
        let scale = 1.0 / self.m as f64;
        for k in 0..n {
            let y = work[k] * self.chirp[k] * scale;
            data[k] = if conj { y.conj() } else { y };
        }
    }
}

enum Engine {
    Radix2(Radix2),
    Bluestein(Bluestein),
}

/// A planned unnormalized DFT of fixed length.
pub struct Fft {
    n: usize,
    engine: Engine,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        let engine = if n.is_power_of_two() {
            Engine::Radix2(Radix2::new(n.max(1)))
        } else {
            Engine::Bluestein(Bluestein::new(n))
        };
        Self { n, engine }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place `X[k] = Σ_j x[j] exp(∓2πi jk/n)`; no normalization.
    pub fn process(&self, data: &mut [Complex64], dir: Direction) {
        assert_eq!(data.len(), self.n, "buffer length does not match plan");
        if self.n == 0 {
            return;
        }
        match &self.engine {
            Engine::Radix2(r) => r.process(data, dir),
            Engine::Bluestein(b) => b.process(data, dir),
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.process(data, Direction::Forward)
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.process(data, Direction::Inverse)
    }
}

/// Quadratic-time DFT, used as an oracle.
pub fn naive_dft(data: &[Complex64], dir: Direction) -> Vec<Complex64> {
    let n = data.len() as u64;
    (0..n)
        .map(|k| {
            data.iter()
                .enumerate()
                .map(|(j, &x)| x * root(j as u64 * k % n, n, dir.sign()))
                .sum()
        })
        .collect()
}

/// Cyclic convolution of two equal-length sequences.
pub fn cyclic_convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let plan = Fft::new(n);
    let mut fa = a.to_vec();
    let mut fb = b.to_vec();
    plan.forward(&mut fa);
    plan.forward(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    plan.inverse(&mut fa);
    let scale = 1.0 / n as f64;
    fa.iter_mut().for_each(|x| *x *= scale);
    fa
}
