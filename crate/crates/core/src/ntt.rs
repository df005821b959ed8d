//! Exact integer polynomial squaring by multi-modular NTT.
//!
//! Each prime `p < 2^31` with `2^23 | p - 1` carries a Montgomery-form
//! number-theoretic transform. Results are lifted back with Garner's
//! algorithm using balanced digits and checked `i128` arithmetic, and one
//! further prime is kept aside to confirm the reconstruction.

use crate::error::{Error, Result};
use crate::field::{pow_mod, smallest_primitive_root};

/// NTT primes; every one admits transforms of length `2^23`.
pub const PRIMES: [u32; 7] = [
    2_013_265_921,
    1_811_939_329,
    2_113_929_217,
    469_762_049,
    167_772_161,
    754_974_721,
    998_244_353,
];

pub const MAX_LOG_LEN: u32 = 23;

#[derive(Debug, Clone, Copy)]
struct Montgomery {
    p: u32,
    /// `-p^{-1} mod 2^32`.
    neg_inv: u32,
    /// `2^64 mod p`, converts into Montgomery form.
    r2: u32,
}

impl Montgomery {
    fn new(p: u32) -> Self {
        let mut inv: u32 = 1;
        for _ in 0..5 {
            inv = inv.wrapping_mul(2u32.wrapping_sub(p.wrapping_mul(inv)));
        }
        let r = (1u64 << 32) % p as u64;
        let r2 = (r * r % p as u64) as u32;
        Self {
            p,
            neg_inv: inv.wrapping_neg(),
            r2,
        }
    }

    #[inline(always)]
    fn reduce(&self, t: u64) -> u32 {
        let m = (t as u32).wrapping_mul(self.neg_inv);
        let u = ((t + m as u64 * self.p as u64) >> 32) as u32;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }

    #[inline(always)]
    fn mul(&self, a: u32, b: u32) -> u32 {
        self.reduce(a as u64 * b as u64)
    }

    #[inline(always)]
    fn to_mont(&self, a: u32) -> u32 {
        self.mul(a, self.r2)
    }

    #[inline(always)]
    fn from_mont(&self, a: u32) -> u32 {
        self.reduce(a as u64)
    }

    #[inline(always)]
    fn add(&self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline(always)]
    fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }
}

/// Transform of one length over one prime.
struct NttPlan {
    mont: Montgomery,
    n: usize,
    /// `roots[k] = ω^k` in Montgomery form for `k < n/2`.
    roots: Vec<u32>,
    inv_roots: Vec<u32>,
    n_inv: u32,
}

impl NttPlan {
    fn new(p: u32, n: usize) -> Self {
        assert!(n.is_power_of_two() && n.trailing_zeros() <= MAX_LOG_LEN);
        let mont = Montgomery::new(p);
        let pm = p as u64;
        let g = smallest_primitive_root(pm);
        let w = pow_mod(g, (pm - 1) / n as u64, pm);
        let w_inv = pow_mod(w, pm - 2, pm);
        let table = |base: u64| {
            let mut out = Vec::with_capacity(n / 2);
            let mut x = 1u64;
            for _ in 0..n / 2 {
                out.push(mont.to_mont(x as u32));
                x = x * base % pm;
            }
            out
        };
        let n_inv = mont.to_mont(pow_mod(n as u64 % pm, pm - 2, pm) as u32);
        Self {
            mont,
            n,
            roots: table(w),
            inv_roots: table(w_inv),
            n_inv,
        }
    }

    fn transform(&self, a: &mut [u32], inverse: bool) {
        let n = self.n;
        let m = &self.mont;
        let shift = usize::BITS - n.trailing_zeros();
        if n > 1 {
            for i in 0..n {
                let j = i.reverse_bits() >> shift;
                if i < j {
                    a.swap(i, j);
                }
            }
        }
        let roots = if inverse { &self.inv_roots } else { &self.roots };
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for block in a.chunks_exact_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for k in 0..half {
                    let v = m.mul(hi[k], roots[k * stride]);
                    let u = lo[k];
                    lo[k] = m.add(u, v);
                    hi[k] = m.sub(u, v);
                }
            }
            half *= 2;
        }
        if inverse {
            for x in a.iter_mut() {
                *x = m.mul(*x, self.n_inv);
            }
        }
    }

    /// `a²` cyclically, `a` given as residues in `[0, p)`; output likewise.
    fn square(&self, a: &mut [u32]) {
        let m = &self.mont;
        for x in a.iter_mut() {
            *x = m.to_mont(*x);
        }
        self.transform(a, false);
        for x in a.iter_mut() {
            *x = m.mul(*x, *x);
        }
        self.transform(a, true);
        for x in a.iter_mut() {
            *x = m.from_mont(*x);
        }
    }
}

/// Number of primes whose product exceeds `2·bound + 1`, with `bound = 2^bits`.
fn primes_needed(bits: f64) -> Result<usize> {
    let target = bits + 1.0 + 1e-9;
    let mut have = 0.0;
    for (k, &p) in PRIMES.iter().enumerate() {
        have += (p as f64).log2();
        if have > target {
            return Ok(k + 1);
        }
    }
    Err(Error::ResourceLimit {
        what: "coefficient bound for NTT reconstruction (bits)",
        value: bits.ceil() as u128,
        limit: have.floor() as u128,
    })
}

/// Mixed-radix constants for Garner's algorithm over a prefix of [`PRIMES`].
struct Garner {
    primes: Vec<i128>,
    /// `Π_{j<i} p_j`, or `None` once it leaves `i128`.
    radix: Vec<Option<i128>>,
    /// `(Π_{j<i} p_j)^{-1} mod p_i`.
    radix_inv: Vec<i128>,
}

impl Garner {
    fn new(primes: &[u32]) -> Self {
        let mut radix = Vec::with_capacity(primes.len());
        let mut radix_inv = Vec::with_capacity(primes.len());
        let mut r: Option<i128> = Some(1);
        let mut exact: Vec<u64> = Vec::new();
        for &p in primes {
            radix.push(r);
            let p64 = p as u64;
            let r_mod = exact.iter().fold(1u64, |acc, &q| acc * (q % p64) % p64);
            radix_inv.push(pow_mod(r_mod, p64 - 2, p64) as i128);
            r = r.and_then(|x| x.checked_mul(p as i128));
            exact.push(p64);
        }
        Self {
            primes: primes.iter().map(|&p| p as i128).collect(),
            radix,
            radix_inv,
        }
    }

    /// Lift with balanced digits; `None` if the value leaves `i128`.
    fn lift(&self, residues: &[u32]) -> Option<i128> {
        let mut value: i128 = 0;
        for (i, &r) in residues.iter().enumerate() {
            let p = self.primes[i];
            let current = value.rem_euclid(p);
            let mut digit = (r as i128 - current).rem_euclid(p) * self.radix_inv[i] % p;
            if digit > p / 2 {
                digit -= p;
            }
            if digit != 0 {
                value = value.checked_add(digit.checked_mul(self.radix[i]?)?)?;
            }
        }
        Some(value)
    }
}

/// First `len` coefficients of `a(x)²` for an integer series `a`.
pub fn square_truncated(a: &[i128], len: usize) -> Result<Vec<i128>> {
    let len = len.min(2 * a.len().saturating_sub(1) + 1);
    if a.is_empty() || len == 0 {
        return Ok(Vec::new());
    }
    let used = a.len().min(len);
    let a = &a[..used];
    let max_abs = a.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
    // |c_i| ≤ used·max², tracked in bits so the estimate itself cannot overflow.
    let bits = 2.0 * (max_abs.max(1) as f64).log2() + (used as f64).log2();
    let k = primes_needed(bits)?;
    let size = (2 * used - 1).next_power_of_two();
    if size.trailing_zeros() > MAX_LOG_LEN {
        return Err(Error::ResourceLimit {
            what: "NTT length",
            value: size as u128,
            limit: 1u128 << MAX_LOG_LEN,
        });
    }
    // One extra prime, when available, confirms the lift.
    let nprimes = (k + 1).min(PRIMES.len());
    let mut residues: Vec<Vec<u32>> = Vec::with_capacity(nprimes);
    for &p in &PRIMES[..nprimes] {
        let mut buf = vec![0u32; size];
        for (slot, &x) in buf.iter_mut().zip(a) {
            *slot = x.rem_euclid(p as i128) as u32;
        }
        NttPlan::new(p, size).square(&mut buf);
        buf.truncate(len);
        residues.push(buf);
    }
    let garner = Garner::new(&PRIMES[..k]);
    let mut out = Vec::with_capacity(len);
    let mut digits = vec![0u32; k];
    for i in 0..len {
        for (d, r) in digits.iter_mut().zip(&residues) {
            *d = r[i];
        }
        let v = garner.lift(&digits).ok_or(Error::ResourceLimit {
            what: "series coefficient magnitude in bits (i128)",
            value: bits.ceil() as u128,
            limit: 127,
        })?;
        if nprimes > k {
            let check = PRIMES[k];
            if v.rem_euclid(check as i128) as u32 != residues[k][i] {
                return Err(Error::Mismatch {
                    what: "NTT reconstruction and check prime",
                    n: i,
                    difference: f64::NAN,
                });
            }
        }
        out.push(v);
    }
    Ok(out)
}
