//! Arithmetic modulo an odd prime `q`.
//!
//! A [`PrimeContext`] fixes the smallest primitive root `g` and tabulates
//! discrete logarithms, inverses, and the additive characters `e(x/q)`.
//! Multiplicative characters are labelled by `j` with `χ_j(g) = e(j/(q-1))`
//! and are evaluated through the discrete-log table, never by repeated
//! multiplication.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest modulus for which tables are built. Tables are indexed by `u32`.
pub const MAX_MODULUS: u64 = 1 << 31;

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin, exact for every `n < 2^64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in SMALL {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in SMALL {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `p >= n`.
pub fn next_prime(n: u64) -> u64 {
    let mut p = n.max(2);
    while !is_prime(p) {
        p += 1;
    }
    p
}

/// Distinct prime factors by trial division.
pub fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Smallest primitive root of the prime `p` (also used for NTT primes).
pub fn smallest_primitive_root(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let factors = distinct_prime_factors(p - 1);
    (2..p)
        .find(|&g| factors.iter().all(|&f| pow_mod(g, (p - 1) / f, p) != 1))
        .expect("a prime modulus always has a primitive root")
}

/// `e(x) = exp(2πix)` for a rational `num/den`, with the fraction reduced
/// before the multiplication by 2π.
#[inline]
pub fn e_frac(num: u64, den: u64) -> Complex64 {
    let (s, c) = (TAU * (num % den) as f64 / den as f64).sin_cos();
    Complex64::new(c, s)
}

#[derive(Debug, Clone)]
pub struct PrimeContext {
    q: u64,
    g: u64,
    /// `dlog[x] = k` with `g^k ≡ x`; entry 0 is unused.
    dlog: Vec<u32>,
    /// `powers[k] = g^k mod q` for `0 <= k < q-1`.
    powers: Vec<u32>,
    inv: Vec<u32>,
    /// `e(x/q)` for `0 <= x < q`.
    additive: Vec<Complex64>,
    /// `e(k/(q-1))` for `0 <= k < q-1`.
    unit_roots: Vec<Complex64>,
}

impl PrimeContext {
    pub fn new(q: u64) -> Result<Self> {
        if q < 3 || q % 2 == 0 || !is_prime(q) {
            return Err(Error::NotOddPrime(q));
        }
        if q > MAX_MODULUS {
            return Err(Error::ResourceLimit {
                what: "modulus q",
                value: q as u128,
                limit: MAX_MODULUS as u128,
            });
        }
        let g = smallest_primitive_root(q);
        let order = (q - 1) as usize;
        let mut dlog = vec![0u32; q as usize];
        let mut powers = Vec::with_capacity(order);
        let mut x = 1u64;
        for k in 0..order {
            powers.push(x as u32);
            dlog[x as usize] = k as u32;
            x = x * g % q;
        }
        debug_assert_eq!(x, 1);
        // x^{-1} = g^{(q-1-k)} when x = g^k.
        let mut inv = vec![0u32; q as usize];
        for (k, &p) in powers.iter().enumerate() {
            inv[p as usize] = powers[(order - k) % order];
        }
        let additive = (0..q).map(|x| e_frac(x, q)).collect();
        let unit_roots = (0..q - 1).map(|k| e_frac(k, q - 1)).collect();
        Ok(Self {
            q,
            g,
            dlog,
            powers,
            inv,
            additive,
            unit_roots,
        })
    }

    #[inline]
    pub fn q(&self) -> u64 {
        self.q
    }

    #[inline]
    pub fn generator(&self) -> u64 {
        self.g
    }

    /// `φ(q) = q - 1`.
    #[inline]
    pub fn phi(&self) -> u64 {
        self.q - 1
    }

    #[inline]
    pub fn reduce(&self, x: i64) -> u64 {
        x.rem_euclid(self.q as i64) as u64
    }

    #[inline]
    pub fn is_unit(&self, x: i64) -> bool {
        self.reduce(x) != 0
    }

    /// Discrete logarithm of a unit; `None` for residues divisible by `q`.
    #[inline]
    pub fn dlog(&self, x: i64) -> Option<u64> {
        let r = self.reduce(x);
        (r != 0).then(|| self.dlog[r as usize] as u64)
    }

    /// `g^k mod q`.
    #[inline]
    pub fn power(&self, k: u64) -> u64 {
        self.powers[(k % (self.q - 1)) as usize] as u64
    }

    #[inline]
    pub fn inverse(&self, x: i64) -> Option<u64> {
        let r = self.reduce(x);
        (r != 0).then(|| self.inv[r as usize] as u64)
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.q)
    }

    /// `e(x/q)`.
    #[inline]
    pub fn additive_char(&self, x: i64) -> Complex64 {
        self.additive[self.reduce(x) as usize]
    }

    /// `e(k/(q-1))`.
    #[inline]
    pub fn unit_root(&self, k: u64) -> Complex64 {
        self.unit_roots[(k % (self.q - 1)) as usize]
    }

    /// Every unit `1..q` in increasing order.
    pub fn units(&self) -> impl Iterator<Item = u64> {
        1..self.q
    }

    pub fn character(&self, j: u64) -> DirichletCharacter<'_> {
        DirichletCharacter::new(self, j)
    }

    /// All `q - 1` characters, `χ_0` first.
    pub fn characters(&self) -> impl Iterator<Item = DirichletCharacter<'_>> {
        (0..self.q - 1).map(move |j| DirichletCharacter::new(self, j))
    }

    /// `count` units drawn uniformly, reproducible from `seed`.
    pub fn random_units(&self, count: usize, seed: u64) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| rng.gen_range(1..self.q)).collect()
    }
}

/// `χ_j` modulo `q`, defined by `χ_j(g) = e(j/(q-1))`.
#[derive(Debug, Clone, Copy)]
pub struct DirichletCharacter<'a> {
    ctx: &'a PrimeContext,
    j: u64,
}

impl<'a> DirichletCharacter<'a> {
    pub fn new(ctx: &'a PrimeContext, j: u64) -> Self {
        Self {
            ctx,
            j: j % (ctx.q - 1),
        }
    }

    pub fn context(&self) -> &'a PrimeContext {
        self.ctx
    }

    pub fn index(&self) -> u64 {
        self.j
    }

    pub fn is_principal(&self) -> bool {
        self.j == 0
    }

    /// 0 when `χ(-1) = 1`, 1 when `χ(-1) = -1`. Since `-1 = g^{(q-1)/2}`,
    /// `χ_j(-1) = (-1)^j`.
    pub fn parity(&self) -> u8 {
        (self.j % 2) as u8
    }

    pub fn conj(&self) -> Self {
        Self::new(self.ctx, self.ctx.q - 1 - self.j)
    }

    #[inline]
    pub fn value(&self, n: i64) -> Complex64 {
        match self.ctx.dlog(n) {
            Some(k) => self.ctx.unit_root(mul_mod(self.j, k, self.ctx.q - 1)),
            None => Complex64::new(0.0, 0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sum::csum;
    use proptest::prelude::*;

    /// Multiplicative order of `g` by repeated multiplication.
    fn brute_order(g: u64, q: u64) -> u64 {
        let mut x = g % q;
        let mut k = 1;
        while x != 1 {
            x = x * g % q;
            k += 1;
        }
        k
    }

    fn brute_smallest_root(q: u64) -> u64 {
        (2..q).find(|&g| brute_order(g, q) == q - 1).unwrap()
    }

    #[test]
    fn smallest_primitive_roots() {
        assert_eq!(PrimeContext::new(3).unwrap().generator(), 2);
        assert_eq!(PrimeContext::new(5).unwrap().generator(), 2);
        assert_eq!(PrimeContext::new(7).unwrap().generator(), 3);
        for q in [11, 13, 17, 19, 23, 41, 97, 101, 191, 409, 499] {
            assert_eq!(
                PrimeContext::new(q).unwrap().generator(),
                brute_smallest_root(q),
                "q = {q}"
            );
        }
    }

    #[test]
    fn rejects_even_and_composite() {
        for q in [0, 1, 2, 4, 9, 15, 91, 561] {
            assert!(matches!(PrimeContext::new(q), Err(Error::NotOddPrime(_))));
        }
    }

    #[test]
    fn miller_rabin_matches_trial_division() {
        let trial = |n: u64| n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0);
        for n in 0..20_000u64 {
            assert_eq!(is_prime(n), trial(n), "n = {n}");
        }
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(3_215_031_751)); // strong pseudoprime to bases 2,3,5,7
    }

    #[test]
    fn additive_character_values() {
        let ctx = PrimeContext::new(5).unwrap();
        assert_eq!(ctx.additive_char(0), Complex64::new(1.0, 0.0));
        assert_eq!(ctx.additive_char(5), Complex64::new(1.0, 0.0));
        let z = ctx.additive_char(1);
        let expect = Complex64::new((TAU / 5.0).cos(), (TAU / 5.0).sin());
        assert!((z - expect).norm() < 1e-15);
        assert!((z.re - 0.309017).abs() < 1e-6 && (z.im - 0.951057).abs() < 1e-6);
        assert!((ctx.additive_char(-1) - z.conj()).norm() < 1e-15);
    }

    #[test]
    fn tables_satisfy_invariants() {
        for q in [3, 5, 7, 61, 101, 499, 997] {
            let ctx = PrimeContext::new(q).unwrap();
            for x in 1..q {
                let k = ctx.dlog(x as i64).unwrap();
                assert_eq!(pow_mod(ctx.generator(), k, q), x);
                assert_eq!(x * ctx.inverse(x as i64).unwrap() % q, 1);
            }
            for k in 0..q - 1 {
                assert_eq!(ctx.dlog(ctx.power(k) as i64), Some(k));
            }
            assert_eq!(ctx.dlog(0), None);
            assert_eq!(ctx.inverse(q as i64), None);
        }
    }

    #[test]
    fn character_basics() {
        let ctx = PrimeContext::new(13).unwrap();
        let principal = ctx.character(0);
        for n in 1..13 {
            assert_eq!(principal.value(n), Complex64::new(1.0, 0.0));
        }
        for j in 0..12 {
            let chi = ctx.character(j);
            let at_g = chi.value(ctx.generator() as i64);
            assert!((at_g - e_frac(j, 12)).norm() < 1e-15);
            assert_eq!(chi.value(13), Complex64::new(0.0, 0.0));
            let expect_parity = if (chi.value(-1) - 1.0).norm() < 1e-12 { 0 } else { 1 };
            assert_eq!(chi.parity(), expect_parity);
            if j != 0 {
                let total = csum((0..13).map(|n| chi.value(n)));
                assert!(total.norm() < 1e-12, "j = {j}: {total}");
            }
        }
    }

    #[test]
    fn orthogonality_in_both_variables() {
        let ctx = PrimeContext::new(31).unwrap();
        let phi = ctx.phi() as f64;
        for m in 1..31i64 {
            for n in 1..31i64 {
                let s = csum(ctx.characters().map(|c| c.value(m) * c.value(n).conj())) / phi;
                let expect = if m == n { 1.0 } else { 0.0 };
                assert!((s - expect).norm() < 1e-10, "m={m} n={n}: {s}");
            }
        }
    }

    proptest! {
        #[test]
        fn characters_are_multiplicative(
            qi in 0usize..6, j in 0u64..1000, m in 1i64..10_000, n in 1i64..10_000
        ) {
            let q = [3u64, 7, 29, 101, 257, 499][qi];
            let ctx = PrimeContext::new(q).unwrap();
            let chi = ctx.character(j);
            let lhs = chi.value(m * n);
            let rhs = chi.value(m) * chi.value(n);
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn conjugate_character_is_pointwise_conjugate(j in 0u64..96, n in 0i64..500) {
            let ctx = PrimeContext::new(97).unwrap();
            let chi = ctx.character(j);
            prop_assert!((chi.conj().value(n) - chi.value(n).conj()).norm() < 1e-12);
        }
    }
}
