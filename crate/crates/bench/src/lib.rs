//! Criterion benchmarks for the hot kernels; see `benches/`.

use apdist_core::PrimeContext;

/// Prime moduli used across the benchmarks.
pub const MODULI: [u64; 3] = [101, 1009, 10007];

pub fn context(q: u64) -> PrimeContext {
    PrimeContext::new(q).expect("benchmark modulus is an odd prime")
}
