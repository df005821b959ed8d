//! Hyper-Kloosterman sums, Hecke coefficient series of the symmetric square
//! of the discriminant form, and experiments on their distribution in
//! arithmetic progressions to large moduli.
//!
//! The modules follow the pipeline: [`field`] and [`expsum`] for finite-field
//! sums, [`coeffs`] for coefficient series, [`archimedean`] for gamma factors
//! and the dual transform, [`progressions`] for discrepancies and the twisted
//! dual-sum identity, and [`bilinear`] for the bilinear-form experiments.

pub mod archimedean;
pub mod bilinear;
pub mod coeffs;
pub mod error;
pub mod expsum;
pub mod fft;
pub mod field;
pub mod gamma;
pub mod ntt;
pub mod progressions;
pub mod quad;
pub mod sum;

pub use archimedean::{DualConfig, DualTable, DualTransform, SpectralData, TestFunction};
pub use bilinear::{RegimeCase, RegimeParams};
pub use coeffs::{CoefficientSeries, DeltaSeries, Normalization};
pub use error::{Error, Result};
pub use expsum::{TraceTable, VerificationReport};
pub use field::{DirichletCharacter, PrimeContext};
pub use progressions::{DiscrepancyReport, FunctionalEquation, IdentityConfig, IdentityReport, Variant};
