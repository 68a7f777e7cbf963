//! Secure and private linear function retrieval over the combinatorial
//! multi-access coded caching topology.
//!
//! `C` caches serve one user per `r`-subset of caches. Every user asks for a
//! GF(2) linear combination of the `N` files in the library. The crate
//! implements the placement, delivery and per-user decoding of five schemes:
//!
//! * SP-LFR: secure and private, using superposed keys split with Shamir
//!   sharing across the user's caches,
//! * P-LFR: private only,
//! * S-LFR: secure only, whole one-time-pad keys cached,
//! * IS-LFR: secure only, keys spread as MDS-coded sub-keys,
//! * LFR: the keyless baseline.
//!
//! The [`analysis`] module gives the closed-form memory-rate tradeoffs and
//! [`verify`] holds exhaustive oracles for correctness, security and privacy.
//!
//! Numeric code in [`analysis`] and [`verify::distribution`] is generic over
//! [`Scalar`]; the aliases below fix the concrete types used throughout.

pub mod analysis;
pub mod bits;
pub mod error;
pub mod finite_field;
pub mod library_model;
pub mod mds_codes;
pub mod randomness;
pub mod scalar;
pub mod schemes;
pub mod secret_sharing;
pub mod topology;
pub mod verify;

pub use bits::BitBlock;
pub use error::{Error, Result};
pub use scalar::Scalar;
pub use schemes::SchemeKind;

/// Exact fraction used for every memory, rate and probability value.
pub type Rational = num_rational::Ratio<i128>;

/// Memory-rate point with exact coordinates.
pub type ExactPoint = analysis::MemoryRatePoint<Rational>;
/// Memory-rate point in double precision, for plotting.
pub type FloatPoint = analysis::MemoryRatePoint<f64>;
/// Tradeoff curve with exact coordinates.
pub type ExactCurve = analysis::TradeoffCurve<Rational>;
/// Tradeoff curve in double precision.
pub type FloatCurve = analysis::TradeoffCurve<f64>;
/// Outcome distribution with exact probabilities.
pub type ExactDistribution<K> = verify::distribution::DistributionTable<K, Rational>;
