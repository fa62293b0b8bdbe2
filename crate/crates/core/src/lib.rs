//! One-period minimum-variance hedging benchmark library.
//!
//! The crate simulates underlying price paths (Black-Scholes and Heston),
//! lists option contracts along those paths under exchange-style rules,
//! assembles per-(option, day) sample tables, fits a family of statistical
//! hedging models plus a small neural network, and evaluates everything
//! under the normalized mean squared hedging error.
//!
//! The numerical core is generic over the scalar type via [`num::Real`];
//! the data pipeline works with the concrete [`Scalar`] alias.

pub mod error;
pub mod num;

pub mod datapipe;
pub mod evaluator;
pub mod hedgenet;
pub mod hedgers;
pub mod listings;
pub mod pricer;
pub mod simkit;
pub mod study;

pub use error::{Error, Result};

/// Concrete scalar used by the data pipeline and experiment drivers.
pub type Scalar = f64;

/// Black-Scholes model parameters at the pipeline scalar type.
pub type GbmParams = simkit::GbmParams<Scalar>;
/// Heston model parameters at the pipeline scalar type.
pub type HestonParams = simkit::HestonParams<Scalar>;
/// Simulated path at the pipeline scalar type.
pub type PricePath = simkit::PricePath<Scalar>;

/// Trading days per year used for all day-count conversions.
pub const TRADING_DAYS_PER_YEAR: f64 = 253.0;
