//! Option pricing and sensitivities.
//!
//! Black-Scholes prices and Greeks are closed-form. Heston prices use the
//! semi-closed characteristic-function representation with the trap-free
//! branch choice, integrated by composite Gauss-Legendre quadrature.
//! Implied volatility inverts the Black-Scholes price by bracketed
//! bisection followed by a Newton polish.

mod black_scholes;
mod heston;
mod implied;

pub use black_scholes::{bs_greeks, bs_price, BsQuote};
pub use heston::{heston_delta_vega, heston_price, heston_price_nodes, QUAD_NODES};
pub use implied::{implied_vol, ImpliedVol};

pub use crate::listings::OptionKind;
