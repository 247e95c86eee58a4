//! Bayesian dynamic regression with Dirichlet-Laplace shrinkage, heavy-tailed
//! state and measurement errors, and stochastic volatility.
//!
//! The crate is `no_std` + `alloc`. It contains every sampler block, the
//! Gibbs orchestration, one-step predictive densities, the expanding-window
//! backtest driver and the trading-strategy evaluation. File formats, the
//! command line and parallel execution live in the `tvpsv` companion crate.
//!
//! Model, in non-centered form:
//!
//! ```text
//! y_t     = β₀'X_t + Σ_j √v_j b_jt X_jt + ε_t,   ε_t ~ N(0, τ_t e^{h_t})
//! b_jt    = b_j,t-1 + η_jt,                      η_jt ~ N(0, ξ_jt),  b_j0 = 0
//! h_t     = μ + ρ(h_{t-1} - μ) + σ_h ζ_t
//! τ_t ~ IG(ν/2, ν/2),  ξ_jt ~ IG(κ_j/2, κ_j/2)
//! α = (β₀', √v')' ~ Dirichlet-Laplace
//! ```

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

mod error;
pub mod linalg;
pub mod math;

pub mod data;
pub mod diagnostics;
pub mod evalharness;
pub mod geweke;
pub mod heavytails;
pub mod model;
pub mod rngdist;
pub mod sampler;
pub mod shrinkage;
pub mod state_space;
pub mod stochvol;
pub mod trading;

pub use error::{Block, Error, Result};
pub use rngdist::RngStream;
