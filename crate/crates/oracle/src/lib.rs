//! Reference computations used only by tests: numerical quadrature of
//! densities, closed-form CDFs, dense multivariate-normal algebra and
//! simple Monte Carlo summaries. Nothing here shares code with `tvpsv-core`.

pub mod dense;
pub mod dist;
pub mod quad;
pub mod stats;
