//! Goodness-of-fit testing with sup-functionals of weighted empirical
//! processes.
//!
//! The crate covers
//!
//! - [`special`]: normal and (noncentral) chi-square distribution functions,
//! - [`weights`]: weight functions `q` on (0, 1) and a numerical probe of the
//!   upper-class property,
//! - [`statistics`]: exact suprema of `√n(𝔾ₙ(u) − u)/q(u)` and relatives
//!   (one- and two-sided, "hat" variants, higher criticism, Kolmogorov–Smirnov),
//! - [`tabulation`]: Monte Carlo tabulation of the null limit laws
//!   `sup B(u)/q(u)` and `sup |B(u)|/q(u)` with persisted quantile tables,
//! - [`bands`]: nonparametric confidence bands for a continuous CDF,
//! - [`detection`]: sparse normal / chi-square mixture experiments,
//! - [`hc_asymptotics`]: extreme-value checks for normalized higher criticism.
//!
//! Every stochastic routine takes an explicit seed. Replicate `m` always
//! draws from its own ChaCha stream derived from `(seed, m)`, so results do
//! not depend on the rayon thread count.

pub mod bands;
pub mod detection;
pub mod error;
pub mod hc_asymptotics;
mod quadrature;
pub mod rng;
pub mod special;
pub mod statistics;
pub mod tabulation;
pub mod weights;

pub use error::{GofError, Result};
pub use special::Probability;
pub use statistics::{Interval, NullModel, Sample, StatisticDescriptor, StatisticFamily, StatisticResult, Sided};
pub use tabulation::{QuantileTable, TabulationConfig};
pub use weights::WeightFunction;
