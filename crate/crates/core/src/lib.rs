//! Secrecy beamforming for continuous-aperture transmitters.
//!
//! Channels are sampled once on a quadrature grid and folded into a Gram
//! matrix; the optimizer ([`fp`]), the zero-forcing heuristic ([`zf`]) and
//! the baselines ([`baselines`]) all work on that matrix. [`sweep`] runs
//! randomized experiments over it.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod channel;
pub mod error;
pub mod exec;
pub mod fp;
pub mod gram;
pub mod numerics;
pub mod sweep;
pub mod zf;

pub use baselines::{run_mrt, GramProvider, Scheme};
pub use channel::{capa_gram, GramSystem, Scenario};
pub use error::{Error, Result};
pub use exec::Execution;
pub use fp::{run_bcd, FpConfig};
pub use gram::{evaluate_metrics, BeamCoefficients, MetricsReport};
pub use zf::run_zf;
