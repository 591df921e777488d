//! Zero-forcing MIMO uplink through a large passive reflecting surface.
//!
//! The crate covers the whole pipeline: channel generation, the Nakagami /
//! central-Wishart statistics of the per-stream SNR, imperfect-CSI modelling,
//! discrete phase design, and a deterministic parallel Monte Carlo engine.
//! The [`harness`] module ties them together into named experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channel;
pub mod config;
pub mod detection;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod matkernel;
pub mod montecarlo;
pub mod phasedesign;
pub mod quad;
pub mod rng;
pub mod special;
pub mod stats;

pub use channel::ChannelRealization;
pub use config::{Angles, SteeringAngles, SystemConfig, Upa};
pub use detection::StreamSnrs;
pub use error::{Error, Result};
pub use estimation::EstimationModel;
pub use matkernel::{CMatrix, C64};
pub use montecarlo::{CsiMode, EmpiricalCurve, PhaseMode};
pub use phasedesign::{PhaseDesignResult, PhaseSet};
pub use stats::EquivalentStats;
