//! Rate coverage of a cellular-connected UAV sharing an uplink resource block
//! with a ground user through power-domain NOMA.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: system parameters, LoS models, path loss, power control and
//!   the received-power distributions of both users;
//! - [`analysis`]: closed-form (and one semi-analytic) event probabilities of
//!   the SIC decoding tree with the derived coverage metrics;
//! - [`montecarlo`]: an independent simulation oracle of the same tree;
//! - [`trajectory`]: spiral and chord-walk transmission points, CSV I/O;
//! - [`planner`]: minimum and best altitude per trajectory point.
//!
//! Batch work (Monte Carlo streams, height grids) runs on rayon when the
//! `parallel` feature is on, and sequentially otherwise.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod error;
pub mod exec;
pub mod montecarlo;
pub mod planner;
pub mod quad;
pub mod special;
pub mod trajectory;
pub mod units;

pub use analysis::{
    coverage_report, CoverageReport, DecodingThresholds, Method, NakagamiLinkParams,
};
pub use channel::{los_probability, LosEnvironment, LosModel, SystemParams};
pub use error::{Error, Result};
pub use exec::Execution;
pub use montecarlo::{estimate, McConfig};
pub use planner::{min_height, HeightResult, HeightSearchConfig};
pub use trajectory::{ChordWalkConfig, SpiralConfig, TrajectoryPoint};
