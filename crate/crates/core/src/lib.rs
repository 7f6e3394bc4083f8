//! GPR-guided selective channel-load measurement.
//!
//! A station that may only measure K of M channels per round keeps a short
//! history of busy-fraction samples per channel, predicts each channel's
//! current load with a fixed squared-exponential Gaussian process, and uses
//! the predictions to decide which channels to measure and where to operate.
//!
//! - [`gpr`]: kernel, Gram matrix, Cholesky solve, posterior mean and variance
//! - [`cca`]: regime-switching traffic and mini-slot CCA measurement simulation
//! - [`tracker`]: per-channel sliding windows, moving-average smoothing, estimates
//! - [`selection`]: full-scan argmin, measurement-set policies, switching, bootstrap
//! - [`experiment`]: trace replay, sweeps, cost and error accounting
//! - [`trace`], [`report`]: CSV traces and result files

pub mod cca;
pub mod error;
pub mod experiment;
pub mod gpr;
pub mod report;
pub mod selection;
pub mod trace;
pub mod tracker;

pub use cca::{
    generate_matrix, measure, ChannelId, LoadMatrix, MeasurementTiming, RawMeasurement,
    TrafficModel,
};
pub use error::{Error, Result};
pub use experiment::{
    estimation_error, run_exhaustive, run_selective, sweep, ExperimentSummary, RoundRecord, RunRow,
    SelectiveConfig, SweepTable,
};
pub use gpr::{kernel, posterior, solve_spd, GramMatrix, KernelParams, Posterior, Round};
pub use selection::{ChannelSet, SelectionPolicy, SwitchDecision};
pub use trace::{export_trace, ingest_trace, parse_trace};
pub use tracker::{ChannelHistory, EstimateVector, GprInput, LoadTracker};
