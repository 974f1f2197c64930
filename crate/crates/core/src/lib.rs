//! Noisy-neighbor detection toolkit.
//!
//! Detects CPU contention from co-located VMs ("noisy neighbors") using only
//! coarse telemetry of the victim VM: CPU utilization and in/out bandwidth.
//! The pipeline is: window raw samples into labeled instances, train a
//! soft-margin Gaussian-kernel SVM (SMO) or bagged Gini decision trees,
//! evaluate with k-fold cross-validation, and inspect per-feature dependence
//! (Pearson correlation, maximal information coefficient). A deterministic
//! simulator generates synthetic testbed telemetry with ground-truth noise
//! schedules.

pub mod analysis;
pub mod cli;
pub mod eval;
pub mod features;
pub mod forest;
pub mod simulator;
pub mod svm;
pub mod telemetry;

pub use telemetry::{Dataset, Instance, RawSample};
