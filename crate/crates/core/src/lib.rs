//! Semisupervised anomaly detection benchmark with quantum-kernel support
//! vector regression, an RBF-kernel SVR baseline, a variational quantum
//! autoencoder and a small classical autoencoder.
//!
//! Circuits are simulated exactly on dense statevectors. All randomness is
//! seeded, so every run is reproducible bit for bit.

pub mod cae;
pub mod data;
pub mod detector;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod metrics;
pub mod optim;
pub mod qae;
pub mod report;
pub mod statevector;
pub mod svr;

pub use detector::{Detector, Label, ReconstructionDetector};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, ModelKind, ReportRow};
pub use kernel::{EncodingSpec, KernelMatrix, KernelMode};
pub use statevector::{GateKind, GateOp, StateVector};
pub use svr::{KernelBinding, SvrModel, SvrParams};
