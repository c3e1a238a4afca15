//! Simulation and estimation toolkit for AC magnetometry with a two-level
//! spin sensor driven by multiple-pulse dynamical-decoupling sequences.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: field, sequence, sensor and result types.
//! * [`phase`]: closed-form phase accumulation, its resonant limit and a
//!   quadrature oracle.
//! * [`signal`]: magnetometry signal, deviations, variance, SNR and
//!   phase-sensitivity figures.
//! * [`density`]: explicit density-matrix propagation, used as an oracle for
//!   the signal layer.
//! * [`montecarlo`]: photon-counting readout with common-mode rejection.
//! * [`estimation`]: Levenberg–Marquardt fits of magnetometry and coherence
//!   data.
//! * [`scenario`]: declarative scenario runner behind the `acmag` binary.

pub mod density;
pub mod error;
pub mod estimation;
pub mod model;
pub mod montecarlo;
pub mod numeric;
pub mod phase;
pub mod scenario;
pub mod signal;

pub use error::{Error, Result};
pub use model::{
    build_sequence, contrast, resonance_tau, AcField, Axis, CoherenceEnvelope, DecouplingSequence,
    Family, FitResult, PhotonRates, Readout, SensorEnsemble, SignalPoint, GAMMA_E, RESONANCE_EPS,
};
