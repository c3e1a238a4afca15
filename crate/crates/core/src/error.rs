use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures of the physics and estimation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("half period {half_period:e} s is not longer than the pi-pulse width {pi_width:e} s")]
    NoValidTau { half_period: f64, pi_width: f64 },

    #[error("photon rates r0 = {r0} and r1 = {r1} give no optical contrast")]
    ZeroContrast { r0: f64, r1: f64 },

    #[error("no coherence entry covers N = {0}")]
    MissingCoherence(u32),

    #[error("time {t:e} s lies outside the sequence span [0, {total:e}] s")]
    TimeOutOfRange { t: f64, total: f64 },

    #[error("odd pulse count N = {0} puts a pole of the closed-form phase on resonance")]
    OddPulseCountAtResonance(u32),

    #[error("sequence is off resonance: |cos(pi f tau (1 + alpha))| = {residual:e}")]
    OffResonance { residual: f64 },

    #[error("AC field amplitude must be nonzero")]
    ZeroAmplitude,

    #[error("model returned a non-finite value at parameter set {0:?}")]
    NonFiniteModel(Vec<f64>),

    #[error("fit did not converge within {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("normal matrix is singular at the optimum")]
    SingularJacobian,

    #[error("outcome set has zero variance")]
    ZeroVariance,

    #[error("outcome set is empty")]
    EmptyOutcomes,

    #[error("measurement count {0} overflows the aggregate photon budget")]
    MeasurementOverflow(u64),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
