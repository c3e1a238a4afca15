//! Two-level density-matrix propagation through a full readout cycle.
//!
//! This path shares no algebra with the closed form: the field enters as
//! z-rotations by `γ∫B dt` over each free segment (exact antiderivative of the
//! cosine), π pulses are ideal rotations about their own axes, and
//! decoherence is a single `exp(−D)` damping of the coherences applied after
//! the pulse train. The toggling-frame signs and the `(−1)^{n_x}`, `(−1)^{n_y}`
//! bookkeeping fall out of the matrix products.
//!
//! After the train the state is
//! `½{1 − (−1)^{n_x} σ_y cos Θ + (−1)^{n_y} σ_x sin Θ}` (even `N`), which the
//! final `(π/2)_Y` maps onto `σ_z`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::Result;
use crate::model::{
    AcField, Axis, CoherenceEnvelope, DecouplingSequence, PhotonRates, Readout, SensorEnsemble,
};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);
const I: C = C::new(0.0, 1.0);

fn pauli_x() -> Matrix2<C> {
    Matrix2::new(ZERO, ONE, ONE, ZERO)
}

fn pauli_y() -> Matrix2<C> {
    Matrix2::new(ZERO, -I, I, ZERO)
}

fn pauli_z() -> Matrix2<C> {
    Matrix2::new(ONE, ZERO, ZERO, -ONE)
}

/// Rotation `exp(−i θ n·σ / 2)` about an in-plane axis.
fn rotation(axis: Axis, angle: f64) -> Matrix2<C> {
    let generator = match axis {
        Axis::X => pauli_x(),
        Axis::Y => pauli_y(),
    };
    let c = C::new((0.5 * angle).cos(), 0.0);
    let s = C::new(0.0, -(0.5 * angle).sin());
    Matrix2::identity() * c + generator * s
}

/// Free precession `exp(−i θ σ_z / 2)`.
fn z_rotation(angle: f64) -> Matrix2<C> {
    let h = 0.5 * angle;
    Matrix2::new(C::from_polar(1.0, -h), ZERO, ZERO, C::from_polar(1.0, h))
}

/// Spin density matrix `ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState(Matrix2<C>);

impl SpinState {
    pub fn matrix(&self) -> &Matrix2<C> {
        &self.0
    }

    pub fn trace(&self) -> C {
        self.0.trace()
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    /// Largest deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of the (Hermitian) state, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.0[(0, 0)].re;
        let d = self.0[(1, 1)].re;
        let b = self.0[(0, 1)].norm();
        let mid = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mid - rad, mid + rad]
    }

    pub fn sigma_x(&self) -> f64 {
        (self.0 * pauli_x()).trace().re
    }

    pub fn sigma_y(&self) -> f64 {
        (self.0 * pauli_y()).trace().re
    }

    pub fn sigma_z(&self) -> f64 {
        (self.0 * pauli_z()).trace().re
    }

    fn conjugate(self, u: &Matrix2<C>) -> Self {
        SpinState(u * self.0 * u.adjoint())
    }

    pub fn rotate(self, axis: Axis, angle: f64) -> Self {
        self.conjugate(&rotation(axis, angle))
    }

    pub fn precess(self, angle: f64) -> Self {
        self.conjugate(&z_rotation(angle))
    }

    /// Scales the off-diagonal elements by `factor`.
    pub fn dephase(self, factor: f64) -> Self {
        let mut m = self.0;
        m[(0, 1)] *= factor;
        m[(1, 0)] *= factor;
        SpinState(m)
    }
}

/// Optically pumped state `ρ = |0⟩⟨0| = ½(1 + σ_z)`.
pub fn initialize() -> SpinState {
    SpinState(Matrix2::new(ONE, ZERO, ZERO, ZERO))
}

/// Ideal π/2 pulse about `axis`.
pub fn apply_half_pi(state: SpinState, axis: Axis) -> SpinState {
    state.rotate(axis, FRAC_PI_2)
}

/// Ideal 3π/2 pulse about `axis`, the common-mode partner of the π/2 readout.
pub fn apply_three_half_pi(state: SpinState, axis: Axis) -> SpinState {
    state.rotate(axis, 3.0 * FRAC_PI_2)
}

/// Photon-count operator `M = a|0⟩⟨0| + b|1⟩⟨1|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementOperator {
    pub bright: f64,
    pub dark: f64,
}

impl From<PhotonRates> for MeasurementOperator {
    fn from(r: PhotonRates) -> Self {
        Self {
            bright: r.r0,
            dark: r.r1,
        }
    }
}

impl MeasurementOperator {
    pub fn expectation(&self, state: &SpinState) -> f64 {
        self.bright * state.0[(0, 0)].re + self.dark * state.0[(1, 1)].re
    }
}

/// Propagates an equatorial state through the π-pulse train.
pub fn evolve_through_sequence(
    state: SpinState,
    field: &AcField,
    seq: &DecouplingSequence,
    gamma_e: f64,
    coherence: &CoherenceEnvelope,
) -> SpinState {
    let omega = 2.0 * PI * field.frequency();
    let phase = field.total_phase();
    let amp = gamma_e * field.amplitude() / omega;
    let accrued = |a: f64, b: f64| amp * ((omega * b + phase).sin() - (omega * a + phase).sin());

    let segments = seq.free_segments();
    let mut rho = state;
    for (seg, pulse) in segments.iter().zip(seq.pulses()) {
        rho = rho
            .precess(accrued(seg.start, seg.end))
            .rotate(pulse.axis, PI);
    }
    let last = segments.last().expect("timeline has a final segment");
    rho = rho.precess(accrued(last.start, last.end));
    rho.dephase(coherence.attenuation(seq.free_precession_time()))
}

/// `⟨M⟩ = Tr(M ρ)` for the state after the final π/2 pulse.
pub fn measure_expectation(state: &SpinState, rates: PhotonRates) -> f64 {
    MeasurementOperator::from(rates).expectation(state)
}

/// Expected photon counts of both common-mode branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutPair {
    /// Final π/2 pulse.
    pub branch_a: f64,
    /// Final 3π/2 pulse.
    pub branch_b: f64,
}

impl ReadoutPair {
    /// `(A − B)/(A + B)`.
    pub fn normalized_signal(&self) -> f64 {
        (self.branch_a - self.branch_b) / (self.branch_a + self.branch_b)
    }
}

/// Full cycle: pump, `(π/2)_X`, pulse train, then `(π/2)` and `(3π/2)` about
/// the readout axis (`Y` for quadrature, `X` in phase).
pub fn simulate_readout(
    field: &AcField,
    seq: &DecouplingSequence,
    sensor: &SensorEnsemble,
) -> Result<ReadoutPair> {
    let lookup = sensor.coherence_for(seq.n_pulses())?;
    let rates = sensor.rates_for(seq.n_pulses());
    let prepared = apply_half_pi(initialize(), Axis::X);
    let evolved = evolve_through_sequence(prepared, field, seq, sensor.gamma_e(), &lookup.envelope);
    let axis = match seq.readout() {
        Readout::Quadrature => Axis::Y,
        Readout::InPhase => Axis::X,
    };
    Ok(ReadoutPair {
        branch_a: measure_expectation(&apply_half_pi(evolved, axis), rates),
        branch_b: measure_expectation(&apply_three_half_pi(evolved, axis), rates),
    })
}

/// Normalized differential signal from the density-matrix pipeline.
pub fn pipeline_signal(
    field: &AcField,
    seq: &DecouplingSequence,
    sensor: &SensorEnsemble,
) -> Result<f64> {
    simulate_readout(field, seq, sensor).map(|p| p.normalized_signal())
}
