//! Phase accumulated by the spin under a CP-type pulse train.
//!
//! With `x = π f τ(1+α)` and `c_α = cos(α π f τ)` the closed form is
//!
//! ```text
//! Φ = γ B cos(N x + φ) · [sin(N x) − c_α sin(N x)/cos x] / (π f)
//! ```
//!
//! which is `Nτ(1+α)·{1 − c_α/cos x}·sin(Nx)/(Nx)` rearranged. When `cos x`
//! vanishes (resonance) the ratio `sin(Nx)/cos x` is a removable `0/0` for
//! even `N` and tends to `−(−1)^(N/2 + m)·N` at `x = (m + ½)π`. For odd `N`
//! the expression is only an approximation and has a true pole there.
//!
//! Every function takes the gyromagnetic ratio explicitly; it is a property
//! of the sensor, not of the field or the sequence.

mod quadrature;

use std::f64::consts::{FRAC_2_PI, PI};

pub use quadrature::quadrature_phase_oracle;

use crate::error::{Error, Result};
use crate::model::{AcField, Axis, DecouplingSequence, RESONANCE_EPS};

/// Phase and its sensitivity to the field phase at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseResult {
    pub phi: f64,
    /// The analytic limit branch was used.
    pub at_resonance: bool,
    pub dphi_dphase: f64,
    /// False for odd `N`, where the closed form is not the exact integral.
    pub exact_formula: bool,
}

/// `|cos(π f τ(1+α))|`, zero exactly on resonance.
pub fn resonance_residual(frequency: f64, seq: &DecouplingSequence) -> f64 {
    (PI * frequency * seq.period()).cos().abs()
}

pub fn is_resonant(frequency: f64, seq: &DecouplingSequence) -> bool {
    resonance_residual(frequency, seq) < RESONANCE_EPS
}

/// φ-independent factor `K` of the closed form, `Φ = γB cos(Nx + φ)·K`.
fn kernel(frequency: f64, seq: &DecouplingSequence) -> Result<(f64, bool)> {
    let f = frequency;
    let n = seq.n_pulses();
    let nf = f64::from(n);
    let x = PI * f * seq.period();
    let cos_x = x.cos();
    let c_alpha = (seq.alpha() * PI * f * seq.tau()).cos();
    let sin_nx = (nf * x).sin();

    if cos_x.abs() < RESONANCE_EPS {
        if n % 2 == 1 {
            return Err(Error::OddPulseCountAtResonance(n));
        }
        let m = (f * seq.period() - 0.5).round() as i64;
        let sign = if (i64::from(n / 2) + m).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        let ratio = -sign * nf;
        return Ok(((sin_nx - c_alpha * ratio) / (PI * f), true));
    }
    Ok(((sin_nx - c_alpha * sin_nx / cos_x) / (PI * f), false))
}

/// Φ together with `∂Φ/∂φ_ac` and branch flags.
pub fn phase(field: &AcField, seq: &DecouplingSequence, gamma_e: f64) -> Result<PhaseResult> {
    let (k, at_resonance) = kernel(field.frequency(), seq)?;
    let gb = gamma_e * field.amplitude();
    let arg = PI * field.frequency() * seq.total_time() + field.total_phase();
    Ok(PhaseResult {
        phi: gb * arg.cos() * k,
        at_resonance,
        dphi_dphase: -gb * arg.sin() * k,
        exact_formula: seq.n_pulses().is_multiple_of(2),
    })
}

/// Accumulated phase Φ in radians, using the field's total phase `φ + Δφ`.
pub fn closed_form_phase(field: &AcField, seq: &DecouplingSequence, gamma_e: f64) -> Result<f64> {
    phase(field, seq, gamma_e).map(|p| p.phi)
}

/// Exact `∂Φ/∂φ_ac` of the closed form. Only the leading
/// `cos(π f Nτ(1+α) + φ)` factor depends on the field phase.
pub fn phase_derivative(field: &AcField, seq: &DecouplingSequence, gamma_e: f64) -> Result<f64> {
    phase(field, seq, gamma_e).map(|p| p.dphi_dphase)
}

/// Approximate resonant slope `(−1)^(N+1)·(2/π)·γ B Nτ(1+α)`.
///
/// This omits the `cos(α π f τ)` factor of the exact limit; see
/// [`finite_width_factor`] for the gap.
pub fn resonant_slope_approx(
    field: &AcField,
    seq: &DecouplingSequence,
    gamma_e: f64,
) -> Result<f64> {
    let residual = resonance_residual(field.frequency(), seq);
    if residual >= RESONANCE_EPS {
        return Err(Error::OffResonance { residual });
    }
    let sign = if seq.n_pulses() % 2 == 1 { 1.0 } else { -1.0 };
    Ok(sign * FRAC_2_PI * gamma_e * field.amplitude() * seq.total_time())
}

/// `cos(α π f τ)`, the ratio between the exact resonant slope and the
/// approximate one.
pub fn finite_width_factor(frequency: f64, seq: &DecouplingSequence) -> f64 {
    (seq.alpha() * PI * frequency * seq.tau()).cos()
}

/// Sign of the toggling-frame modulation at time `t`: `+1` before the first
/// π pulse, flipped by each pulse, and `0` inside a pulse window.
pub fn modulation_function(seq: &DecouplingSequence, t: f64) -> Result<i8> {
    let total = seq.total_time();
    if !(0.0..=total).contains(&t) {
        return Err(Error::TimeOutOfRange { t, total });
    }
    let mut sign = 1i8;
    for pulse in seq.pulses() {
        if t < pulse.start() {
            return Ok(sign);
        }
        if t <= pulse.end() && pulse.width > 0.0 {
            return Ok(0);
        }
        sign = -sign;
    }
    Ok(sign)
}

/// Number of π pulses about `axis`.
pub fn axis_count(seq: &DecouplingSequence, axis: Axis) -> u32 {
    match axis {
        Axis::X => seq.n_x(),
        Axis::Y => seq.n_y(),
    }
}
