//! Observable magnetometry signal and the shot-noise figures derived from it.
//!
//! The quadrature-readout signal is
//! `S = (−1)^(n_y+1)·(1−r)/(1+r)·exp(−D)·sin Φ` with `D = (Nτ/T2)^p`.
//! With an in-phase readout the final π/2 pulse shares the axis of the first
//! one and the signal is `(−1)^(n_x+1)·(1−r)/(1+r)·exp(−D)·cos Φ` instead.
//!
//! Photon-unit quantities (variance, SNR) are per NV centre and per
//! measurement; ensemble and repetition counts enter as `sqrt(N_m N_nv)`.

use std::f64::consts::{E, FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::model::{
    AcField, DecouplingSequence, PhotonRates, Readout, SensorEnsemble, SignalPoint,
};
use crate::phase::{self, resonance_residual};
use crate::RESONANCE_EPS;

fn parity_sign(count: u32) -> f64 {
    if count.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `exp(−D)` for this sequence on this sensor.
pub fn attenuation(seq: &DecouplingSequence, sensor: &SensorEnsemble) -> Result<f64> {
    let lookup = sensor.coherence_for(seq.n_pulses())?;
    Ok(lookup.envelope.attenuation(seq.free_precession_time()))
}

/// Readout-parity sign: `(−1)^(n_y+1)` for quadrature, `(−1)^(n_x+1)` in phase.
pub fn readout_sign(seq: &DecouplingSequence) -> f64 {
    match seq.readout() {
        Readout::Quadrature => -parity_sign(seq.n_y()),
        Readout::InPhase => -parity_sign(seq.n_x()),
    }
}

/// `(−1)^(n_y+1)·(1−r)/(1+r)·exp(−D)`, the factor between `sin Φ` and `S`.
pub fn signal_prefactor(seq: &DecouplingSequence, sensor: &SensorEnsemble) -> Result<f64> {
    let rates = sensor.rates_for(seq.n_pulses());
    Ok(readout_sign(seq) * rates.visibility() * attenuation(seq, sensor)?)
}

/// Ideal spin polarisation `⟨σ_z⟩` before optical readout, i.e. the signal
/// without the photon visibility.
pub fn polarization(
    field: &AcField,
    seq: &DecouplingSequence,
    sensor: &SensorEnsemble,
) -> Result<f64> {
    let phi = phase::closed_form_phase(field, seq, sensor.gamma_e())?;
    Ok(readout_sign(seq) * attenuation(seq, sensor)? * readout_projection(seq.readout(), phi))
}

fn readout_projection(readout: Readout, phi: f64) -> f64 {
    match readout {
        Readout::Quadrature => phi.sin(),
        Readout::InPhase => phi.cos(),
    }
}

/// Normalized magnetometry signal `S`.
pub fn expected_signal(
    field: &AcField,
    seq: &DecouplingSequence,
    sensor: &SensorEnsemble,
) -> Result<f64> {
    let phi = phase::closed_form_phase(field, seq, sensor.gamma_e())?;
    Ok(signal_prefactor(seq, sensor)? * readout_projection(seq.readout(), phi))
}

/// First-order deviation `ΔS = prefactor·Δφ·cos Φ·∂Φ/∂φ_ac` (quadrature readout).
pub fn signal_deviation_linear(
    field: &AcField,
    seq: &DecouplingSequence,
    sensor: &SensorEnsemble,
    dphi: f64,
) -> Result<f64> {
    Ok(signal_prefactor(seq, sensor)? * raw_deviation_linear(field, seq, sensor.gamma_e(), dphi)?)
}

/// `S(φ + Δφ) − S(φ)` with the full prefactor.
pub fn signal_deviation_exact(
    field: &AcField,
    seq: &DecouplingSequence,
    sensor: &SensorEnsemble,
    dphi: f64,
) -> Result<f64> {
    let shifted = field.with_phase_shift(field.phase_shift() + dphi)?;
    Ok(expected_signal(&shifted, seq, sensor)? - expected_signal(field, seq, sensor)?)
}

/// Signed un-prefactored linear deviation `Δφ·cos Φ·∂Φ/∂φ_ac`.
pub fn raw_deviation_linear(
    field: &AcField,
    seq: &DecouplingSequence,
    gamma_e: f64,
    dphi: f64,
) -> Result<f64> {
    let p = phase::phase(field, seq, gamma_e)?;
    Ok(dphi * p.phi.cos() * p.dphi_dphase)
}

/// `|sin Φ(φ + Δφ) − sin Φ(φ)|`, the deviation with unit prefactor.
pub fn raw_deviation_exact(
    field: &AcField,
    seq: &DecouplingSequence,
    gamma_e: f64,
    dphi: f64,
) -> Result<f64> {
    let shifted = field.with_phase_shift(field.phase_shift() + dphi)?;
    let a = phase::closed_form_phase(&shifted, seq, gamma_e)?;
    let b = phase::closed_form_phase(field, seq, gamma_e)?;
    Ok((a.sin() - b.sin()).abs())
}

/// `|Δφ·(2/π)·γ B Nτ(1+α)|`, the resonant linear deviation with unit
/// prefactor built on the approximate slope. Crosses 1 at `Δφ_L`.
pub fn raw_deviation_linear_approx(
    field: &AcField,
    seq: &DecouplingSequence,
    gamma_e: f64,
    dphi: f64,
) -> Result<f64> {
    Ok((dphi * phase::resonant_slope_approx(field, seq, gamma_e)?).abs())
}

/// Variance of the single-NV measurement operator,
/// `(r0+r1)/2 + s·(r0−r1)/2·e^(−D)·sin Φ + (r0−r1)²/4·[1 − e^(−2D) sin²Φ]`.
pub fn measurement_variance(
    field: &AcField,
    seq: &DecouplingSequence,
    sensor: &SensorEnsemble,
) -> Result<f64> {
    let rates = sensor.rates_for(seq.n_pulses());
    let z = polarization(field, seq, sensor)?;
    Ok(variance_from_polarization(rates, z))
}

/// Operator variance for polarisation `z = ⟨σ_z⟩`:
/// `(r0+r1)/2 + z·(r0−r1)/2 + (r0−r1)²/4·(1 − z²)`.
pub fn variance_from_polarization(rates: PhotonRates, z: f64) -> f64 {
    let half = rates.half_difference();
    rates.mean() + z * half + half * half * (1.0 - z * z)
}

/// Both shot-noise SNR expressions for a phase shift `dphi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snr {
    /// `sqrt(N_m N_nv)·|ΔS|/sqrt(ΔM²)` with `ΔS` in photon units.
    pub full: f64,
    /// `sqrt(N_m N_nv)·C·e^(−D)·|cos Φ·∂Φ/∂φ|·|Δφ|`, valid for `Nτ ~ T2`.
    pub approx: f64,
}

pub fn snr(
    field: &AcField,
    seq: &DecouplingSequence,
    sensor: &SensorEnsemble,
    dphi: f64,
    n_measurements: u64,
) -> Result<Snr> {
    if n_measurements == 0 {
        return Err(Error::invalid("n_measurements", "must be at least 1"));
    }
    let rates = sensor.rates_for(seq.n_pulses());
    let att = attenuation(seq, sensor)?;
    let raw = raw_deviation_linear(field, seq, sensor.gamma_e(), dphi)?;
    let scale = (n_measurements as f64 * sensor.n_nv()).sqrt();
    let delta_photons = rates.half_difference() * att * raw.abs();
    let variance = measurement_variance(field, seq, sensor)?;
    Ok(Snr {
        full: scale * delta_photons / variance.sqrt(),
        approx: scale * rates.contrast()? * att * raw.abs(),
    })
}

/// Phase sensitivity `η_φ = π e / (2 C γ B sqrt(T2) sqrt(N_nv))` in rad/√Hz.
pub fn phase_sensitivity_from(
    contrast: f64,
    gamma_e: f64,
    n_nv: f64,
    amplitude: f64,
    t2: f64,
) -> Result<f64> {
    if amplitude == 0.0 {
        return Err(Error::ZeroAmplitude);
    }
    if !(contrast > 0.0 && t2 > 0.0 && n_nv > 0.0 && gamma_e > 0.0) {
        return Err(Error::invalid(
            "sensor",
            "contrast, T2, N_nv and gamma_e must be positive",
        ));
    }
    Ok(PI * E / (2.0 * contrast * gamma_e * amplitude.abs() * t2.sqrt()) / n_nv.sqrt())
}

/// `η_φ` for the sensor's own contrast and its `T2` at `n_pulses`.
pub fn phase_sensitivity(sensor: &SensorEnsemble, amplitude: f64, n_pulses: u32) -> Result<f64> {
    let t2 = sensor.coherence_for(n_pulses)?.envelope.t2;
    phase_sensitivity_from(
        sensor.contrast(),
        sensor.gamma_e(),
        sensor.n_nv(),
        amplitude,
        t2,
    )
}

/// Minimum detectable phase shift after total measurement time `total_time`.
pub fn min_detectable_phase(eta_phi: f64, total_time: f64) -> Result<f64> {
    if total_time.is_nan() || total_time <= 0.0 {
        return Err(Error::invalid("total_time", "must be > 0"));
    }
    Ok(eta_phi / total_time.sqrt())
}

/// Upper limit `Δφ_L = (π/2)/(γ B Nτ(1+α))` of the linear regime.
pub fn phase_shift_limit(field: &AcField, seq: &DecouplingSequence, gamma_e: f64) -> Result<f64> {
    let residual = resonance_residual(field.frequency(), seq);
    if residual >= RESONANCE_EPS {
        return Err(Error::OffResonance { residual });
    }
    if field.amplitude() == 0.0 {
        return Err(Error::ZeroAmplitude);
    }
    Ok(FRAC_PI_2 / (gamma_e * field.amplitude() * seq.total_time()))
}

/// All signal-layer outputs at one operating point.
pub fn signal_point(
    field: &AcField,
    seq: &DecouplingSequence,
    sensor: &SensorEnsemble,
    dphi: f64,
    n_measurements: u64,
) -> Result<SignalPoint> {
    Ok(SignalPoint {
        free_precession_time: seq.free_precession_time(),
        phi: phase::closed_form_phase(field, seq, sensor.gamma_e())?,
        signal: expected_signal(field, seq, sensor)?,
        deviation_linear: signal_deviation_linear(field, seq, sensor, dphi)?,
        deviation_exact: signal_deviation_exact(field, seq, sensor, dphi)?,
        variance: measurement_variance(field, seq, sensor)?,
        snr: snr(field, seq, sensor, dphi, n_measurements)?.full,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_sequence, resonance_tau, Family, GAMMA_E};
    use approx::assert_relative_eq;

    fn reference_xy8() -> DecouplingSequence {
        let tau = resonance_tau(200e3, 124e-9).unwrap();
        build_sequence(Family::Xy8, 1, tau, 124e-9).unwrap()
    }

    fn field(b: f64, phi: f64) -> AcField {
        AcField::new(b, 200e3, phi).unwrap()
    }

    #[test]
    fn signal_vanishes_at_non_accumulation_point() {
        let s = expected_signal(
            &field(0.74e-6, FRAC_PI_2),
            &reference_xy8(),
            &SensorEnsemble::default(),
        )
        .unwrap();
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn zero_field_zero_signal() {
        let sensor = SensorEnsemble::default();
        let seq = build_sequence(Family::Xy4, 1, 3e-6, 1e-7).unwrap();
        assert_eq!(
            expected_signal(&field(0.0, 0.7), &seq, &sensor).unwrap(),
            0.0
        );
    }

    #[test]
    fn reference_accumulation_signal() {
        let sensor = SensorEnsemble::default();
        let s = expected_signal(&field(0.74e-6, 0.0), &reference_xy8(), &sensor).unwrap();
        // hand arithmetic: −(0.083/1.917)·exp(−(19.008/140)^0.97)·sin(1.6541)
        let by_hand = -(0.083 / 1.917) * (-(19.008f64 / 140.0).powf(0.97)).exp() * 1.654_1f64.sin();
        assert_relative_eq!(s, by_hand, max_relative = 1e-4);
        assert!((s + 0.037).abs() < 5e-4, "S = {s}");
    }

    #[test]
    fn missing_coherence_is_reported() {
        let sensor = SensorEnsemble::default().without_coherence();
        assert!(matches!(
            expected_signal(&field(1e-6, 0.0), &reference_xy8(), &sensor),
            Err(Error::MissingCoherence(8))
        ));
    }

    #[test]
    fn linear_deviation_reference_point() {
        let sensor = SensorEnsemble::default();
        let f = field(0.74e-6, FRAC_PI_2);
        let dphi = 0.01 * PI;
        let lin = signal_deviation_linear(&f, &reference_xy8(), &sensor, dphi).unwrap();
        let exact = signal_deviation_exact(&f, &reference_xy8(), &sensor, dphi).unwrap();
        assert!((lin - 1.95e-3).abs() < 0.02e-3, "lin = {lin}");
        assert_relative_eq!(lin, exact, max_relative = 2e-3);
        assert_eq!(
            signal_deviation_linear(&f, &reference_xy8(), &sensor, 0.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn linear_over_exact_tends_to_one() {
        let sensor = SensorEnsemble::default();
        let seq = build_sequence(Family::Xy8, 1, 2.1e-6, 124e-9).unwrap();
        let f = field(0.9e-6, 1.1);
        let dphi = 1e-4;
        let lin = signal_deviation_linear(&f, &seq, &sensor, dphi).unwrap();
        let exact = signal_deviation_exact(&f, &seq, &sensor, dphi).unwrap();
        assert!((lin / exact - 1.0).abs() < 1e-3);
    }

    #[test]
    fn raw_exact_deviation_is_bounded() {
        let seq = reference_xy8();
        for k in 0..40 {
            let d = raw_deviation_exact(&field(5e-6, 0.3), &seq, GAMMA_E, -3.0 + 0.15 * k as f64)
                .unwrap();
            assert!(d <= 2.0);
        }
    }

    #[test]
    fn limit_intersects_unit_deviation() {
        let seq = build_sequence(
            Family::Xy8,
            1,
            resonance_tau(200e3, 124e-9).unwrap(),
            124e-9,
        )
        .unwrap();
        let f = field(0.7e-6, FRAC_PI_2);
        let limit = phase_shift_limit(&f, &seq, GAMMA_E).unwrap();
        assert!((limit - 0.637).abs() < 1e-3, "limit = {limit}");
        let at_limit = raw_deviation_linear_approx(&f, &seq, GAMMA_E, limit).unwrap();
        assert_relative_eq!(at_limit, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn limit_scaling_and_errors() {
        let tau = resonance_tau(200e3, 124e-9).unwrap();
        let x4 = build_sequence(Family::Xy4, 1, tau, 124e-9).unwrap();
        let x8 = build_sequence(Family::Xy8, 1, tau, 124e-9).unwrap();
        let l4 = phase_shift_limit(&field(0.7e-6, 0.0), &x4, GAMMA_E).unwrap();
        let l8 = phase_shift_limit(&field(0.7e-6, 0.0), &x8, GAMMA_E).unwrap();
        assert_relative_eq!(l8, 0.5 * l4, max_relative = 1e-14);
        let l8b = phase_shift_limit(&field(1.4e-6, 0.0), &x8, GAMMA_E).unwrap();
        assert_relative_eq!(l8b, 0.5 * l8, max_relative = 1e-14);
        assert!(matches!(
            phase_shift_limit(&field(0.0, 0.0), &x8, GAMMA_E),
            Err(Error::ZeroAmplitude)
        ));
    }

    #[test]
    fn variance_limits() {
        // r0 = r1: pure Poisson
        let rates = PhotonRates { r0: 0.4, r1: 0.4 };
        assert_relative_eq!(
            variance_from_polarization(rates, 0.3),
            0.4,
            max_relative = 1e-15
        );
        // full decoherence: z = 0
        let rates = PhotonRates { r0: 0.50, r1: 0.46 };
        assert_relative_eq!(
            variance_from_polarization(rates, 0.0),
            0.4804,
            max_relative = 1e-14
        );
        // Φ = 0: the middle term vanishes
        let sensor = SensorEnsemble::default();
        let v =
            measurement_variance(&field(0.74e-6, FRAC_PI_2), &reference_xy8(), &sensor).unwrap();
        let r = sensor.rates_for(8);
        assert_relative_eq!(
            v,
            r.mean() + r.half_difference().powi(2),
            max_relative = 1e-12
        );
    }

    #[test]
    fn snr_properties() {
        let sensor = SensorEnsemble::default();
        let f = field(0.74e-6, FRAC_PI_2);
        let seq = reference_xy8();
        assert_eq!(snr(&f, &seq, &sensor, 0.0, 100).unwrap().full, 0.0);
        let a = snr(&f, &seq, &sensor, 0.01, 1000).unwrap();
        let b = snr(&f, &seq, &sensor, 0.01, 4000).unwrap();
        assert_relative_eq!(b.full, 2.0 * a.full, max_relative = 1e-12);
        assert_relative_eq!(b.approx, 2.0 * a.approx, max_relative = 1e-12);
        assert!(snr(&f, &seq, &sensor, 0.01, 0).is_err());
    }

    #[test]
    fn snr_forms_agree_at_t2() {
        // XY8-1 with Nτ = T2(8), off the non-accumulation point
        let sensor = SensorEnsemble::default();
        let seq = build_sequence(Family::Xy8, 1, 140e-6 / 8.0, 124e-9).unwrap();
        for phi in [0.0, 0.4, 1.0, 2.5] {
            let s = snr(&field(0.2e-6, phi), &seq, &sensor, 0.01, 10_000).unwrap();
            if s.full > 0.0 {
                assert!((s.approx / s.full - 1.0).abs() < 0.10, "phi {phi}: {s:?}");
            }
        }
    }

    #[test]
    fn sensitivity_reference_value() {
        let eta = phase_sensitivity_from(0.03, GAMMA_E, 60.0, 1e-6, 1e-3).unwrap();
        let by_hand = PI * E / (2.0 * 0.03 * GAMMA_E * 1e-6 * 1e-3f64.sqrt() * 60f64.sqrt());
        assert_relative_eq!(eta, by_hand, max_relative = 1e-14);
        assert!((eta - 3.3e-3).abs() < 0.033e-3);
        let eta2 = phase_sensitivity_from(0.03, GAMMA_E, 60.0, 2e-6, 1e-3).unwrap();
        assert_relative_eq!(eta2, 0.5 * eta, max_relative = 1e-14);
        assert_eq!(min_detectable_phase(eta, 1.0).unwrap(), eta);
        assert!(matches!(
            phase_sensitivity_from(0.03, GAMMA_E, 60.0, 0.0, 1e-3),
            Err(Error::ZeroAmplitude)
        ));
    }

    #[test]
    fn in_phase_readout_tracks_cosine() {
        let sensor = SensorEnsemble::default();
        let seq = build_sequence(Family::Cpmg, 32, 5e-6, 0.0)
            .unwrap()
            .with_readout(Readout::InPhase);
        let s = expected_signal(&field(0.0, 0.0), &seq, &sensor).unwrap();
        let env = sensor.coherence_for(32).unwrap().envelope;
        assert_relative_eq!(
            s,
            -sensor.rates().visibility() * env.attenuation(160e-6),
            max_relative = 1e-12
        );
    }

    proptest::proptest! {
        #[test]
        fn signal_bounded_by_visibility(b in 0.0f64..5e-6, phi in 0.0f64..6.3, tau in 0.3e-6f64..20e-6,
                                        fam in 0usize..3) {
            let family = [Family::Cpmg, Family::Xy4, Family::Xy8][fam];
            let sensor = SensorEnsemble::default();
            let seq = build_sequence(family, 2, tau, 0.1e-6).unwrap();
            if let Ok(s) = expected_signal(&field(b, phi), &seq, &sensor) {
                let vis = sensor.rates_for(seq.n_pulses()).visibility();
                proptest::prop_assert!(s.abs() <= vis + 1e-15);
                proptest::prop_assert!(vis < 1.0);
            }
        }

        #[test]
        fn variance_nonnegative(r0 in 0.01f64..10.0, a in 0.0f64..0.999, z in -1.0f64..1.0) {
            let rates = PhotonRates { r0, r1: a * r0 };
            proptest::prop_assert!(variance_from_polarization(rates, z) >= 0.0);
        }
    }
}
