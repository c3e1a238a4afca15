//! Domain types shared by every layer: the AC field, the decoupling sequence
//! and its pulse timeline, the sensor ensemble, and the result records.
//!
//! Everything is SI internally (tesla, seconds, hertz, radians).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Free-electron gyromagnetic ratio, rad s⁻¹ T⁻¹.
pub const GAMMA_E: f64 = 1.760_859_644e11;

/// Band on `|cos(π f τ(1+α))|` inside which the removable-singularity limit
/// replaces the direct closed form.
pub const RESONANCE_EPS: f64 = 1e-9;

/// Sinusoidal field `B(t) = B_ac cos(2π f t + φ + Δφ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcField {
    amplitude: f64,
    frequency: f64,
    initial_phase: f64,
    phase_shift: f64,
}

impl AcField {
    pub fn new(amplitude: f64, frequency: f64, initial_phase: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::invalid(
                "amplitude",
                format!("{amplitude} must be finite and >= 0"),
            ));
        }
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(Error::invalid(
                "frequency",
                format!("{frequency} must be finite and > 0"),
            ));
        }
        if !initial_phase.is_finite() {
            return Err(Error::invalid("initial_phase", "must be finite"));
        }
        Ok(Self {
            amplitude,
            frequency,
            initial_phase,
            phase_shift: 0.0,
        })
    }

    pub fn with_phase_shift(self, phase_shift: f64) -> Result<Self> {
        if !phase_shift.is_finite() {
            return Err(Error::invalid("phase_shift", "must be finite"));
        }
        Ok(Self {
            phase_shift,
            ..self
        })
    }

    pub fn with_amplitude(self, amplitude: f64) -> Result<Self> {
        Self::new(amplitude, self.frequency, self.initial_phase)?.with_phase_shift(self.phase_shift)
    }

    pub fn with_initial_phase(self, initial_phase: f64) -> Result<Self> {
        Self::new(self.amplitude, self.frequency, initial_phase)?.with_phase_shift(self.phase_shift)
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn initial_phase(&self) -> f64 {
        self.initial_phase
    }

    pub fn phase_shift(&self) -> f64 {
        self.phase_shift
    }

    /// `φ_ac + Δφ_ac`, the phase the field actually has at sequence start.
    pub fn total_phase(&self) -> f64 {
        self.initial_phase + self.phase_shift
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.amplitude * (2.0 * PI * self.frequency * t + self.total_phase()).cos()
    }
}

/// Rotation axis of a microwave pulse in the rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Hahn,
    Cpmg,
    Xy4,
    Xy8,
}

impl Family {
    /// Repeating unit of π-pulse axes.
    pub fn unit(self) -> &'static [Axis] {
        use Axis::{X, Y};
        match self {
            Family::Hahn => &[X],
            Family::Cpmg => &[Y],
            Family::Xy4 => &[X, Y, X, Y],
            Family::Xy8 => &[X, Y, X, Y, Y, X, Y, X],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Hahn => "hahn",
            Family::Cpmg => "cpmg",
            Family::Xy4 => "xy4",
            Family::Xy8 => "xy8",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hahn" | "hahn-echo" => Ok(Family::Hahn),
            "cpmg" => Ok(Family::Cpmg),
            "xy4" => Ok(Family::Xy4),
            "xy8" => Ok(Family::Xy8),
            other => Err(Error::invalid(
                "family",
                format!("unknown sequence family `{other}`"),
            )),
        }
    }
}

/// Phase relation between the first and the last π/2 pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Readout {
    InPhase,
    #[default]
    Quadrature,
}

/// A rectangular π pulse on the sequence timeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub center: f64,
    pub width: f64,
    pub axis: Axis,
}

impl Pulse {
    pub fn start(&self) -> f64 {
        self.center - 0.5 * self.width
    }

    pub fn end(&self) -> f64 {
        self.center + 0.5 * self.width
    }
}

/// Free-precession interval with constant modulation sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub sign: f64,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Multiple-pulse decoupling sequence between the two π/2 pulses.
///
/// Pulse `k` (1-based) is centred at `(k − ½)·τ(1+α)`, so the train spans
/// `T = Nτ(1+α)` with half a period of free evolution at each end.
#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingSequence {
    family: Family,
    repetitions: u32,
    tau: f64,
    pi_width: f64,
    pattern: Vec<Axis>,
    readout: Readout,
}

impl DecouplingSequence {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn repetitions(&self) -> u32 {
        self.repetitions
    }

    pub fn n_pulses(&self) -> u32 {
        self.pattern.len() as u32
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn pi_width(&self) -> f64 {
        self.pi_width
    }

    pub fn pattern(&self) -> &[Axis] {
        &self.pattern
    }

    pub fn readout(&self) -> Readout {
        self.readout
    }

    /// `α = τ_π / τ`.
    pub fn alpha(&self) -> f64 {
        self.pi_width / self.tau
    }

    pub fn n_y(&self) -> u32 {
        self.pattern.iter().filter(|a| **a == Axis::Y).count() as u32
    }

    pub fn n_x(&self) -> u32 {
        self.n_pulses() - self.n_y()
    }

    /// Pulse-to-pulse period `τ(1+α) = τ + τ_π`.
    pub fn period(&self) -> f64 {
        self.tau + self.pi_width
    }

    /// Free precession time `Nτ`, the abscissa of the sweeps.
    pub fn free_precession_time(&self) -> f64 {
        f64::from(self.n_pulses()) * self.tau
    }

    /// Total evolution time `T = Nτ(1+α)`.
    pub fn total_time(&self) -> f64 {
        f64::from(self.n_pulses()) * self.period()
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        validate_timing(tau, self.pi_width)?;
        Ok(Self {
            tau,
            ..self.clone()
        })
    }

    pub fn with_readout(&self, readout: Readout) -> Self {
        Self {
            readout,
            ..self.clone()
        }
    }

    pub fn pulses(&self) -> impl Iterator<Item = Pulse> + '_ {
        let period = self.period();
        self.pattern
            .iter()
            .enumerate()
            .map(move |(k, &axis)| Pulse {
                center: (k as f64 + 0.5) * period,
                width: self.pi_width,
                axis,
            })
    }

    /// Free-evolution segments in time order. Segment `k` follows `k` π pulses
    /// and carries sign `(−1)^k`.
    pub fn free_segments(&self) -> Vec<Segment> {
        let n = self.pattern.len();
        let total = self.total_time();
        let mut out = Vec::with_capacity(n + 1);
        let mut start = 0.0;
        let mut sign = 1.0;
        for pulse in self.pulses() {
            out.push(Segment {
                start,
                end: pulse.start(),
                sign,
            });
            start = pulse.end();
            sign = -sign;
        }
        out.push(Segment {
            start,
            end: total,
            sign,
        });
        out
    }
}

fn validate_timing(tau: f64, pi_width: f64) -> Result<()> {
    if !(pi_width.is_finite() && pi_width >= 0.0) {
        return Err(Error::invalid(
            "pi_width",
            format!("{pi_width} must be finite and >= 0"),
        ));
    }
    if !(tau.is_finite() && tau > pi_width) {
        return Err(Error::invalid(
            "tau",
            format!("{tau} must be finite and exceed the pi-pulse width {pi_width}"),
        ));
    }
    Ok(())
}

/// Builds `family-repetitions` with its literature phase pattern.
pub fn build_sequence(
    family: Family,
    repetitions: u32,
    tau: f64,
    pi_width: f64,
) -> Result<DecouplingSequence> {
    if repetitions == 0 {
        return Err(Error::invalid("repetitions", "must be at least 1"));
    }
    validate_timing(tau, pi_width)?;
    let unit = family.unit();
    let pattern = unit
        .iter()
        .copied()
        .cycle()
        .take(unit.len() * repetitions as usize)
        .collect();
    Ok(DecouplingSequence {
        family,
        repetitions,
        tau,
        pi_width,
        pattern,
        readout: Readout::Quadrature,
    })
}

/// Interval `τ` that puts the pulse period on the half period of the field:
/// `τ + τ_π = 1/(2 f_ac)`.
pub fn resonance_tau(frequency: f64, pi_width: f64) -> Result<f64> {
    if !(frequency.is_finite() && frequency > 0.0) {
        return Err(Error::invalid(
            "frequency",
            format!("{frequency} must be finite and > 0"),
        ));
    }
    if !(pi_width.is_finite() && pi_width >= 0.0) {
        return Err(Error::invalid(
            "pi_width",
            format!("{pi_width} must be finite and >= 0"),
        ));
    }
    let half_period = 0.5 / frequency;
    if half_period <= pi_width {
        return Err(Error::NoValidTau {
            half_period,
            pi_width,
        });
    }
    Ok(half_period - pi_width)
}

/// Shot-noise contrast `C = [1 + 2(r0 + r1)/(r0 − r1)²]^(−1/2)`.
pub fn contrast(r0: f64, r1: f64) -> Result<f64> {
    if !(r1.is_finite() && r1 >= 0.0) {
        return Err(Error::invalid(
            "r1",
            format!("{r1} must be finite and >= 0"),
        ));
    }
    if !r0.is_finite() {
        return Err(Error::invalid("r0", "must be finite"));
    }
    if r0 <= r1 {
        return Err(Error::ZeroContrast { r0, r1 });
    }
    let diff = r0 - r1;
    Ok((1.0 + 2.0 * (r0 + r1) / (diff * diff)).powf(-0.5))
}

/// Bright rate that realises a target contrast at a fixed dark/bright ratio.
pub fn bright_rate_for(contrast: f64, ratio: f64) -> Result<f64> {
    if !(contrast > 0.0 && contrast < 1.0) {
        return Err(Error::invalid(
            "contrast",
            format!("{contrast} must lie in (0, 1)"),
        ));
    }
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::invalid(
            "ratio",
            format!("{ratio} must lie in [0, 1)"),
        ));
    }
    let k = 1.0 / (contrast * contrast) - 1.0;
    Ok(2.0 * (1.0 + ratio) / (k * (1.0 - ratio).powi(2)))
}

/// Stretched-exponential coherence decay `exp[−(Nτ/T2)^p]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceEnvelope {
    pub t2: f64,
    pub p: f64,
}

impl CoherenceEnvelope {
    pub fn new(t2: f64, p: f64) -> Result<Self> {
        if !(t2.is_finite() && t2 > 0.0) {
            return Err(Error::invalid("t2", format!("{t2} must be finite and > 0")));
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::invalid("p", format!("{p} must be finite and > 0")));
        }
        Ok(Self { t2, p })
    }

    /// `D = (Nτ/T2)^p`.
    pub fn decay_exponent(&self, free_precession_time: f64) -> f64 {
        (free_precession_time.max(0.0) / self.t2).powf(self.p)
    }

    pub fn attenuation(&self, free_precession_time: f64) -> f64 {
        (-self.decay_exponent(free_precession_time)).exp()
    }
}

/// Measured coherence for one pulse count, optionally with the dark/bright
/// photon ratio recorded alongside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceEntry {
    pub envelope: CoherenceEnvelope,
    pub photon_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceLookup {
    pub envelope: CoherenceEnvelope,
    pub photon_ratio: Option<f64>,
    pub interpolated: bool,
}

/// Mean photons per readout for one NV: bright `r0`, dark `r1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonRates {
    pub r0: f64,
    pub r1: f64,
}

impl PhotonRates {
    pub fn ratio(&self) -> f64 {
        self.r1 / self.r0
    }

    pub fn mean(&self) -> f64 {
        0.5 * (self.r0 + self.r1)
    }

    pub fn half_difference(&self) -> f64 {
        0.5 * (self.r0 - self.r1)
    }

    /// Normalized readout visibility `(1 − r)/(1 + r)`.
    pub fn visibility(&self) -> f64 {
        (self.r0 - self.r1) / (self.r0 + self.r1)
    }

    pub fn contrast(&self) -> Result<f64> {
        contrast(self.r0, self.r1)
    }
}

/// NV ensemble seen by the detector.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorEnsemble {
    gamma_e: f64,
    n_nv: u32,
    rates: PhotonRates,
    coherence: BTreeMap<u32, CoherenceEntry>,
}

impl SensorEnsemble {
    pub fn new(gamma_e: f64, n_nv: u32, r0: f64, r1: f64) -> Result<Self> {
        if !(gamma_e.is_finite() && gamma_e > 0.0) {
            return Err(Error::invalid(
                "gamma_e",
                format!("{gamma_e} must be finite and > 0"),
            ));
        }
        if n_nv == 0 {
            return Err(Error::invalid("n_nv", "need at least one NV centre"));
        }
        let c = contrast(r0, r1)?;
        debug_assert!(c > 0.0 && c < 1.0);
        Ok(Self {
            gamma_e,
            n_nv,
            rates: PhotonRates { r0, r1 },
            coherence: BTreeMap::new(),
        })
    }

    /// Adds or replaces the coherence record for `n` pulses.
    pub fn with_coherence(
        mut self,
        n: u32,
        t2: f64,
        p: f64,
        photon_ratio: Option<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "coherence entries need N >= 1"));
        }
        if let Some(r) = photon_ratio {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::invalid(
                    "photon_ratio",
                    format!("{r} must lie in [0, 1)"),
                ));
            }
        }
        let envelope = CoherenceEnvelope::new(t2, p)?;
        self.coherence.insert(
            n,
            CoherenceEntry {
                envelope,
                photon_ratio,
            },
        );
        Ok(self)
    }

    pub fn without_coherence(mut self) -> Self {
        self.coherence.clear();
        self
    }

    pub fn gamma_e(&self) -> f64 {
        self.gamma_e
    }

    pub fn n_nv(&self) -> f64 {
        f64::from(self.n_nv)
    }

    pub fn n_centers(&self) -> u32 {
        self.n_nv
    }

    pub fn rates(&self) -> PhotonRates {
        self.rates
    }

    pub fn ratio(&self) -> f64 {
        self.rates.ratio()
    }

    pub fn contrast(&self) -> f64 {
        // validated at construction
        contrast(self.rates.r0, self.rates.r1).expect("sensor rates validated")
    }

    pub fn coherence_table(&self) -> &BTreeMap<u32, CoherenceEntry> {
        &self.coherence
    }

    /// Coherence for `n` pulses. Counts between tabulated entries are
    /// interpolated linearly in `ln N` (on `ln T2` and `p`); counts outside the
    /// table are an error.
    pub fn coherence_for(&self, n: u32) -> Result<CoherenceLookup> {
        if let Some(entry) = self.coherence.get(&n) {
            return Ok(CoherenceLookup {
                envelope: entry.envelope,
                photon_ratio: entry.photon_ratio,
                interpolated: false,
            });
        }
        let below = self.coherence.range(..n).next_back();
        let above = self.coherence.range(n..).next();
        let ((&n_lo, lo), (&n_hi, hi)) = match (below, above) {
            (Some(b), Some(a)) => (b, a),
            _ => return Err(Error::MissingCoherence(n)),
        };
        let w = (f64::from(n).ln() - f64::from(n_lo).ln())
            / (f64::from(n_hi).ln() - f64::from(n_lo).ln());
        let ln_t2 = (1.0 - w) * lo.envelope.t2.ln() + w * hi.envelope.t2.ln();
        let p = (1.0 - w) * lo.envelope.p + w * hi.envelope.p;
        Ok(CoherenceLookup {
            envelope: CoherenceEnvelope { t2: ln_t2.exp(), p },
            photon_ratio: None,
            interpolated: true,
        })
    }

    /// Photon rates in effect for an `n`-pulse measurement. A tabulated ratio
    /// keeps `r0` and sets `r1 = ratio·r0`.
    pub fn rates_for(&self, n: u32) -> PhotonRates {
        match self.coherence.get(&n).and_then(|e| e.photon_ratio) {
            Some(ratio) => PhotonRates {
                r0: self.rates.r0,
                r1: ratio * self.rates.r0,
            },
            None => self.rates,
        }
    }
}

impl Default for SensorEnsemble {
    /// Ensemble reconstructed from the reference measurements: `C = 0.03`,
    /// `r = 0.917`, 60 NV centres, and the measured `(T2, p)` table.
    fn default() -> Self {
        const CONTRAST: f64 = 0.03;
        const RATIO: f64 = 0.917;
        let r0 = bright_rate_for(CONTRAST, RATIO).expect("constants are valid");
        let table: [(u32, f64, f64, Option<f64>); 7] = [
            (1, 74e-6, 0.95, None),
            (2, 95e-6, 1.11, Some(0.892)),
            (4, 124e-6, 1.21, Some(0.908)),
            (8, 140e-6, 0.97, Some(0.917)),
            (32, 340e-6, 1.3, None),
            (128, 650e-6, 1.2, None),
            (256, 1.2e-3, 1.7, None),
        ];
        table
            .into_iter()
            .try_fold(
                SensorEnsemble::new(GAMMA_E, 60, r0, RATIO * r0).expect("constants are valid"),
                |s, (n, t2, p, r)| s.with_coherence(n, t2, p, r),
            )
            .expect("constants are valid")
    }
}

/// Everything the signal layer reports for one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalPoint {
    pub free_precession_time: f64,
    pub phi: f64,
    pub signal: f64,
    pub deviation_linear: f64,
    pub deviation_exact: f64,
    pub variance: f64,
    pub snr: f64,
}

/// Outcome of a weighted least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub names: Vec<&'static str>,
    pub parameters: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// `sqrt(χ²)` of the weighted residuals at the optimum.
    pub residual_norm: f64,
    pub dof: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| *n == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.parameters[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.index(name)
            .map(|i| self.covariance[(i, i)].max(0.0).sqrt())
    }

    pub fn std_errors(&self) -> DVector<f64> {
        self.covariance.diagonal().map(|v| v.max(0.0).sqrt())
    }

    pub fn chi_square(&self) -> f64 {
        self.residual_norm * self.residual_norm
    }

    pub fn reduced_chi_square(&self) -> f64 {
        self.chi_square() / self.dof.max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn resonance_tau_reference_values() {
        let tau = resonance_tau(200e3, 0.0).unwrap();
        assert_relative_eq!(tau, 2.5e-6, max_relative = 1e-15);
        assert_relative_eq!(8.0 * tau, 20e-6, max_relative = 1e-15);

        let tau = resonance_tau(200e3, 124e-9).unwrap();
        assert_relative_eq!(tau, 2.376e-6, max_relative = 1e-12);
        assert_relative_eq!(8.0 * tau, 19.008e-6, max_relative = 1e-12);
    }

    #[test]
    fn resonance_tau_rejects_wide_pulses() {
        assert!(matches!(
            resonance_tau(200e3, 2.5e-6),
            Err(Error::NoValidTau { .. })
        ));
        assert!(resonance_tau(0.0, 0.0).is_err());
    }

    #[test]
    fn xy8_pattern_and_alpha() {
        let seq = build_sequence(Family::Xy8, 1, 2.376e-6, 124e-9).unwrap();
        use Axis::{X, Y};
        assert_eq!(seq.n_pulses(), 8);
        assert_eq!(seq.pattern(), &[X, Y, X, Y, Y, X, Y, X]);
        assert_eq!(seq.n_y(), 4);
        assert_eq!(seq.n_x(), 4);
        assert_relative_eq!(seq.alpha(), 0.052_188_552_188_552, max_relative = 1e-12);
        assert!((seq.alpha() - 0.05219).abs() < 1e-5);
    }

    #[test]
    fn pulse_counts_per_family() {
        let hahn = build_sequence(Family::Hahn, 1, 1e-6, 0.0).unwrap();
        assert_eq!(hahn.n_pulses(), 1);
        let cpmg = build_sequence(Family::Cpmg, 2, 1e-6, 1e-7).unwrap();
        assert_eq!(cpmg.pattern(), &[Axis::Y, Axis::Y]);
        assert_eq!(cpmg.n_y(), 2);
        assert_eq!(
            build_sequence(Family::Xy4, 3, 1e-6, 0.0)
                .unwrap()
                .n_pulses(),
            12
        );
        assert_eq!(
            build_sequence(Family::Xy8, 2, 1e-6, 0.0)
                .unwrap()
                .n_pulses(),
            16
        );
        assert!(build_sequence(Family::Cpmg, 0, 1e-6, 0.0).is_err());
        assert!(build_sequence(Family::Cpmg, 1, 1e-7, 1e-7).is_err());
    }

    #[test]
    fn timeline_covers_total_time() {
        let seq = build_sequence(Family::Xy4, 1, 2.0e-6, 0.2e-6).unwrap();
        let segs = seq.free_segments();
        assert_eq!(segs.len(), 5);
        let free: f64 = segs.iter().map(Segment::duration).sum();
        let pulses = f64::from(seq.n_pulses()) * seq.pi_width();
        assert_relative_eq!(free + pulses, seq.total_time(), max_relative = 1e-14);
        assert_relative_eq!(seq.total_time(), 4.0 * 2.2e-6, max_relative = 1e-14);
        assert_relative_eq!(segs[0].end, 1.0e-6, max_relative = 1e-14);
        assert_eq!(segs[3].sign, -1.0);
    }

    #[test]
    fn contrast_examples() {
        // 0.50/0.46 rounds the reference ensemble; the unrounded pair gives 0.030
        let c = contrast(0.50, 0.46).unwrap();
        assert_relative_eq!(c, 1.0 / 1201f64.sqrt(), max_relative = 1e-14);
        assert!((c - 0.030).abs() < 1.5e-3);
        assert_relative_eq!(
            contrast(1.0, 0.0).unwrap(),
            3f64.powf(-0.5),
            max_relative = 1e-15
        );
        assert!(matches!(
            contrast(0.5, 0.5),
            Err(Error::ZeroContrast { .. })
        ));
    }

    #[test]
    fn default_sensor_hits_reference_contrast_and_ratio() {
        let s = SensorEnsemble::default();
        assert_relative_eq!(s.contrast(), 0.03, max_relative = 1e-12);
        assert_relative_eq!(s.ratio(), 0.917, max_relative = 1e-12);
        // forward check of the solved bright rate
        let r0 = s.rates().r0;
        assert!((r0 - 0.5013).abs() < 1e-3, "r0 = {r0}");
        assert!((s.rates().r1 - 0.46).abs() < 1e-3);
    }

    #[test]
    fn coherence_interpolation_is_flagged() {
        let s = SensorEnsemble::default();
        let exact = s.coherence_for(8).unwrap();
        assert!(!exact.interpolated);
        assert_eq!(exact.envelope.t2, 140e-6);
        let mid = s.coherence_for(16).unwrap();
        assert!(mid.interpolated);
        assert_relative_eq!(
            mid.envelope.t2,
            (140e-6f64 * 340e-6).sqrt(),
            max_relative = 1e-12
        );
        assert!(matches!(
            s.coherence_for(512),
            Err(Error::MissingCoherence(512))
        ));
        assert_relative_eq!(s.rates_for(2).ratio(), 0.892, max_relative = 1e-12);
        assert_eq!(s.rates_for(256), s.rates());
    }

    #[test]
    fn envelope_monotone() {
        let env = CoherenceEnvelope::new(140e-6, 0.97).unwrap();
        let mut last = -1.0;
        for k in 0..50 {
            let d = env.decay_exponent(k as f64 * 5e-6);
            assert!(d >= last);
            last = d;
        }
    }

    proptest::proptest! {
        #[test]
        fn total_time_identity(tau in 1e-7f64..1e-4, frac in 0.0f64..0.99, reps in 1u32..6,
                               fam in 0usize..4) {
            let family = [Family::Hahn, Family::Cpmg, Family::Xy4, Family::Xy8][fam];
            let seq = build_sequence(family, reps, tau, frac * tau).unwrap();
            let n = f64::from(seq.n_pulses());
            proptest::prop_assert!((seq.alpha() - frac * tau / tau).abs() <= 1e-15);
            let t = seq.total_time();
            proptest::prop_assert!((t - (n * tau + n * seq.pi_width())).abs() <= 1e-15 * t);
            proptest::prop_assert_eq!(seq.n_x() + seq.n_y(), seq.n_pulses());
        }

        #[test]
        fn contrast_decreases_with_dark_rate(r0 in 0.1f64..10.0, a in 0.0f64..0.98, gap in 0.001f64..0.01) {
            let r1 = a * r0;
            let r1b = (a + gap).min(0.999) * r0;
            proptest::prop_assume!(r1b > r1);
            proptest::prop_assert!(contrast(r0, r1b).unwrap() < contrast(r0, r1).unwrap());
        }
    }
}
