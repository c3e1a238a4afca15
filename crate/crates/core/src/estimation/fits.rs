use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::{levenberg_marquardt, CurveModel, Dataset, LmConfig, Weighting};
use crate::error::{Error, Result};
use crate::model::{AcField, DecouplingSequence, FitResult, SensorEnsemble};
use crate::signal::expected_signal;

/// What the `x` column of a magnetometry dataset holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepVariable {
    /// Free precession time `Nτ` in seconds.
    #[default]
    FreePrecessionTime,
    /// Phase shift `Δφ` in radians added to the fitted field phase.
    PhaseShift,
}

/// Magnetometry signal as a function of `[b_ac, phi_ac]`.
///
/// Negative amplitudes are evaluated as `(|B|, φ + π)`, which is the same
/// field, so the optimiser can cross zero freely.
#[derive(Debug, Clone)]
pub struct MagnetometryModel {
    pub seq: DecouplingSequence,
    pub field: AcField,
    pub sensor: SensorEnsemble,
    pub sweep: SweepVariable,
}

impl MagnetometryModel {
    pub fn new(
        seq: DecouplingSequence,
        field: AcField,
        sensor: SensorEnsemble,
        sweep: SweepVariable,
    ) -> Self {
        Self {
            seq,
            field,
            sensor,
            sweep,
        }
    }
}

impl CurveModel for MagnetometryModel {
    fn names(&self) -> &[&'static str] {
        &["b_ac", "phi_ac"]
    }

    fn eval(&self, x: f64, p: &[f64]) -> Result<f64> {
        let (b, phi) = if p[0] < 0.0 {
            (-p[0], p[1] + PI)
        } else {
            (p[0], p[1])
        };
        let field = self.field.with_amplitude(b)?.with_initial_phase(phi)?;
        match self.sweep {
            SweepVariable::FreePrecessionTime => {
                let seq = self.seq.with_tau(x / f64::from(self.seq.n_pulses()))?;
                expected_signal(&field, &seq, &self.sensor)
            }
            SweepVariable::PhaseShift => {
                let field = field.with_phase_shift(self.field.phase_shift() + x)?;
                expected_signal(&field, &self.seq, &self.sensor)
            }
        }
    }
}

/// Stretched-exponential decay `A·exp(−(x/T2)^p)` in `[amplitude, t2, p]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CoherenceModel;

impl CurveModel for CoherenceModel {
    fn names(&self) -> &[&'static str] {
        &["amplitude", "t2", "p"]
    }

    fn eval(&self, x: f64, p: &[f64]) -> Result<f64> {
        if p[1] <= 0.0 || p[2] <= 0.0 {
            return Err(Error::invalid("t2/p", "must be > 0"));
        }
        Ok(p[0] * (-(x / p[1]).powf(p[2])).exp())
    }
}

fn weighted_cost<M: CurveModel>(
    model: &M,
    data: &Dataset,
    params: &[f64],
    weighting: Weighting,
) -> f64 {
    let mut cost = 0.0;
    for i in 0..data.len() {
        let Ok(m) = model.eval(data.x[i], params) else {
            return f64::INFINITY;
        };
        let w = match weighting {
            Weighting::ShotNoise => 1.0 / data.y_err[i],
            Weighting::Uniform => 1.0,
        };
        cost += ((data.y[i] - m) * w).powi(2);
    }
    if cost.is_finite() {
        cost
    } else {
        f64::INFINITY
    }
}

fn peak_to_peak(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    hi - lo
}

/// Default `[b_ac, phi_ac]` start: for each phase in `{0, π/2, π, 3π/2}` the
/// amplitude is scaled so the model's peak-to-peak matches the data, and the
/// candidate with the lowest χ² wins.
pub fn magnetometry_guess(model: &MagnetometryModel, data: &Dataset) -> Result<[f64; 2]> {
    let data_pp = peak_to_peak(data.y.iter().copied());
    let reference = model.field.amplitude().max(1e-9);
    let mut best: Option<([f64; 2], f64)> = None;
    for k in 0..4 {
        let phi = f64::from(k) * FRAC_PI_2;
        let curve: Vec<f64> = data
            .x
            .iter()
            .map(|&x| model.eval(x, &[reference, phi]))
            .collect::<Result<_>>()?;
        let model_pp = peak_to_peak(curve.into_iter());
        if model_pp <= 0.0 || !model_pp.is_finite() {
            continue;
        }
        let guess = [reference * data_pp / model_pp, phi];
        let cost = weighted_cost(model, data, &guess, Weighting::ShotNoise);
        if best.is_none_or(|(_, c)| cost < c) {
            best = Some((guess, cost));
        }
    }
    best.map(|(g, _)| g).ok_or(Error::ZeroAmplitude)
}

/// Maps a solution with negative amplitude onto `B ≥ 0`, `φ ∈ [0, 2π)`.
fn canonical_magnetometry(mut fit: FitResult) -> FitResult {
    if fit.parameters[0] < 0.0 {
        fit.parameters[0] = -fit.parameters[0];
        fit.parameters[1] += PI;
        let c = -fit.covariance[(0, 1)];
        fit.covariance[(0, 1)] = c;
        fit.covariance[(1, 0)] = c;
    }
    fit.parameters[1] = fit.parameters[1].rem_euclid(TAU);
    fit
}

/// Fits `[b_ac, phi_ac]` to a magnetometry sweep.
///
/// The caller's `init` (if any) and the peak-to-peak guess are both used as
/// starting points; the converged solution with the lower χ² is returned.
pub fn fit_magnetometry(
    data: &Dataset,
    model: &MagnetometryModel,
    init: Option<[f64; 2]>,
    weighting: Weighting,
) -> Result<FitResult> {
    let config = LmConfig::default();
    let mut starts = Vec::with_capacity(2);
    starts.extend(init);
    match magnetometry_guess(model, data) {
        Ok(g) => starts.push(g),
        Err(e) if starts.is_empty() => return Err(e),
        Err(_) => {}
    }
    let mut best: Option<FitResult> = None;
    let mut last_err = None;
    for start in starts {
        match levenberg_marquardt(model, data, &start, weighting, &config) {
            Ok(fit) => {
                if best
                    .as_ref()
                    .is_none_or(|b| fit.residual_norm < b.residual_norm)
                {
                    best = Some(fit);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match (best, last_err) {
        (Some(fit), _) => Ok(canonical_magnetometry(fit)),
        (None, Some(e)) => Err(e),
        (None, None) => Err(Error::NotConverged { iterations: 0 }),
    }
}

/// Default `[amplitude, t2, p]` start: the largest signal, the first sweep
/// value where the signal falls below `1/e` of it, and `p = 1`.
pub fn coherence_guess(data: &Dataset) -> [f64; 3] {
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| data.x[a].total_cmp(&data.x[b]));
    let amplitude = data.y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = amplitude / std::f64::consts::E;
    let t2 = order
        .iter()
        .find(|&&i| data.y[i] <= threshold && data.x[i] > 0.0)
        .map(|&i| data.x[i])
        .unwrap_or_else(|| order.last().map(|&i| data.x[i]).unwrap_or(1.0));
    [amplitude, if t2 > 0.0 { t2 } else { 1.0 }, 1.0]
}

/// Fits `A·exp(−(x/T2)^p)` to a decay.
pub fn fit_coherence(
    data: &Dataset,
    init: Option<[f64; 3]>,
    weighting: Weighting,
) -> Result<FitResult> {
    let start = init.unwrap_or_else(|| coherence_guess(data));
    levenberg_marquardt(
        &CoherenceModel,
        data,
        &start,
        weighting,
        &LmConfig::default(),
    )
}

/// Chi-square of `params` against `data`, exposed for residual comparisons.
pub fn chi_square<M: CurveModel>(
    model: &M,
    data: &Dataset,
    params: &[f64],
    weighting: Weighting,
) -> f64 {
    weighted_cost(model, data, params, weighting)
}
