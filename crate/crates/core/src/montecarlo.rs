//! Photon-counting readout with common-mode rejection.
//!
//! Each measurement reads every NV centre twice: branch A after a final π/2
//! pulse, branch B after a final 3π/2 pulse. Within a branch each centre is
//! projected onto the dark state with probability `p` and then emits a
//! Poisson number of photons with mean `r1` (dark) or `r0` (bright). The
//! projection step is what produces the `(r0−r1)²/4·(1 − z²)` term of the
//! operator variance.
//!
//! Sums of independent Poisson draws are Poisson, so `N_m` measurements of
//! `N_nv` centres collapse to one binomial draw (dark centres) followed by one
//! Poisson draw per branch.
//!
//! Trials draw from ChaCha8 streams keyed by `(seed, trial index)`, so the
//! output does not depend on how trials are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{AcField, DecouplingSequence, PhotonRates, SensorEnsemble};
use crate::numeric::mean_std;
use crate::signal;

/// Largest aggregate photon mean handed to the Poisson sampler.
const MAX_PHOTON_MEAN: f64 = 9.0e15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    /// Readout pairs aggregated per trial (`N_m`).
    pub n_measurements: u64,
    pub seed: u64,
    pub n_trials: usize,
}

impl McConfig {
    pub fn new(n_measurements: u64, seed: u64, n_trials: usize) -> Result<Self> {
        if n_measurements == 0 {
            return Err(Error::invalid("n_measurements", "must be at least 1"));
        }
        if n_trials == 0 {
            return Err(Error::invalid("n_trials", "must be at least 1"));
        }
        Ok(Self {
            n_measurements,
            seed,
            n_trials,
        })
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// SplitMix64 finalizer; derives independent seeds from `(seed, index)`.
pub fn substream_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for trial `index` under `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Photon counts of both branches for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialCounts {
    pub branch_a: u64,
    pub branch_b: u64,
}

impl TrialCounts {
    /// Normalized differential signal `(A − B)/(A + B)`; zero without photons.
    pub fn normalized_signal(&self) -> f64 {
        let total = self.branch_a + self.branch_b;
        if total == 0 {
            return 0.0;
        }
        (self.branch_a as f64 - self.branch_b as f64) / total as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McOutcome {
    pub trials: Vec<TrialCounts>,
    pub signal_mean: f64,
    pub signal_std: f64,
    pub total_a: u128,
    pub total_b: u128,
    /// Centres times measurements behind each branch sum.
    pub exposures: u64,
}

impl McOutcome {
    fn from_trials(trials: Vec<TrialCounts>, exposures: u64) -> Self {
        let signals: Vec<f64> = trials.iter().map(TrialCounts::normalized_signal).collect();
        let (signal_mean, signal_std) = mean_std(&signals);
        Self {
            total_a: trials.iter().map(|t| u128::from(t.branch_a)).sum(),
            total_b: trials.iter().map(|t| u128::from(t.branch_b)).sum(),
            trials,
            signal_mean,
            signal_std,
            exposures,
        }
    }

    pub fn signals(&self) -> Vec<f64> {
        self.trials
            .iter()
            .map(TrialCounts::normalized_signal)
            .collect()
    }

    /// Standard error of `signal_mean`.
    pub fn signal_sem(&self) -> f64 {
        self.signal_std / (self.trials.len() as f64).sqrt()
    }

    /// Estimate of the single-centre, single-measurement operator variance
    /// from the spread of branch-A sums, with its standard error.
    pub fn per_measurement_variance(&self) -> (f64, f64) {
        let sums: Vec<f64> = self.trials.iter().map(|t| t.branch_a as f64).collect();
        let (_, std) = mean_std(&sums);
        let var = std * std / self.exposures as f64;
        let n = self.trials.len() as f64;
        (var, var * (2.0 / (n - 1.0).max(1.0)).sqrt())
    }
}

fn photons<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng) as u64
}

/// Aggregated count of one branch: `exposures` centre-readouts, each dark with
/// probability `p_dark`.
pub fn simulate_branch<R: Rng + ?Sized>(
    p_dark: f64,
    rates: PhotonRates,
    exposures: u64,
    rng: &mut R,
) -> u64 {
    let p = p_dark.clamp(0.0, 1.0);
    let dark = Binomial::new(exposures, p)
        .expect("probability in [0, 1]")
        .sample(rng);
    let mean = rates.r0 * (exposures - dark) as f64 + rates.r1 * dark as f64;
    photons(mean, rng)
}

/// One readout pair of `n_nv` centres. Branch A is dark with probability
/// `p_dark`, branch B with `1 − p_dark`.
pub fn simulate_readout_pair<R: Rng + ?Sized>(
    p_dark: f64,
    rates: PhotonRates,
    n_nv: u32,
    rng: &mut R,
) -> Result<(u64, u64)> {
    if !(0.0..=1.0).contains(&p_dark) {
        return Err(Error::invalid(
            "p_dark",
            format!("{p_dark} must lie in [0, 1]"),
        ));
    }
    let a = simulate_branch(p_dark, rates, u64::from(n_nv), rng);
    let b = simulate_branch(1.0 - p_dark, rates, u64::from(n_nv), rng);
    Ok((a, b))
}

/// Dark-state probability of branch A, `(1 − ⟨σ_z⟩)/2`.
pub fn dark_probability(
    field: &AcField,
    seq: &DecouplingSequence,
    sensor: &SensorEnsemble,
) -> Result<f64> {
    let z = signal::polarization(field, seq, sensor)?;
    Ok(0.5 * (1.0 - z))
}

fn exposures(sensor: &SensorEnsemble, rates: PhotonRates, n_measurements: u64) -> Result<u64> {
    let exposures = n_measurements
        .checked_mul(u64::from(sensor.n_centers()))
        .ok_or(Error::MeasurementOverflow(n_measurements))?;
    if exposures as f64 * rates.r0 > MAX_PHOTON_MEAN {
        return Err(Error::MeasurementOverflow(n_measurements));
    }
    Ok(exposures)
}

/// Runs `n_trials` independent aggregates of `N_m` readout pairs.
pub fn run_experiment(
    field: &AcField,
    seq: &DecouplingSequence,
    sensor: &SensorEnsemble,
    mc: &McConfig,
) -> Result<McOutcome> {
    let rates = sensor.rates_for(seq.n_pulses());
    let exposures = exposures(sensor, rates, mc.n_measurements)?;
    let p_dark = dark_probability(field, seq, sensor)?;
    let trials = (0..mc.n_trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(mc.seed, i);
            TrialCounts {
                branch_a: simulate_branch(p_dark, rates, exposures, &mut rng),
                branch_b: simulate_branch(1.0 - p_dark, rates, exposures, &mut rng),
            }
        })
        .collect();
    Ok(McOutcome::from_trials(trials, exposures))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalSnr {
    pub value: f64,
    pub std_error: f64,
    /// `mean(Ŝ_shift) − mean(Ŝ_base)`.
    pub delta_signal: f64,
}

/// `|mean(ΔŜ)| / std(Ŝ)`, with the noise taken from the unshifted set.
pub fn estimate_empirical_snr(
    with_shift: &McOutcome,
    without_shift: &McOutcome,
) -> Result<EmpiricalSnr> {
    if with_shift.trials.is_empty() || without_shift.trials.is_empty() {
        return Err(Error::EmptyOutcomes);
    }
    let noise = without_shift.signal_std;
    if noise.is_nan() || noise <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let delta = with_shift.signal_mean - without_shift.signal_mean;
    let value = delta.abs() / noise;
    let n_w = with_shift.trials.len() as f64;
    let n_0 = without_shift.trials.len() as f64;
    let se_delta = (with_shift.signal_std.powi(2) / n_w + noise * noise / n_0).sqrt();
    let std_error =
        ((se_delta / noise).powi(2) + value * value / (2.0 * (n_0 - 1.0).max(1.0))).sqrt();
    Ok(EmpiricalSnr {
        value,
        std_error,
        delta_signal: delta,
    })
}

/// Baseline and phase-shifted runs with their empirical SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftExperiment {
    pub baseline: McOutcome,
    pub shifted: McOutcome,
    pub snr: EmpiricalSnr,
}

/// Runs the unshifted field and the field shifted by `dphi` on separate
/// substreams of `mc.seed`.
pub fn run_shift_experiment(
    field: &AcField,
    seq: &DecouplingSequence,
    sensor: &SensorEnsemble,
    dphi: f64,
    mc: &McConfig,
) -> Result<ShiftExperiment> {
    let shifted_field = field.with_phase_shift(field.phase_shift() + dphi)?;
    let baseline = run_experiment(
        field,
        seq,
        sensor,
        &mc.with_seed(substream_seed(mc.seed, 0)),
    )?;
    let shifted = run_experiment(
        &shifted_field,
        seq,
        sensor,
        &mc.with_seed(substream_seed(mc.seed, 1)),
    )?;
    let snr = estimate_empirical_snr(&shifted, &baseline)?;
    Ok(ShiftExperiment {
        baseline,
        shifted,
        snr,
    })
}

/// Analytic counterpart of the differential SNR: both branches are
/// measurements, so `N_m` pairs carry `2 N_m` readouts.
pub fn expected_differential_snr(
    field: &AcField,
    seq: &DecouplingSequence,
    sensor: &SensorEnsemble,
    dphi: f64,
    n_pairs: u64,
) -> Result<signal::Snr> {
    signal::snr(field, seq, sensor, dphi, 2 * n_pairs)
}
