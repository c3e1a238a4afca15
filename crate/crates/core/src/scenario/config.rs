//! Declarative scenario configuration.
//!
//! A TOML document is parsed into loosely typed `Raw*` sections, then
//! resolved into a [`ScenarioConfig`] where every default is filled in and
//! every grid is an explicit list. The resolved form is what the manifest
//! records, so a run can be reproduced from its manifest alone.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::estimation::Weighting;
use crate::model::{
    build_sequence, resonance_tau, AcField, DecouplingSequence, Family, Readout, SensorEnsemble,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    TimeSweep,
    PhaseDeviationSweep,
    #[serde(rename = "slope-vs-N")]
    SlopeVsN,
    #[serde(rename = "slope-vs-B")]
    SlopeVsB,
    LimitCurves,
    CoherenceDecays,
    SensitivityReport,
    McValidate,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 8] = [
        ScenarioKind::TimeSweep,
        ScenarioKind::PhaseDeviationSweep,
        ScenarioKind::SlopeVsN,
        ScenarioKind::SlopeVsB,
        ScenarioKind::LimitCurves,
        ScenarioKind::CoherenceDecays,
        ScenarioKind::SensitivityReport,
        ScenarioKind::McValidate,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ScenarioKind::TimeSweep => "time-sweep",
            ScenarioKind::PhaseDeviationSweep => "phase-deviation-sweep",
            ScenarioKind::SlopeVsN => "slope-vs-N",
            ScenarioKind::SlopeVsB => "slope-vs-B",
            ScenarioKind::LimitCurves => "limit-curves",
            ScenarioKind::CoherenceDecays => "coherence-decays",
            ScenarioKind::SensitivityReport => "sensitivity-report",
            ScenarioKind::McValidate => "mc-validate",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let known: Vec<_> = Self::ALL.iter().map(|k| k.id()).collect();
                format!(
                    "unknown scenario `{s}` (expected one of {})",
                    known.join(", ")
                )
            })
    }
}

/// One rejected field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<String>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    #[serde(default)]
    field: RawField,
    #[serde(default)]
    sequence: RawSequence,
    #[serde(default)]
    sensor: RawSensor,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    mc: RawMc,
    #[serde(default)]
    sensitivity: RawSensitivity,
    #[serde(default)]
    fit: RawFit,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    b_ac_t: Option<f64>,
    f_ac_hz: Option<f64>,
    phi_ac_rad: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSequence {
    family: Option<String>,
    repetitions: Option<u32>,
    pi_width_s: Option<f64>,
    tau_s: Option<f64>,
    readout: Option<Readout>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSensor {
    gamma_e: Option<f64>,
    n_nv: Option<u32>,
    r0: Option<f64>,
    r1: Option<f64>,
    coherence: Option<Vec<CoherenceConfig>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    start: Option<f64>,
    stop: Option<f64>,
    points: Option<usize>,
    values: Option<Vec<f64>>,
    dphi_rad: Option<Vec<f64>>,
    amplitudes_t: Option<Vec<f64>>,
    sequences: Option<Vec<SequenceSpec>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMc {
    enabled: Option<bool>,
    n_measurements: Option<u64>,
    n_trials: Option<usize>,
    n_measurements_list: Option<Vec<u64>>,
    dphi_rad: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSensitivity {
    b_ac_t: Option<f64>,
    n_pulses: Option<u32>,
    t2_override_s: Option<f64>,
    total_time_s: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFit {
    enabled: Option<bool>,
    weighting: Option<Weighting>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub b_ac_t: f64,
    pub f_ac_hz: f64,
    pub phi_ac_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSpec {
    pub family: Family,
    pub repetitions: u32,
}

impl SequenceSpec {
    pub fn label(&self) -> String {
        format!("{}-{}", self.family, self.repetitions)
    }

    pub fn n_pulses(&self) -> u32 {
        self.family.unit().len() as u32 * self.repetitions
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceConfig {
    pub family: Family,
    pub repetitions: u32,
    pub pi_width_s: f64,
    pub tau_s: f64,
    pub readout: Readout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherenceConfig {
    pub n: u32,
    pub t2_s: f64,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photon_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    pub gamma_e: f64,
    pub n_nv: u32,
    pub r0: f64,
    pub r1: f64,
    pub coherence: Vec<CoherenceConfig>,
}

impl SensorConfig {
    pub fn build(&self) -> crate::Result<SensorEnsemble> {
        self.coherence.iter().try_fold(
            SensorEnsemble::new(self.gamma_e, self.n_nv, self.r0, self.r1)?,
            |s, c| s.with_coherence(c.n, c.t2_s, c.p, c.photon_ratio),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Primary grid: `Nτ` in seconds or `Δφ` in radians depending on the scenario.
    pub values: Vec<f64>,
    pub dphi_rad: Vec<f64>,
    pub amplitudes_t: Vec<f64>,
    pub sequences: Vec<SequenceSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub enabled: bool,
    pub n_measurements: u64,
    pub n_trials: usize,
    pub n_measurements_list: Vec<u64>,
    pub dphi_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityConfig {
    pub b_ac_t: f64,
    pub n_pulses: u32,
    pub t2_override_s: Option<f64>,
    pub total_time_s: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub enabled: bool,
    pub weighting: Weighting,
}

/// Fully resolved scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub field: FieldConfig,
    pub sequence: SequenceConfig,
    pub sensor: SensorConfig,
    pub sweep: SweepConfig,
    pub mc: McSettings,
    pub sensitivity: SensitivityConfig,
    pub fit: FitSettings,
}

impl ScenarioConfig {
    pub fn field(&self) -> crate::Result<AcField> {
        AcField::new(self.field.b_ac_t, self.field.f_ac_hz, self.field.phi_ac_rad)
    }

    pub fn base_sequence(&self) -> crate::Result<DecouplingSequence> {
        let s = &self.sequence;
        Ok(build_sequence(s.family, s.repetitions, s.tau_s, s.pi_width_s)?.with_readout(s.readout))
    }

    /// `spec` at the resonant interval of the configured field.
    pub fn resonant_sequence(&self, spec: SequenceSpec) -> crate::Result<DecouplingSequence> {
        let tau = resonance_tau(self.field.f_ac_hz, self.sequence.pi_width_s)?;
        Ok(
            build_sequence(spec.family, spec.repetitions, tau, self.sequence.pi_width_s)?
                .with_readout(self.sequence.readout),
        )
    }

    pub fn sensor(&self) -> crate::Result<SensorEnsemble> {
        self.sensor.build()
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

struct Issues(Vec<ConfigIssue>);

impl Issues {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(ConfigIssue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn positive(&mut self, path: &str, v: f64) {
        if !(v.is_finite() && v > 0.0) {
            self.push(path, format!("{v} must be finite and > 0"));
        }
    }

    fn finite(&mut self, path: &str, v: f64) {
        if !v.is_finite() {
            self.push(path, format!("{v} must be finite"));
        }
    }

    fn grid(&mut self, path: &str, values: &[f64]) {
        if values.is_empty() {
            self.push(path, "grid is empty");
        } else if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            self.push(format!("{path}[{i}]"), "must be finite");
        } else if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
            self.push(
                format!("{path}[{}]", i + 1),
                "grid must be strictly increasing",
            );
        }
    }
}

fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (points - 1) as f64;
            (0..points)
                .map(|i| {
                    if i == points - 1 {
                        stop
                    } else {
                        start + step * i as f64
                    }
                })
                .collect()
        }
    }
}

fn spec(family: Family, repetitions: u32) -> SequenceSpec {
    SequenceSpec {
        family,
        repetitions,
    }
}

fn default_grid(kind: ScenarioKind) -> Option<(f64, f64, usize)> {
    match kind {
        ScenarioKind::TimeSweep | ScenarioKind::PhaseDeviationSweep => Some((12e-6, 28e-6, 161)),
        ScenarioKind::SlopeVsN | ScenarioKind::SlopeVsB => Some((-0.1 * PI, 0.1 * PI, 41)),
        ScenarioKind::LimitCurves => Some((-1.0, 1.0, 201)),
        ScenarioKind::CoherenceDecays
        | ScenarioKind::SensitivityReport
        | ScenarioKind::McValidate => None,
    }
}

fn default_sequences(kind: ScenarioKind, base: SequenceSpec) -> Vec<SequenceSpec> {
    match kind {
        ScenarioKind::SlopeVsN | ScenarioKind::LimitCurves => {
            vec![
                spec(Family::Cpmg, 2),
                spec(Family::Xy4, 1),
                spec(Family::Xy8, 1),
            ]
        }
        ScenarioKind::CoherenceDecays => vec![
            spec(Family::Hahn, 1),
            spec(Family::Cpmg, 32),
            spec(Family::Cpmg, 128),
            spec(Family::Cpmg, 256),
        ],
        _ => vec![base],
    }
}

fn default_amplitudes(kind: ScenarioKind, b: f64, b_explicit: bool) -> Vec<f64> {
    match kind {
        ScenarioKind::SlopeVsB => vec![0.37e-6, 0.74e-6, 1.48e-6],
        ScenarioKind::LimitCurves if !b_explicit => vec![0.7e-6],
        _ => vec![b],
    }
}

fn default_coherence(sensor: &SensorEnsemble) -> Vec<CoherenceConfig> {
    sensor
        .coherence_table()
        .iter()
        .map(|(&n, e)| CoherenceConfig {
            n,
            t2_s: e.envelope.t2,
            p: e.envelope.p,
            photon_ratio: e.photon_ratio,
        })
        .collect()
}

/// Parses TOML text, applies defaults and overrides, and validates.
pub fn validate_config_with(
    raw: &str,
    overrides: &Overrides,
) -> Result<ScenarioConfig, ScenarioError> {
    let parsed: RawConfig = toml::from_str(raw).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let mut issues = Issues(Vec::new());

    let scenario_text = overrides.scenario.clone().or(parsed.scenario);
    let scenario = match scenario_text.as_deref().map(ScenarioKind::from_str) {
        None => ScenarioKind::TimeSweep,
        Some(Ok(k)) => k,
        Some(Err(msg)) => {
            issues.push("scenario", msg);
            ScenarioKind::TimeSweep
        }
    };

    let defaults = SensorEnsemble::default();

    let f = &parsed.field;
    let field = FieldConfig {
        b_ac_t: f.b_ac_t.unwrap_or(0.74e-6),
        f_ac_hz: f.f_ac_hz.unwrap_or(200e3),
        phi_ac_rad: f.phi_ac_rad.unwrap_or(FRAC_PI_2),
    };
    if !(field.b_ac_t.is_finite() && field.b_ac_t >= 0.0) {
        issues.push(
            "field.b_ac_t",
            format!("{} must be finite and >= 0", field.b_ac_t),
        );
    }
    issues.positive("field.f_ac_hz", field.f_ac_hz);
    issues.finite("field.phi_ac_rad", field.phi_ac_rad);

    let s = &parsed.sequence;
    let family = match s.family.as_deref().map(Family::from_str) {
        None => Family::Xy8,
        Some(Ok(fam)) => fam,
        Some(Err(e)) => {
            issues.push("sequence.family", e.to_string());
            Family::Xy8
        }
    };
    let repetitions = s.repetitions.unwrap_or(1);
    if repetitions == 0 {
        issues.push("sequence.repetitions", "must be at least 1");
    }
    let pi_width_s = s.pi_width_s.unwrap_or(124e-9);
    if !(pi_width_s.is_finite() && pi_width_s >= 0.0) {
        issues.push(
            "sequence.pi_width_s",
            format!("{pi_width_s} must be finite and >= 0"),
        );
    } else if field.f_ac_hz.is_finite() && field.f_ac_hz > 0.0 && pi_width_s >= 0.5 / field.f_ac_hz
    {
        issues.push(
            "sequence.pi_width_s",
            format!(
                "{pi_width_s:e} s is not shorter than the half period {:e} s",
                0.5 / field.f_ac_hz
            ),
        );
    }
    let tau_s = match s.tau_s {
        Some(t) => {
            if !(t.is_finite() && t > pi_width_s) {
                issues.push(
                    "sequence.tau_s",
                    format!("{t} must be finite and exceed sequence.pi_width_s"),
                );
            }
            t
        }
        None => resonance_tau(field.f_ac_hz, pi_width_s).unwrap_or(f64::NAN),
    };
    let sequence = SequenceConfig {
        family,
        repetitions,
        pi_width_s,
        tau_s,
        readout: s.readout.unwrap_or_default(),
    };
    let base_spec = spec(family, repetitions.max(1));

    let sn = &parsed.sensor;
    let sensor = SensorConfig {
        gamma_e: sn.gamma_e.unwrap_or(defaults.gamma_e()),
        n_nv: sn.n_nv.unwrap_or(defaults.n_centers()),
        r0: sn.r0.unwrap_or(defaults.rates().r0),
        r1: sn.r1.unwrap_or(defaults.rates().r1),
        coherence: sn
            .coherence
            .clone()
            .unwrap_or_else(|| default_coherence(&defaults)),
    };
    issues.positive("sensor.gamma_e", sensor.gamma_e);
    if sensor.n_nv == 0 {
        issues.push("sensor.n_nv", "need at least one NV centre");
    }
    if !(sensor.r0.is_finite()
        && sensor.r1.is_finite()
        && sensor.r1 >= 0.0
        && sensor.r0 > sensor.r1)
    {
        issues.push(
            "sensor.r1",
            format!(
                "rates must satisfy r0 > r1 >= 0 (r0 = {}, r1 = {})",
                sensor.r0, sensor.r1
            ),
        );
    }
    for (i, c) in sensor.coherence.iter().enumerate() {
        if c.n == 0 {
            issues.push(format!("sensor.coherence[{i}].n"), "must be at least 1");
        }
        issues.positive(&format!("sensor.coherence[{i}].t2_s"), c.t2_s);
        issues.positive(&format!("sensor.coherence[{i}].p"), c.p);
        if let Some(r) = c.photon_ratio {
            if !(0.0..1.0).contains(&r) {
                issues.push(
                    format!("sensor.coherence[{i}].photon_ratio"),
                    format!("{r} must lie in [0, 1)"),
                );
            }
        }
    }

    let sw = &parsed.sweep;
    let values = match (&sw.values, sw.start, sw.stop) {
        (Some(v), _, _) => v.clone(),
        (None, Some(a), Some(b)) => linspace(a, b, sw.points.unwrap_or(101)),
        (None, None, None) => default_grid(scenario)
            .map(|(a, b, n)| linspace(a, b, sw.points.unwrap_or(n)))
            .unwrap_or_default(),
        _ => {
            issues.push(
                "sweep",
                "give both sweep.start and sweep.stop, or sweep.values",
            );
            Vec::new()
        }
    };
    if sw.points == Some(0) {
        issues.push("sweep.points", "must be at least 1");
    }
    if default_grid(scenario).is_some() || !values.is_empty() {
        issues.grid("sweep.values", &values);
    }
    let sequences = sw
        .sequences
        .clone()
        .unwrap_or_else(|| default_sequences(scenario, base_spec));
    if sequences.is_empty() {
        issues.push("sweep.sequences", "need at least one sequence");
    }
    for (i, sq) in sequences.iter().enumerate() {
        if sq.repetitions == 0 {
            issues.push(
                format!("sweep.sequences[{i}].repetitions"),
                "must be at least 1",
            );
        }
    }
    let amplitudes_t = sw
        .amplitudes_t
        .clone()
        .unwrap_or_else(|| default_amplitudes(scenario, field.b_ac_t, f.b_ac_t.is_some()));
    if amplitudes_t.is_empty() {
        issues.push("sweep.amplitudes_t", "need at least one amplitude");
    }
    for (i, b) in amplitudes_t.iter().enumerate() {
        if !(b.is_finite() && *b >= 0.0) {
            issues.push(
                format!("sweep.amplitudes_t[{i}]"),
                format!("{b} must be finite and >= 0"),
            );
        }
    }
    let dphi_rad = sw
        .dphi_rad
        .clone()
        .unwrap_or_else(|| vec![0.05 * PI, 0.01 * PI, -0.02 * PI, -0.05 * PI]);
    if scenario == ScenarioKind::PhaseDeviationSweep && dphi_rad.is_empty() {
        issues.push("sweep.dphi_rad", "need at least one phase shift");
    }
    for (i, d) in dphi_rad.iter().enumerate() {
        issues.finite(&format!("sweep.dphi_rad[{i}]"), *d);
    }

    // Nτ grids must leave a positive free interval between pulses.
    if matches!(
        scenario,
        ScenarioKind::TimeSweep | ScenarioKind::PhaseDeviationSweep
    ) {
        let min_n_tau = f64::from(base_spec.n_pulses()) * pi_width_s;
        if let Some(first) = values.first() {
            if *first <= min_n_tau {
                issues.push(
                    "sweep.values[0]",
                    format!("Nτ = {first:e} s leaves no free precession between pulses (needs > {min_n_tau:e} s)"),
                );
            }
        }
    }
    if scenario == ScenarioKind::CoherenceDecays && !values.is_empty() {
        for (i, sq) in sequences.iter().enumerate() {
            let min_n_tau = f64::from(sq.n_pulses()) * pi_width_s;
            if values[0] <= min_n_tau {
                issues.push(
                    "sweep.values[0]".to_string(),
                    format!(
                        "Nτ = {:e} s is too short for sweep.sequences[{i}] ({})",
                        values[0],
                        sq.label()
                    ),
                );
            }
        }
    }

    let m = &parsed.mc;
    let mc = McSettings {
        enabled: m.enabled.unwrap_or(true),
        n_measurements: m.n_measurements.unwrap_or(100_000),
        n_trials: m
            .n_trials
            .unwrap_or(if scenario == ScenarioKind::McValidate {
                1000
            } else {
                32
            }),
        n_measurements_list: m
            .n_measurements_list
            .clone()
            .unwrap_or_else(|| vec![10_000, 40_000]),
        dphi_rad: m.dphi_rad.unwrap_or(0.05 * PI),
    };
    if mc.n_measurements == 0 {
        issues.push("mc.n_measurements", "must be at least 1");
    }
    if mc.n_trials < 2 {
        issues.push("mc.n_trials", "need at least 2 trials for a spread");
    }
    if scenario == ScenarioKind::McValidate {
        if mc.n_measurements_list.is_empty() {
            issues.push("mc.n_measurements_list", "need at least one value");
        }
        if let Some(i) = mc.n_measurements_list.iter().position(|n| *n == 0) {
            issues.push(format!("mc.n_measurements_list[{i}]"), "must be at least 1");
        }
    }
    issues.finite("mc.dphi_rad", mc.dphi_rad);

    let se = &parsed.sensitivity;
    let sensitivity = SensitivityConfig {
        b_ac_t: se.b_ac_t.unwrap_or(1e-6),
        n_pulses: se.n_pulses.unwrap_or(256),
        t2_override_s: match (scenario, se.t2_override_s) {
            (_, Some(t)) => Some(t),
            (ScenarioKind::SensitivityReport, None) if se.n_pulses.is_none() => Some(1e-3),
            _ => None,
        },
        total_time_s: se
            .total_time_s
            .clone()
            .unwrap_or_else(|| (-3..=3).map(|k| 10f64.powi(k)).collect()),
    };
    issues.positive("sensitivity.b_ac_t", sensitivity.b_ac_t);
    if sensitivity.n_pulses == 0 {
        issues.push("sensitivity.n_pulses", "must be at least 1");
    }
    if let Some(t) = sensitivity.t2_override_s {
        issues.positive("sensitivity.t2_override_s", t);
    }
    if scenario == ScenarioKind::SensitivityReport {
        issues.grid("sensitivity.total_time_s", &sensitivity.total_time_s);
        if let Some(i) = sensitivity.total_time_s.iter().position(|t| *t <= 0.0) {
            issues.push(format!("sensitivity.total_time_s[{i}]"), "must be > 0");
        }
    }

    let fit = FitSettings {
        enabled: parsed.fit.enabled.unwrap_or(true),
        weighting: parsed.fit.weighting.unwrap_or_default(),
    };

    let config = ScenarioConfig {
        scenario,
        seed: overrides.seed.or(parsed.seed).unwrap_or(1),
        out_dir: overrides
            .out_dir
            .clone()
            .or(parsed.out_dir)
            .unwrap_or_else(|| PathBuf::from("out")),
        field,
        sequence,
        sensor,
        sweep: SweepConfig {
            values,
            dphi_rad,
            amplitudes_t,
            sequences,
        },
        mc,
        sensitivity,
        fit,
    };

    if issues.0.is_empty() {
        if let Err(e) = config.sensor() {
            issues.push("sensor", e.to_string());
        }
        if let Err(e) = config.base_sequence() {
            issues.push("sequence", e.to_string());
        }
    }
    if issues.0.is_empty() {
        Ok(config)
    } else {
        Err(ScenarioError::Invalid(issues.0))
    }
}

/// [`validate_config_with`] without overrides.
pub fn validate_config(raw: &str) -> Result<ScenarioConfig, ScenarioError> {
    validate_config_with(raw, &Overrides::default())
}
