//! C ABI over `acmag-core`.
//!
//! Objects are opaque heap handles created by `*_new` functions and released
//! with the matching `*_free`. Every fallible call returns an [`AcmagStatus`];
//! on failure [`acmag_last_error_message`] describes the error for the
//! calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use acmag::phase::{phase, quadrature_phase_oracle};
use acmag::scenario::{run_scenario, validate_config_with, Overrides, ScenarioError};
use acmag::{density, signal, AcField, DecouplingSequence, Error, Family, Readout, SensorEnsemble};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcmagStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    MissingCoherence = 3,
    OddPulseCountAtResonance = 4,
    OffResonance = 5,
    NotConverged = 6,
    InvalidConfig = 7,
    Io = 8,
    Panic = 9,
    Internal = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcmagFamily {
    Hahn = 0,
    Cpmg = 1,
    Xy4 = 2,
    Xy8 = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcmagReadout {
    Quadrature = 0,
    InPhase = 1,
}

/// Phase accumulation at one operating point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AcmagPhase {
    pub phi: f64,
    pub dphi_dphase: f64,
    pub at_resonance: bool,
    pub exact_formula: bool,
}

/// Timing summary of a sequence.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AcmagSequenceInfo {
    pub n_pulses: u32,
    pub tau: f64,
    pub pi_width: f64,
    pub alpha: f64,
    pub free_precession_time: f64,
    pub total_time: f64,
}

pub struct AcmagField {
    inner: AcField,
}

pub struct AcmagSequence {
    inner: DecouplingSequence,
}

pub struct AcmagSensor {
    inner: SensorEnsemble,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn status_of(e: &Error) -> AcmagStatus {
    match e {
        Error::MissingCoherence(_) => AcmagStatus::MissingCoherence,
        Error::OddPulseCountAtResonance(_) => AcmagStatus::OddPulseCountAtResonance,
        Error::OffResonance { .. } => AcmagStatus::OffResonance,
        Error::NotConverged { .. } | Error::SingularJacobian => AcmagStatus::NotConverged,
        Error::NonFiniteModel(_) | Error::MeasurementOverflow(_) => AcmagStatus::Internal,
        _ => AcmagStatus::InvalidArgument,
    }
}

fn scenario_status(e: &ScenarioError) -> AcmagStatus {
    match e {
        ScenarioError::Parse(_) | ScenarioError::Invalid(_) => AcmagStatus::InvalidConfig,
        ScenarioError::Io { .. } => AcmagStatus::Io,
        ScenarioError::Model(m) => status_of(m),
        ScenarioError::Pool(_) => AcmagStatus::Internal,
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
    Scenario(ScenarioError),
    Argument(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Scenario(e)
    }
}

/// Runs `body`, translating errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), Failure>>(body: F) -> AcmagStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            AcmagStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer passed for `{name}`"));
            AcmagStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Scenario(e))) => {
            set_error(e.to_json().to_string());
            scenario_status(&e)
        }
        Ok(Err(Failure::Argument(msg))) => {
            set_error(msg);
            AcmagStatus::InvalidArgument
        }
        Err(_) => {
            set_error("internal panic".into());
            AcmagStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn write<T>(out: *mut T, value: T, name: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn text<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Argument(format!("`{name}` is not valid UTF-8")))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

impl From<AcmagFamily> for Family {
    fn from(f: AcmagFamily) -> Self {
        match f {
            AcmagFamily::Hahn => Family::Hahn,
            AcmagFamily::Cpmg => Family::Cpmg,
            AcmagFamily::Xy4 => Family::Xy4,
            AcmagFamily::Xy8 => Family::Xy8,
        }
    }
}

/// Message for the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn acmag_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn acmag_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a field `B cos(2π f t + φ)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acmag_field_new(
    amplitude: f64,
    frequency: f64,
    initial_phase: f64,
    out: *mut *mut AcmagField,
) -> AcmagStatus {
    guard(|| {
        let inner = AcField::new(amplitude, frequency, initial_phase)?;
        write(out, boxed(AcmagField { inner }), "out")
    })
}

/// Sets the phase shift `Δφ` added to the initial phase.
///
/// # Safety
/// `field` must be a live handle from [`acmag_field_new`].
#[no_mangle]
pub unsafe extern "C" fn acmag_field_set_phase_shift(
    field: *mut AcmagField,
    phase_shift: f64,
) -> AcmagStatus {
    guard(|| {
        let f = borrow_mut(field, "field")?;
        f.inner = f.inner.with_phase_shift(phase_shift)?;
        Ok(())
    })
}

/// # Safety
/// `field` must be NULL or a handle from [`acmag_field_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn acmag_field_free(field: *mut AcmagField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Creates `family-repetitions` with pulse interval `tau` and π width `pi_width`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acmag_sequence_new(
    family: AcmagFamily,
    repetitions: u32,
    tau: f64,
    pi_width: f64,
    out: *mut *mut AcmagSequence,
) -> AcmagStatus {
    guard(|| {
        let inner = acmag::build_sequence(family.into(), repetitions, tau, pi_width)?;
        write(out, boxed(AcmagSequence { inner }), "out")
    })
}

/// Like [`acmag_sequence_new`] with `tau` chosen so that `tau + pi_width = 1/(2 frequency)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acmag_sequence_new_resonant(
    family: AcmagFamily,
    repetitions: u32,
    frequency: f64,
    pi_width: f64,
    out: *mut *mut AcmagSequence,
) -> AcmagStatus {
    guard(|| {
        let tau = acmag::resonance_tau(frequency, pi_width)?;
        let inner = acmag::build_sequence(family.into(), repetitions, tau, pi_width)?;
        write(out, boxed(AcmagSequence { inner }), "out")
    })
}

/// # Safety
/// `seq` must be a live sequence handle.
#[no_mangle]
pub unsafe extern "C" fn acmag_sequence_set_readout(
    seq: *mut AcmagSequence,
    readout: AcmagReadout,
) -> AcmagStatus {
    guard(|| {
        let s = borrow_mut(seq, "seq")?;
        s.inner = s.inner.with_readout(match readout {
            AcmagReadout::Quadrature => Readout::Quadrature,
            AcmagReadout::InPhase => Readout::InPhase,
        });
        Ok(())
    })
}

/// Replaces the pulse interval.
///
/// # Safety
/// `seq` must be a live sequence handle.
#[no_mangle]
pub unsafe extern "C" fn acmag_sequence_set_tau(seq: *mut AcmagSequence, tau: f64) -> AcmagStatus {
    guard(|| {
        let s = borrow_mut(seq, "seq")?;
        s.inner = s.inner.with_tau(tau)?;
        Ok(())
    })
}

/// # Safety
/// `seq` must be a live sequence handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acmag_sequence_info(
    seq: *const AcmagSequence,
    out: *mut AcmagSequenceInfo,
) -> AcmagStatus {
    guard(|| {
        let s = &borrow(seq, "seq")?.inner;
        let info = AcmagSequenceInfo {
            n_pulses: s.n_pulses(),
            tau: s.tau(),
            pi_width: s.pi_width(),
            alpha: s.alpha(),
            free_precession_time: s.free_precession_time(),
            total_time: s.total_time(),
        };
        write(out, info, "out")
    })
}

/// # Safety
/// `seq` must be NULL or a sequence handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn acmag_sequence_free(seq: *mut AcmagSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// Reference ensemble: contrast 0.03, photon ratio 0.917, 60 centres and the
/// measured coherence table.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acmag_sensor_default(out: *mut *mut AcmagSensor) -> AcmagStatus {
    guard(|| {
        write(
            out,
            boxed(AcmagSensor {
                inner: SensorEnsemble::default(),
            }),
            "out",
        )
    })
}

/// Ensemble with no coherence entries; add them with [`acmag_sensor_set_coherence`].
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acmag_sensor_new(
    gamma_e: f64,
    n_nv: u32,
    r0: f64,
    r1: f64,
    out: *mut *mut AcmagSensor,
) -> AcmagStatus {
    guard(|| {
        let inner = SensorEnsemble::new(gamma_e, n_nv, r0, r1)?;
        write(out, boxed(AcmagSensor { inner }), "out")
    })
}

/// Adds or replaces the `(T2, p)` entry for `n_pulses`. A negative
/// `photon_ratio` keeps the ensemble's own ratio.
///
/// # Safety
/// `sensor` must be a live sensor handle.
#[no_mangle]
pub unsafe extern "C" fn acmag_sensor_set_coherence(
    sensor: *mut AcmagSensor,
    n_pulses: u32,
    t2: f64,
    p: f64,
    photon_ratio: f64,
) -> AcmagStatus {
    guard(|| {
        let s = borrow_mut(sensor, "sensor")?;
        let ratio = (photon_ratio >= 0.0).then_some(photon_ratio);
        s.inner = s.inner.clone().with_coherence(n_pulses, t2, p, ratio)?;
        Ok(())
    })
}

/// # Safety
/// `sensor` must be NULL or a sensor handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn acmag_sensor_free(sensor: *mut AcmagSensor) {
    if !sensor.is_null() {
        drop(Box::from_raw(sensor));
    }
}

/// Pulse interval that satisfies the accumulation condition.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acmag_resonance_tau(
    frequency: f64,
    pi_width: f64,
    out: *mut f64,
) -> AcmagStatus {
    guard(|| write(out, acmag::resonance_tau(frequency, pi_width)?, "out"))
}

type Handles<'a> = (&'a AcField, &'a DecouplingSequence, &'a SensorEnsemble);

unsafe fn handles<'a>(
    field: *const AcmagField,
    seq: *const AcmagSequence,
    sensor: *const AcmagSensor,
) -> Result<Handles<'a>, Failure> {
    Ok((
        &borrow(field, "field")?.inner,
        &borrow(seq, "seq")?.inner,
        &borrow(sensor, "sensor")?.inner,
    ))
}

/// Closed-form phase and its derivative with respect to the field phase.
///
/// # Safety
/// Handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acmag_phase(
    field: *const AcmagField,
    seq: *const AcmagSequence,
    sensor: *const AcmagSensor,
    out: *mut AcmagPhase,
) -> AcmagStatus {
    guard(|| {
        let (f, s, n) = handles(field, seq, sensor)?;
        let p = phase(f, s, n.gamma_e())?;
        let result = AcmagPhase {
            phi: p.phi,
            dphi_dphase: p.dphi_dphase,
            at_resonance: p.at_resonance,
            exact_formula: p.exact_formula,
        };
        write(out, result, "out")
    })
}

/// Phase by direct quadrature with `nodes_per_half_period` Simpson nodes.
///
/// # Safety
/// Handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acmag_quadrature_phase(
    field: *const AcmagField,
    seq: *const AcmagSequence,
    sensor: *const AcmagSensor,
    nodes_per_half_period: u32,
    out: *mut f64,
) -> AcmagStatus {
    guard(|| {
        let (f, s, n) = handles(field, seq, sensor)?;
        let phi = quadrature_phase_oracle(f, s, n.gamma_e(), nodes_per_half_period as usize)?;
        write(out, phi, "out")
    })
}

/// Normalized magnetometry signal.
///
/// # Safety
/// Handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acmag_signal(
    field: *const AcmagField,
    seq: *const AcmagSequence,
    sensor: *const AcmagSensor,
    out: *mut f64,
) -> AcmagStatus {
    guard(|| {
        let (f, s, n) = handles(field, seq, sensor)?;
        write(out, signal::expected_signal(f, s, n)?, "out")
    })
}

/// Same signal obtained by propagating the density matrix.
///
/// # Safety
/// Handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acmag_density_signal(
    field: *const AcmagField,
    seq: *const AcmagSequence,
    sensor: *const AcmagSensor,
    out: *mut f64,
) -> AcmagStatus {
    guard(|| {
        let (f, s, n) = handles(field, seq, sensor)?;
        write(out, density::pipeline_signal(f, s, n)?, "out")
    })
}

/// Linear and exact signal deviations for a phase shift `dphi`.
///
/// # Safety
/// Handles must be live; both outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acmag_signal_deviation(
    field: *const AcmagField,
    seq: *const AcmagSequence,
    sensor: *const AcmagSensor,
    dphi: f64,
    out_linear: *mut f64,
    out_exact: *mut f64,
) -> AcmagStatus {
    guard(|| {
        let (f, s, n) = handles(field, seq, sensor)?;
        let linear = signal::signal_deviation_linear(f, s, n, dphi)?;
        let exact = signal::signal_deviation_exact(f, s, n, dphi)?;
        write(out_linear, linear, "out_linear")?;
        write(out_exact, exact, "out_exact")
    })
}

/// Single-centre measurement variance in photons².
///
/// # Safety
/// Handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acmag_variance(
    field: *const AcmagField,
    seq: *const AcmagSequence,
    sensor: *const AcmagSensor,
    out: *mut f64,
) -> AcmagStatus {
    guard(|| {
        let (f, s, n) = handles(field, seq, sensor)?;
        write(out, signal::measurement_variance(f, s, n)?, "out")
    })
}

/// Full and long-time-approximation SNR after `n_measurements` repetitions.
///
/// # Safety
/// Handles must be live; both outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acmag_snr(
    field: *const AcmagField,
    seq: *const AcmagSequence,
    sensor: *const AcmagSensor,
    dphi: f64,
    n_measurements: u64,
    out_full: *mut f64,
    out_approx: *mut f64,
) -> AcmagStatus {
    guard(|| {
        let (f, s, n) = handles(field, seq, sensor)?;
        let snr = signal::snr(f, s, n, dphi, n_measurements)?;
        write(out_full, snr.full, "out_full")?;
        write(out_approx, snr.approx, "out_approx")
    })
}

/// Phase sensitivity in rad/√Hz using the sensor's `T2` for `n_pulses`.
///
/// # Safety
/// `sensor` must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acmag_phase_sensitivity(
    sensor: *const AcmagSensor,
    amplitude: f64,
    n_pulses: u32,
    out: *mut f64,
) -> AcmagStatus {
    guard(|| {
        let n = &borrow(sensor, "sensor")?.inner;
        write(
            out,
            signal::phase_sensitivity(n, amplitude, n_pulses)?,
            "out",
        )
    })
}

/// Upper limit of the linear phase-shift regime on resonance.
///
/// # Safety
/// Handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn acmag_phase_shift_limit(
    field: *const AcmagField,
    seq: *const AcmagSequence,
    sensor: *const AcmagSensor,
    out: *mut f64,
) -> AcmagStatus {
    guard(|| {
        let (f, s, n) = handles(field, seq, sensor)?;
        write(out, signal::phase_shift_limit(f, s, n.gamma_e())?, "out")
    })
}

/// Validates a TOML scenario config and writes its outputs. `out_dir` may
/// be NULL to use the config's own; `threads = 0` uses every core.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string; `out_dir` NULL or one.
#[no_mangle]
pub unsafe extern "C" fn acmag_run_scenario(
    config_toml: *const c_char,
    out_dir: *const c_char,
    threads: u32,
) -> AcmagStatus {
    guard(|| {
        let raw = text(config_toml, "config_toml")?;
        let out_dir = if out_dir.is_null() {
            None
        } else {
            Some(PathBuf::from(text(out_dir, "out_dir")?))
        };
        let overrides = Overrides {
            out_dir,
            ..Overrides::default()
        };
        let config = validate_config_with(raw, &overrides)?;
        run_scenario(&config, (threads > 0).then_some(threads as usize))?;
        Ok(())
    })
}
