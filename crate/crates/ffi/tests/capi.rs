use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use acmag_ffi::*;

struct Fixture {
    field: *mut AcmagField,
    seq: *mut AcmagSequence,
    sensor: *mut AcmagSensor,
}

impl Fixture {
    fn reference() -> Self {
        let mut f = Fixture {
            field: ptr::null_mut(),
            seq: ptr::null_mut(),
            sensor: ptr::null_mut(),
        };
        unsafe {
            assert_eq!(
                acmag_field_new(0.74e-6, 200e3, std::f64::consts::FRAC_PI_2, &mut f.field),
                AcmagStatus::Ok
            );
            assert_eq!(
                acmag_sequence_new_resonant(AcmagFamily::Xy8, 1, 200e3, 124e-9, &mut f.seq),
                AcmagStatus::Ok
            );
            assert_eq!(acmag_sensor_default(&mut f.sensor), AcmagStatus::Ok);
        }
        f
    }
}

impl Drop for Fixture {
    fn drop(&mut self) {
        unsafe {
            acmag_field_free(self.field);
            acmag_sequence_free(self.seq);
            acmag_sensor_free(self.sensor);
        }
    }
}

fn last_error() -> String {
    let p = acmag_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn matches_core_library() {
    let fx = Fixture::reference();
    let field = acmag::AcField::new(0.74e-6, 200e3, std::f64::consts::FRAC_PI_2).unwrap();
    let tau = acmag::resonance_tau(200e3, 124e-9).unwrap();
    let seq = acmag::build_sequence(acmag::Family::Xy8, 1, tau, 124e-9).unwrap();
    let sensor = acmag::SensorEnsemble::default();

    let mut phase = AcmagPhase::default();
    let mut signal = 0.0;
    let mut variance = 0.0;
    unsafe {
        assert_eq!(
            acmag_phase(fx.field, fx.seq, fx.sensor, &mut phase),
            AcmagStatus::Ok
        );
        assert_eq!(
            acmag_signal(fx.field, fx.seq, fx.sensor, &mut signal),
            AcmagStatus::Ok
        );
        assert_eq!(
            acmag_variance(fx.field, fx.seq, fx.sensor, &mut variance),
            AcmagStatus::Ok
        );
    }
    let expected = acmag::phase::phase(&field, &seq, sensor.gamma_e()).unwrap();
    assert_eq!(phase.phi, expected.phi);
    assert!(phase.at_resonance);
    assert_eq!(
        signal,
        acmag::signal::expected_signal(&field, &seq, &sensor).unwrap()
    );
    assert_eq!(
        variance,
        acmag::signal::measurement_variance(&field, &seq, &sensor).unwrap()
    );
}

#[test]
fn oracles_agree_with_closed_form() {
    let fx = Fixture::reference();
    let (mut phase, mut quad, mut signal, mut density) = (AcmagPhase::default(), 0.0, 0.0, 0.0);
    unsafe {
        acmag_phase(fx.field, fx.seq, fx.sensor, &mut phase);
        assert_eq!(
            acmag_quadrature_phase(fx.field, fx.seq, fx.sensor, 400, &mut quad),
            AcmagStatus::Ok
        );
        acmag_signal(fx.field, fx.seq, fx.sensor, &mut signal);
        assert_eq!(
            acmag_density_signal(fx.field, fx.seq, fx.sensor, &mut density),
            AcmagStatus::Ok
        );
    }
    assert!((quad - phase.phi).abs() < 1e-8 * phase.phi.abs().max(1.0));
    assert!((density - signal).abs() < 1e-10);
}

#[test]
fn deviation_snr_and_limits() {
    let fx = Fixture::reference();
    let (mut lin, mut exact, mut full, mut approx, mut limit, mut eta) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(
            acmag_signal_deviation(fx.field, fx.seq, fx.sensor, 0.01, &mut lin, &mut exact),
            AcmagStatus::Ok
        );
        assert_eq!(
            acmag_snr(
                fx.field,
                fx.seq,
                fx.sensor,
                0.05,
                10_000,
                &mut full,
                &mut approx
            ),
            AcmagStatus::Ok
        );
        assert_eq!(
            acmag_phase_shift_limit(fx.field, fx.seq, fx.sensor, &mut limit),
            AcmagStatus::Ok
        );
        assert_eq!(
            acmag_phase_sensitivity(fx.sensor, 1e-6, 256, &mut eta),
            AcmagStatus::Ok
        );
    }
    assert!((lin - exact).abs() < 0.05 * exact.abs());
    assert!(full > 0.0 && approx > 0.0);
    assert!(limit > 0.5 && limit < 0.7);
    assert!(eta > 0.0);
}

#[test]
fn sequence_handles() {
    let fx = Fixture::reference();
    let mut info = AcmagSequenceInfo::default();
    let mut tau = 0.0;
    unsafe {
        assert_eq!(acmag_sequence_info(fx.seq, &mut info), AcmagStatus::Ok);
        assert_eq!(
            acmag_resonance_tau(200e3, 124e-9, &mut tau),
            AcmagStatus::Ok
        );
        assert_eq!(acmag_sequence_set_tau(fx.seq, 2.0 * tau), AcmagStatus::Ok);
        assert_eq!(
            acmag_sequence_set_readout(fx.seq, AcmagReadout::InPhase),
            AcmagStatus::Ok
        );
    }
    assert_eq!(info.n_pulses, 8);
    assert_eq!(info.tau, tau);
    assert!((info.tau + info.pi_width - 2.5e-6).abs() < 1e-18);

    let mut after = AcmagSequenceInfo::default();
    unsafe { acmag_sequence_info(fx.seq, &mut after) };
    assert_eq!(after.tau, 2.0 * tau);
}

#[test]
fn error_codes_and_messages() {
    let fx = Fixture::reference();
    let mut field = ptr::null_mut();
    let mut out = 0.0;
    unsafe {
        assert_eq!(
            acmag_field_new(1e-6, -1.0, 0.0, &mut field),
            AcmagStatus::InvalidArgument
        );
        assert!(field.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(
            acmag_signal(ptr::null(), fx.seq, fx.sensor, &mut out),
            AcmagStatus::NullPointer
        );
        assert!(last_error().contains("field"));
        assert_eq!(
            acmag_signal(fx.field, fx.seq, fx.sensor, ptr::null_mut()),
            AcmagStatus::NullPointer
        );

        let mut sensor = ptr::null_mut();
        assert_eq!(
            acmag_sensor_new(1.76e11, 60, 0.5, 0.45, &mut sensor),
            AcmagStatus::Ok
        );
        assert_eq!(
            acmag_signal(fx.field, fx.seq, sensor, &mut out),
            AcmagStatus::MissingCoherence
        );
        assert_eq!(
            acmag_sensor_set_coherence(sensor, 8, 200e-6, 1.0, -1.0),
            AcmagStatus::Ok
        );
        assert_eq!(
            acmag_signal(fx.field, fx.seq, sensor, &mut out),
            AcmagStatus::Ok
        );
        assert!(acmag_last_error_message().is_null());
        acmag_sensor_free(sensor);

        let mut odd = ptr::null_mut();
        assert_eq!(
            acmag_sequence_new_resonant(AcmagFamily::Hahn, 1, 200e3, 124e-9, &mut odd),
            AcmagStatus::Ok
        );
        let mut phase = AcmagPhase::default();
        assert_eq!(
            acmag_phase(fx.field, odd, fx.sensor, &mut phase),
            AcmagStatus::OddPulseCountAtResonance
        );
        acmag_sequence_free(odd);

        acmag_field_free(ptr::null_mut());
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(acmag_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn runs_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let config = CString::new("scenario = \"sensitivity-report\"\n").unwrap();
    let status = unsafe { acmag_run_scenario(config.as_ptr(), out.as_ptr(), 1) };
    assert_eq!(status, AcmagStatus::Ok);
    assert!(dir.path().join("manifest.json").exists());
    assert!(dir.path().join("sensitivity.csv").exists());

    let bad = CString::new("scenario = \"nope\"\n").unwrap();
    let status = unsafe { acmag_run_scenario(bad.as_ptr(), out.as_ptr(), 1) };
    assert_eq!(status, AcmagStatus::InvalidConfig);
    assert!(last_error().contains("scenario"));

    let unknown = CString::new("[field]\nbogus = 1\n").unwrap();
    let status = unsafe { acmag_run_scenario(unknown.as_ptr(), ptr::null(), 1) };
    assert_eq!(status, AcmagStatus::InvalidConfig);
}

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/acmag.h");
    assert!(header.exists(), "header not generated");
    let text = std::fs::read_to_string(&header).unwrap();
    for symbol in [
        "acmag_field_new",
        "acmag_run_scenario",
        "ACMAG_STATUS_NULL_POINTER",
        "typedef struct AcmagField AcmagField",
    ] {
        assert!(text.contains(symbol), "header lacks {symbol}");
    }

    if Command::new("gcc").arg("--version").output().is_err() {
        eprintln!("gcc not available; skipping C link check");
        return;
    }
    let lib = target_dir().join("libacmag_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let compile = Command::new("gcc")
        .arg("-std=c11")
        .arg("-D_DEFAULT_SOURCE")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(
        compile.status.success(),
        "{}",
        String::from_utf8_lossy(&compile.stderr)
    );
    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.starts_with(env!("CARGO_PKG_VERSION")), "{stdout}");
}
