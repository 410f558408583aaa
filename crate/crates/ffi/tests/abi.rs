use std::ffi::CStr;
use std::ptr;

use qpme::ensemble::sample_fields;
use qpme::observables::entanglement_asymmetry;
use qpme::state::tilted_ferromagnet;
use qpme::{decompose_model, ModelParams};
use qpme_ffi::*;

fn last_error() -> String {
    let p = qpme_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Handles {
    model: *mut QpmeModel,
    spectrum: *mut QpmeSpectrum,
    state: *mut QpmeState,
}

impl Drop for Handles {
    fn drop(&mut self) {
        unsafe {
            qpme_state_free(self.state);
            qpme_spectrum_free(self.spectrum);
            qpme_model_free(self.model);
        }
    }
}

fn setup(sites: usize, gamma: f64, theta: f64) -> Handles {
    let mut fields = vec![0.0; sites];
    let mut h = Handles {
        model: ptr::null_mut(),
        spectrum: ptr::null_mut(),
        state: ptr::null_mut(),
    };
    unsafe {
        assert_eq!(qpme_sample_fields(5, 1, sites, 1.0, fields.as_mut_ptr()), QpmeStatus::Ok);
        assert_eq!(qpme_model_new(sites, gamma, -0.5, fields.as_ptr(), true, &mut h.model), QpmeStatus::Ok);
        assert_eq!(qpme_spectrum_new(h.model, &mut h.spectrum), QpmeStatus::Ok);
        assert_eq!(qpme_state_new_tilted(QpmeStateKind::Ferro, sites, theta, &mut h.state), QpmeStatus::Ok);
    }
    h
}

#[test]
fn fields_and_spectrum_match_the_library() {
    let sites = 6;
    let h = setup(sites, 0.4, 0.3);
    let p = ModelParams::new(sites, 0.4).with_fields(sample_fields(5, 1, sites, 1.0));
    let want = decompose_model(&p).unwrap();
    unsafe {
        let dim = qpme_spectrum_dim(h.spectrum);
        assert_eq!(dim, 64);
        let mut ev = vec![0.0; dim];
        assert_eq!(qpme_spectrum_eigenvalues(h.spectrum, ev.as_mut_ptr(), dim), QpmeStatus::Ok);
        assert_eq!(ev, want.eigenvalues());

        let mut r = 0.0;
        assert_eq!(qpme_level_spacing_ratio(ev.as_ptr(), dim, &mut r), QpmeStatus::Ok);
        assert!(r > 0.0 && r < 1.0);

        let mut transformed = ptr::null_mut();
        assert_eq!(qpme_spectrum_new_transformed(h.model, 0.7, &mut transformed), QpmeStatus::Ok);
        let mut ev2 = vec![0.0; dim];
        assert_eq!(qpme_spectrum_eigenvalues(transformed, ev2.as_mut_ptr(), dim), QpmeStatus::Ok);
        qpme_spectrum_free(transformed);
        for (a, b) in ev.iter().zip(&ev2) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn observables_and_propagation() {
    let sites = 6;
    let theta = 0.2 * std::f64::consts::PI;
    let h = setup(sites, 1.0, theta);
    unsafe {
        let mut ea = 0.0;
        assert_eq!(qpme_entanglement_asymmetry(h.state, 2, &mut ea), QpmeStatus::Ok);
        let want = entanglement_asymmetry(&tilted_ferromagnet(sites, theta).unwrap(), 2).unwrap();
        assert_eq!(ea, want);

        let mut e0 = 0.0;
        assert_eq!(qpme_energy(h.state, h.spectrum, &mut e0), QpmeStatus::Ok);
        let mut later = ptr::null_mut();
        assert_eq!(qpme_propagate(h.state, h.spectrum, 3.0, QpmeTimeKind::Real, &mut later), QpmeStatus::Ok);
        let mut e1 = 0.0;
        assert_eq!(qpme_energy(later, h.spectrum, &mut e1), QpmeStatus::Ok);
        assert!((e0 - e1).abs() < 1e-9);

        let mut probs = vec![0.0; sites + 1];
        assert_eq!(qpme_charge_probabilities(later, probs.as_mut_ptr(), sites + 1), QpmeStatus::Ok);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (mut v0, mut v1) = (0.0, 0.0);
        assert_eq!(qpme_charge_variance(h.state, &mut v0), QpmeStatus::Ok);
        assert_eq!(qpme_charge_variance(later, &mut v1), QpmeStatus::Ok);
        assert!((v0 - v1).abs() < 1e-9);
        qpme_state_free(later);

        let mut cooled = ptr::null_mut();
        assert_eq!(qpme_propagate(h.state, h.spectrum, 2.0, QpmeTimeKind::Imaginary, &mut cooled), QpmeStatus::Ok);
        let mut e2 = 0.0;
        assert_eq!(qpme_energy(cooled, h.spectrum, &mut e2), QpmeStatus::Ok);
        assert!(e2 < e0);
        qpme_state_free(cooled);
    }
}

#[test]
fn amplitudes_round_trip() {
    let re = [3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 4.0];
    let im = [0.0; 8];
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(qpme_state_new_amplitudes(re.as_ptr(), im.as_ptr(), 8, &mut s), QpmeStatus::Ok);
        assert_eq!(qpme_state_dim(s), 8);
        let (mut r, mut i) = ([0.0; 8], [0.0; 8]);
        assert_eq!(qpme_state_amplitudes(s, r.as_mut_ptr(), i.as_mut_ptr(), 8), QpmeStatus::Ok);
        assert!((r[0] - 0.6).abs() < 1e-15 && (r[7] - 0.8).abs() < 1e-15);
        assert_eq!(
            qpme_state_amplitudes(s, r.as_mut_ptr(), i.as_mut_ptr(), 4),
            QpmeStatus::DimensionMismatch
        );
        qpme_state_free(s);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(qpme_model_new(2, 1.0, -0.5, ptr::null(), true, &mut m), QpmeStatus::InvalidArgument);
        assert!(m.is_null());
        assert!(last_error().contains("3 sites"));

        assert_eq!(qpme_spectrum_new(ptr::null(), &mut ptr::null_mut()), QpmeStatus::NullPointer);
        assert!(last_error().contains("model"));

        let mut out = 0.0;
        assert_eq!(qpme_level_spacing_ratio([0.0, 1.0].as_ptr(), 2, &mut out), QpmeStatus::InvalidArgument);

        let zeros = [0.0; 4];
        let mut s = ptr::null_mut();
        assert_eq!(
            qpme_state_new_amplitudes(zeros.as_ptr(), zeros.as_ptr(), 4, &mut s),
            QpmeStatus::Numerical
        );

        // null handles are accepted by the free functions
        qpme_model_free(ptr::null_mut());
        qpme_spectrum_free(ptr::null_mut());
        qpme_state_free(ptr::null_mut());
        assert_eq!(qpme_state_dim(ptr::null()), 0);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(qpme_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/qpme.h")).unwrap();
    for symbol in [
        "QPME_H",
        "typedef struct QpmeModel QpmeModel",
        "typedef struct QpmeSpectrum QpmeSpectrum",
        "typedef struct QpmeState QpmeState",
        "QPME_STATUS_OK = 0",
        "QPME_STATUS_PANIC = 5",
        "QPME_TIME_KIND_IMAGINARY",
        "QPME_STATE_KIND_NEEL",
        "qpme_last_error(void)",
        "qpme_version(void)",
        "qpme_sample_fields(",
        "qpme_model_new(",
        "qpme_model_free(",
        "qpme_spectrum_new(",
        "qpme_spectrum_new_transformed(",
        "qpme_spectrum_free(",
        "qpme_spectrum_dim(",
        "qpme_spectrum_eigenvalues(",
        "qpme_state_new_tilted(",
        "qpme_state_new_amplitudes(",
        "qpme_state_free(",
        "qpme_state_dim(",
        "qpme_state_amplitudes(",
        "qpme_propagate(",
        "qpme_energy(",
        "qpme_entanglement_asymmetry(",
        "qpme_charge_variance(",
        "qpme_charge_probabilities(",
        "qpme_level_spacing_ratio(",
    ] {
        assert!(header.contains(symbol), "header lacks {symbol}");
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/qpme.h");
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c", header])
        .status()
        .expect("C compiler available");
    assert!(status.success());
}
