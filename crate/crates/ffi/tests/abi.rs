use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use ris_isac_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ris_isac_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn desk() -> *mut RisIsacScenario {
    let mut sc = ptr::null_mut();
    let s = unsafe { ris_isac_scenario_from_preset(RIS_ISAC_PRESET_DESK, 0, &mut sc) };
    assert_eq!(s, RisIsacStatus::Ok);
    sc
}

fn run(sc: *const RisIsacScenario, scheme: u32, seed: u64) -> (RisIsacStatus, *mut RisIsacReport) {
    let mut rep = ptr::null_mut();
    let s = unsafe { ris_isac_run(sc, scheme, seed, &mut rep) };
    (s, rep)
}

#[test]
fn proposed_run_round_trip() {
    let sc = desk();
    let (s, rep) = run(sc, RIS_ISAC_SCHEME_PROPOSED, 2);
    assert_eq!(s, RisIsacStatus::Ok, "{}", last_error());
    unsafe {
        let p = ris_isac_report_final_power(rep);
        assert!(p.is_finite() && p > 0.0);
        let iters = ris_isac_report_iterations(rep) as usize;

        let mut needed = 0usize;
        let s = ris_isac_report_power_history(rep, ptr::null_mut(), 0, &mut needed);
        assert_eq!(s, RisIsacStatus::BufferTooSmall);
        assert_eq!(needed, iters);
        let mut hist = vec![0.0; needed];
        let s = ris_isac_report_power_history(rep, hist.as_mut_ptr(), hist.len(), &mut needed);
        assert_eq!(s, RisIsacStatus::Ok);
        assert_eq!(*hist.last().unwrap(), p);
        assert!(hist.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-6)));

        let mut len = 0usize;
        ris_isac_report_json(rep, ptr::null_mut(), 0, &mut len);
        let mut buf = vec![0 as std::ffi::c_char; len];
        assert_eq!(
            ris_isac_report_json(rep, buf.as_mut_ptr(), len, &mut len),
            RisIsacStatus::Ok
        );
        let text = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        assert!(text.contains("\"scheme\":\"proposed\""));

        let (mut se, mut snr) = (0.0, 0.0);
        assert_eq!(
            ris_isac_report_margins(rep, &mut se, &mut snr),
            RisIsacStatus::Ok
        );
        assert!(se >= -1e-4 && snr >= -1e-3);

        ris_isac_report_free(rep);
        ris_isac_scenario_free(sc);
    }
}

#[test]
fn no_ris_reports_zero_phases() {
    let sc = desk();
    let (s, rep) = run(sc, RIS_ISAC_SCHEME_NO_RIS, 0);
    assert_eq!(s, RisIsacStatus::Ok);
    unsafe {
        let mut n = 0usize;
        ris_isac_report_phases(rep, ptr::null_mut(), 0, &mut n);
        assert!(n > 0);
        let mut v = vec![1.0; n];
        assert_eq!(
            ris_isac_report_phases(rep, v.as_mut_ptr(), n, &mut n),
            RisIsacStatus::Ok
        );
        assert!(v.iter().all(|&x| x == 0.0));
        let why = CStr::from_ptr(ris_isac_report_stop_reason(rep));
        assert_eq!(why.to_str().unwrap(), "single-solve");
        ris_isac_report_free(rep);
        ris_isac_scenario_free(sc);
    }
}

#[test]
fn infeasible_thresholds_still_yield_report() {
    let json =
        CString::new(r#"{"preset":"desk","array_shape_bs":[1,1],"tx_bs_positions":[[0,0,30]]}"#)
            .unwrap();
    let mut sc = ptr::null_mut();
    unsafe {
        assert_eq!(
            ris_isac_scenario_from_json(json.as_ptr(), &mut sc),
            RisIsacStatus::Ok,
            "{}",
            last_error()
        );
    }
    let (s, rep) = run(sc, RIS_ISAC_SCHEME_PROPOSED, 0);
    assert_eq!(s, RisIsacStatus::Infeasible);
    assert!(!rep.is_null());
    assert!(last_error().contains("R_req"));
    unsafe {
        assert!(ris_isac_report_final_power(rep).is_nan());
        assert_eq!(
            CStr::from_ptr(ris_isac_report_stop_reason(rep))
                .to_str()
                .unwrap(),
            "infeasible"
        );
        ris_isac_report_free(rep);
        ris_isac_scenario_free(sc);
    }
}

#[test]
fn invalid_arguments_are_rejected() {
    unsafe {
        let mut sc = ptr::null_mut();
        assert_eq!(
            ris_isac_scenario_from_preset(9, 0, &mut sc),
            RisIsacStatus::InvalidArgument
        );
        assert_eq!(
            ris_isac_scenario_from_preset(0, 0, ptr::null_mut()),
            RisIsacStatus::NullPointer
        );
        let bad = CString::new("{not json").unwrap();
        assert_eq!(
            ris_isac_scenario_from_json(bad.as_ptr(), &mut sc),
            RisIsacStatus::InvalidArgument
        );
        assert!(!last_error().is_empty());

        let sc = desk();
        assert_eq!(
            ris_isac_scenario_set_thresholds(sc, -1.0, 10.0),
            RisIsacStatus::InvalidArgument
        );
        assert_eq!(
            ris_isac_scenario_set_thresholds(sc, 1.0, 5.0),
            RisIsacStatus::Ok
        );
        let mut rep = ptr::null_mut();
        assert_eq!(
            ris_isac_run_with(sc, RIS_ISAC_SCHEME_PROPOSED, 0, 0.0, 5, &mut rep),
            RisIsacStatus::InvalidArgument
        );
        assert!(rep.is_null());
        assert_eq!(
            ris_isac_run(ptr::null(), RIS_ISAC_SCHEME_PROPOSED, 0, &mut rep),
            RisIsacStatus::NullPointer
        );
        assert!(ris_isac_report_final_power(ptr::null()).is_nan());
        assert!(ris_isac_report_stop_reason(ptr::null()).is_null());
        ris_isac_report_free(ptr::null_mut());
        ris_isac_scenario_free(ptr::null_mut());
        ris_isac_scenario_free(sc);
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(ris_isac_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compiles a C program against the generated header and the static library.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    let lib = lib_dir.join("libris_isac_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let status = Command::new(std::env::var("CC").unwrap_or_else(|_| "cc".into()))
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
