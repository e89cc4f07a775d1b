use std::ffi::{CStr, CString};
use std::ptr;

use wienerlab_ffi::*;

fn last_error() -> String {
    let p = wl_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(wl_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn pathset_round_trip() {
    let model = CString::new(r#"{"kind":"fbm","hurst":0.7,"horizon":1.0}"#).unwrap();
    let mut set = ptr::null_mut();
    let st = unsafe { wl_simulate(model.as_ptr(), 64, 5, 11, &mut set) };
    assert_eq!(st, WlStatus::Ok);
    unsafe {
        assert_eq!(wl_pathset_n_paths(set), 5);
        assert_eq!(wl_pathset_n_points(set), 65);
        let mut t = vec![0.0; 65];
        assert_eq!(wl_pathset_times(set, t.as_mut_ptr(), t.len()), WlStatus::Ok);
        assert_eq!(t[0], 0.0);
        assert!((t[64] - 1.0).abs() < 1e-12);
        let mut v = vec![0.0; 65];
        assert_eq!(wl_pathset_values(set, 4, v.as_mut_ptr(), v.len()), WlStatus::Ok);
        assert_eq!(v[0], 0.0);
        assert!(v.iter().any(|x| *x != 0.0));
        let mut small = vec![0.0; 10];
        assert_eq!(wl_pathset_values(set, 0, small.as_mut_ptr(), small.len()), WlStatus::BufferTooSmall);
        assert_eq!(wl_pathset_values(set, 5, v.as_mut_ptr(), v.len()), WlStatus::InvalidArgument);
        wl_pathset_free(set);
    }
}

#[test]
fn simulation_is_deterministic() {
    let model = CString::new(r#"{"kind":"wiener","horizon":2.0}"#).unwrap();
    let run = || unsafe {
        let mut set = ptr::null_mut();
        assert_eq!(wl_simulate(model.as_ptr(), 16, 3, 5, &mut set), WlStatus::Ok);
        let mut v = vec![0.0; 17];
        wl_pathset_values(set, 2, v.as_mut_ptr(), 17);
        wl_pathset_free(set);
        v
    };
    assert_eq!(run(), run());
}

#[test]
fn bad_inputs_report_errors() {
    let mut set = ptr::null_mut();
    let st = unsafe { wl_simulate(ptr::null(), 8, 1, 0, &mut set) };
    assert_eq!(st, WlStatus::NullPointer);
    assert!(last_error().contains("null"));

    let bad = CString::new(r#"{"kind":"fbm","hurst":1.5,"horizon":1.0}"#).unwrap();
    let st = unsafe { wl_simulate(bad.as_ptr(), 8, 1, 0, &mut set) };
    assert_eq!(st, WlStatus::InvalidArgument);
    assert!(set.is_null());

    let junk = CString::new("not json").unwrap();
    assert_eq!(unsafe { wl_simulate(junk.as_ptr(), 8, 1, 0, &mut set) }, WlStatus::InvalidArgument);
    unsafe {
        wl_pathset_free(ptr::null_mut());
        wl_kernel_free(ptr::null_mut());
        assert_eq!(wl_pathset_n_paths(ptr::null()), 0);
    }
}

#[test]
fn kernel_entropy_and_profile() {
    let theta = CString::new(r#"{"kind":"constant","theta0":0.3,"horizon":1.0}"#).unwrap();
    let mut k = ptr::null_mut();
    assert_eq!(unsafe { wl_kernel_sample(theta.as_ptr(), 32, 4000, 3, &mut k) }, WlStatus::Ok);
    unsafe {
        assert_eq!(wl_kernel_len(k), 4000);
        let mut logs = vec![0.0; 4000];
        assert_eq!(wl_kernel_log_phi(k, logs.as_mut_ptr(), logs.len()), WlStatus::Ok);
        let mean_phi = logs.iter().map(|l| l.exp()).sum::<f64>() / 4000.0;
        assert!((mean_phi - 1.0).abs() < 0.05);

        let (mut h, mut se, mut div) = (0.0, 0.0, true);
        let st = wl_kernel_entropy(k, WlEntropyDirection::PStarP, &mut h, &mut se, &mut div);
        assert_eq!(st, WlStatus::Ok);
        assert!(!div);
        assert!((h - 0.045).abs() < 5.0 * se + 1e-3, "{h} ± {se}");

        let mut p = WlProfileSummary::default();
        assert_eq!(wl_optimal_profile(k, WlUtilityKind::Log, 0.0, 1.0, &mut p), WlStatus::Ok);
        assert!(p.c_star > 0.0);
        assert!((p.expected_utility - p.closed_form).abs() < 5.0 * p.standard_error + 1e-3);
        assert_eq!(wl_optimal_profile(k, WlUtilityKind::Power, 1.5, 1.0, &mut p), WlStatus::InvalidArgument);
        wl_kernel_free(k);
    }
}

#[test]
fn scalar_functions() {
    let n = 129;
    let f: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    let mut out = 0.0;
    unsafe {
        assert_eq!(wl_gls_integral(f.as_ptr(), f.as_ptr(), n, 1.0, 0.3, &mut out), WlStatus::Ok);
        assert!((out - 0.5).abs() < 1e-3, "{out}");
        assert_eq!(wl_holder_norm(f.as_ptr(), n, 1.0, 0.3, &mut out), WlStatus::Ok);
        assert!(out > 0.0);
        assert_eq!(wl_lambda_alpha(f.as_ptr(), n, 1.0, 0.3, &mut out), WlStatus::Ok);
        assert!(out > 0.0);
        assert_eq!(wl_gls_integral(f.as_ptr(), f.as_ptr(), n, 1.0, 1.3, &mut out), WlStatus::InvalidArgument);

        assert_eq!(wl_variance_blowup_bound(0.7, 1.0, 1e-3, &mut out), WlStatus::Ok);
        assert_eq!(out, wienerlab::pricing::variance_blowup_bound(0.7, 1.0, 1e-3).unwrap());
        assert_eq!(wl_variance_blowup_bound(0.4, 1.0, 1e-3, &mut out), WlStatus::InvalidArgument);

        let mut b = WlHolderBudget::default();
        assert_eq!(wl_holder_budget(1.0, WlLemmaCase::Bounded, 0.0, 0.7, 0.6, &mut b), WlStatus::Ok);
        assert_eq!(wl_holder_budget(1.0, WlLemmaCase::Bounded, 0.0, 0.7, 0.3, &mut b), WlStatus::InvalidArgument);
        assert!(last_error().to_lowercase().contains("0.3"));
    }
}

#[test]
fn self_replication_residuals() {
    let mut res = vec![0.0; 6];
    let mut never = true;
    let st = unsafe { wl_replicate_self(0.7, 1 << 12, 5, 7, res.as_mut_ptr(), res.len(), &mut never) };
    assert_eq!(st, WlStatus::Ok);
    if !never {
        assert!(res[5] <= res[0] + 1e-12);
    }
    assert!(res.iter().all(|r| r.is_finite() && *r >= 0.0));
}

#[test]
fn header_declares_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/wienerlab.h")).unwrap();
    assert!(header.contains("#ifndef WIENERLAB_H"));
    for name in [
        "wl_last_error_message",
        "wl_version",
        "wl_simulate",
        "wl_pathset_free",
        "wl_kernel_sample",
        "wl_kernel_entropy",
        "wl_optimal_profile",
        "wl_gls_integral",
        "wl_replicate_self",
        "WL_STATUS_OK",
        "typedef struct WlPathSet WlPathSet",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::TempDir::new().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"wienerlab.h\"\nint main(void) { WlPathSet *s = 0; return wl_pathset_n_paths(s) == 0 ? WL_STATUS_OK : 1; }\n",
    )
    .unwrap();
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
