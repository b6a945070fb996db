use std::f64::consts::PI;
use std::path::PathBuf;

use residue_core::{Complex64, ComplexPolynomial, EpsilonSchedule, HoloMap};
use residue_lab::rate::{reference_value, ReferenceSource};
use residue_lab::{
    fit_rate, membership_test, run_sweep, verify_suite, ExperimentConfig, LabError, SweepTable,
};

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn simple_pole() -> ExperimentConfig {
    ExperimentConfig::from_json(
        r#"{
            "kind": "sweep",
            "dimension": 1,
            "map": ["z1"],
            "p": 1,
            "form": {"psi": "1 + z1*zb1", "bump": [0.5, 1.0]},
            "schedule": {"type": "diagonal", "q": 1, "delta_grid": [1e-2, 1e-4, 1e-6]},
            "quadrature": {"rel_tol": 1e-8, "abs_tol": 1e-12}
        }"#,
    )
    .unwrap()
}

#[test]
fn shipped_configs_round_trip() {
    for name in ["monomial_sweep.json", "passare_tsikh_tube.json"] {
        let cfg = ExperimentConfig::load(config_path(name)).unwrap();
        cfg.validate().unwrap();
        let again = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg, "{name}");
        assert_eq!(again.to_json(), cfg.to_json());
    }
}

#[test]
fn unknown_config_fields_are_rejected() {
    let mut v: serde_json::Value = serde_json::from_str(&simple_pole().to_json()).unwrap();
    v["tolerance"] = 1.0.into();
    assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
}

#[test]
fn simple_pole_sweep_tends_to_two_pi_i() {
    let t = run_sweep(&simple_pole()).unwrap();
    assert_eq!(t.rows.len(), 3);
    let target = Complex64::new(0.0, 2.0 * PI);
    let errs: Vec<f64> = t.rows.iter().map(|r| (r.value - target).norm()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[2] < 1e-4, "{errs:?}");
    assert!(t.rows.iter().all(|r| r.converged && r.ok()));
}

#[test]
fn sweep_csv_is_deterministic() {
    let cfg = simple_pole();
    let a = run_sweep(&cfg).unwrap().to_csv(cfg.record_timing);
    let b = run_sweep(&cfg).unwrap().to_csv(cfg.record_timing);
    assert_eq!(a, b);
    let back = SweepTable::read_csv(a.as_bytes()).unwrap();
    assert_eq!(back.to_csv(false), a);
}

#[test]
fn empty_schedule_gives_empty_table() {
    let mut cfg = simple_pole();
    cfg.schedule = None;
    let t = run_sweep(&cfg).unwrap();
    assert!(t.is_empty() && t.limit_estimate().is_none());
    cfg.schedule = Some(EpsilonSchedule::diagonal(1, vec![]));
    assert!(run_sweep(&cfg).unwrap().is_empty());
}

#[test]
fn increasing_grid_is_rejected() {
    let mut cfg = simple_pole();
    cfg.schedule = Some(EpsilonSchedule::diagonal(1, vec![1e-4, 1e-2]));
    assert!(run_sweep(&cfg).is_err());
}

#[test]
fn monomial_sweep_rate_against_oracle() {
    let cfg = ExperimentConfig::load(config_path("monomial_sweep.json")).unwrap();
    let t = run_sweep(&cfg).unwrap();
    let (reference, _, source) =
        reference_value(&cfg.holomap().unwrap(), &cfg.test_form().unwrap(), &t).unwrap();
    assert_eq!(source, ReferenceSource::Oracle);
    let fit = fit_rate(&t, reference).unwrap();
    assert!(fit.omega > 0.0 && fit.r_squared > 0.9, "{fit:?}");
}

#[test]
fn membership_matches_divisibility() {
    let f = HoloMap::parse(2, &["z1^3", "z2"], 2).unwrap();
    for (h, member) in [
        ("z1^3 + 2*z2", true),
        ("z1^2 + z2", false),
        ("z1*z2^3", true),
        ("1", false),
        ("z1^2 - z1^3", false),
    ] {
        let r = membership_test(&ComplexPolynomial::parse(h, 2).unwrap(), &f, 4, None).unwrap();
        assert_eq!(r.member, member, "{h}: {r:?}");
    }
}

#[test]
fn membership_rejects_out_of_scope_input() {
    let f = HoloMap::parse(2, &["z1^2", "z2^2 + z1"], 2).unwrap();
    let h = ComplexPolynomial::parse("z1", 2).unwrap();
    assert!(matches!(
        membership_test(&h, &f, 4, None),
        Err(LabError::OutOfScope(_))
    ));
}

#[test]
fn verify_suites() {
    assert!(matches!(
        verify_suite("nonsense"),
        Err(LabError::Unknown { .. })
    ));
    let r = verify_suite("kernels").unwrap();
    assert!(!r.entries.is_empty() && r.all_passed(), "{r:?}");
}
