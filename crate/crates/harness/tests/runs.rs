use std::path::Path;

use asymflow_harness::manifest::MANIFEST_FILE;
use asymflow_harness::{report, run, RunConfig};

fn config(json: &str, out: &Path) -> RunConfig {
    let mut c = RunConfig::from_json(json).expect("valid config");
    c.out = Some(out.to_path_buf());
    c
}

fn check<'a>(m: &'a asymflow_harness::RunManifest, name: &str) -> &'a asymflow_harness::Check {
    m.checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("no check `{name}`"))
}

const RADIAL: &str = r#"{
  "name": "radial", "kind": "evolve",
  "params": {
    "conservation": false, "field_every": 0, "stationary": true,
    "step": {"cfl": 0.5, "corrector_iterations": 2, "moment_fixer": true}
  },
  "grid": {"extent": 3.0, "n": 256}, "tau": 0.1,
  "modes": ["0:1", "1:1", "2:1", "3:1", "3:2"],
  "data": {"type": "radial", "width": 0.3, "amplitude": 0.05}
}"#;

#[test]
fn radial_vortex_is_stationary() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&config(RADIAL, dir.path())).unwrap();
    assert!(m.complete);
    let c = check(&m, "stationary_over_noise_floor");
    assert!(c.passed, "{c:?}");
    let c = check(&m, "stationary_energy_drift");
    assert!(c.passed && c.value <= 1e-6, "{c:?}");
}

#[test]
fn identical_config_gives_bit_identical_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(RADIAL, dir.path());
    run(&c).unwrap();
    let first = std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap();
    run(&c).unwrap();
    let second = std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap();
    assert!(first == second, "manifests differ between identical runs");

    let mut other = c.clone();
    other.seed += 1;
    assert_ne!(c.hash(), other.hash());
}

#[test]
fn moments_manifest_reports_all_routes() {
    let dir = tempfile::tempdir().unwrap();
    let json = r#"{
      "name": "moments-small", "kind": "moments",
      "params": {
        "random_fields": 4,
        "random_grid": {"extent": 2.7, "n": 256},
        "generic_kprimes": [3]
      },
      "grid": {"extent": 2.1, "n": 512}, "seed": 7,
      "data": {"type": "generic", "spec": {"kprime": 3, "alpha": 1, "beta": 2, "epsilon": 1.0, "amplitude": 1.0}}
    }"#;
    let m = run(&config(json, dir.path())).unwrap();
    assert!(check(&m, "random_low_degree_moments").passed);
    let generic = m.results["generic"].as_array().unwrap();
    assert_eq!(generic.len(), 1);
    let r = &generic[0];
    for key in ["direct", "stokes", "stokes3", "closed_form"] {
        let v = r[key].as_f64().unwrap_or(f64::NAN);
        assert!(v.is_finite() && v != 0.0, "{key} = {v}");
    }
    let d = r["direct"].as_f64().unwrap();
    let cf = r["closed_form"].as_f64().unwrap();
    assert!(((d - cf) / cf).abs() < 1e-2, "direct {d} closed form {cf}");
}

#[test]
fn newtonian_oracle_and_report_table() {
    let dir = tempfile::tempdir().unwrap();
    let json = r#"{
      "name": "newtonian", "kind": "poisson",
      "params": {"case": "newtonian"},
      "grid": {"extent": 4.0, "n": 64}
    }"#;
    let m = run(&config(json, dir.path())).unwrap();
    assert!(check(&m, "newtonian_leading_term").passed);
    assert!(check(&m, "newtonian_far_field").passed);
    let s = report(&[dir.path().to_path_buf()]).unwrap();
    assert_eq!(s.rows.len(), 1);
    assert!(s.passed, "{}", s.render());
    assert!(s.render().contains("newtonian_leading_term"));
}
