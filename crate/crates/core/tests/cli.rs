use std::path::{Path, PathBuf};

use exotic_bseries::cli::{run, EXIT_INPUT, EXIT_PASS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(name)
}

fn data(name: &str) -> String {
    dir("data").join(name).to_string_lossy().into_owned()
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("exotic-bseries").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn golden(file: &str, args: &[&str]) {
    let want = std::fs::read_to_string(dir("golden").join(file)).unwrap();
    let (code, out, err) = cli(args);
    assert_eq!(code, EXIT_PASS, "{err}");
    assert_eq!(out, want, "golden {file}");
}

#[test]
fn tree_info_goldens() {
    golden("info_tau15.txt", &["trees", "info", "o(a(b#1),a(b#1),a)"]);
    golden("info_tau15.json", &["trees", "info", "o(a(b#1),a(b#1),a)", "--format", "json"]);
    golden("info_tau10.json", &["trees", "info", "o(a,a(b#1,b#1),a)", "--format", "json"]);
    golden("info_pi_third.json", &["trees", "info", "o(a(b#1),a(b#1))", "--format", "json"]);
    golden("info_sigma8.json", &["trees", "info", "o(a(b#1,b#1,b#2,b#2))", "--format", "json"]);
}

#[test]
fn enumerate_and_multi_goldens() {
    golden("enumerate_0.txt", &["trees", "enumerate", "--order", "0"]);
    golden("enumerate_2.json", &["trees", "enumerate", "--order", "2", "--format", "json"]);
    golden("multi_b2a02.json", &["multi", "info", "b.2 a0^2", "--format", "json"]);
}

#[test]
fn series_goldens() {
    let ou = data("ou_mean.json");
    let gbm = data("gbm_second_moment.json");
    for method in ["trees", "multi", "operator"] {
        golden("series_ou_mean_3.json", &["series", "expand", "--sde", &ou, "--order", "3", "--method", method]);
    }
    golden("series_gbm_0.json", &["series", "expand", "--sde", &gbm, "--order", "0", "--method", "operator"]);
}

#[test]
fn json_outputs_parse() {
    let (_, out, _) = cli(&["trees", "info", "o(a(b#1),a(b#1),a)", "--format", "json"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["symmetry"], "2");
    assert_eq!(v["tree_factorial"], "15");
    assert_eq!(v["cm_weight"], "4");
    let (_, out, _) = cli(&["trees", "enumerate", "--order", "3", "--rule", "a:1,b:0,root:1", "--format", "json"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let counts: Vec<u64> = v["levels"].as_array().unwrap().iter().map(|l| l["count"].as_u64().unwrap()).collect();
    assert_eq!(counts, [1, 1, 1, 1]);
}

#[test]
fn input_errors_exit_two() {
    let (code, _, err) = cli(&["trees", "info", "o(a,"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("rule"), "{err}");
    let (code, _, _) = cli(&["trees", "info", "o(b#1)"]);
    assert_eq!(code, EXIT_INPUT);
    let (code, _, _) = cli(&["multi", "info", "b.x"]);
    assert_eq!(code, EXIT_INPUT);
    let (code, _, _) = cli(&["series", "expand", "--sde", "/nonexistent.json", "--order", "2"]);
    assert_eq!(code, EXIT_INPUT);
    let ou = data("ou_mean_float.json");
    let (code, _, err) = cli(&["mc", "--sde", &ou, "--t", "0.2", "--paths", "50"]);
    assert_eq!(code, EXIT_INPUT, "{err}");
    let (code, _, _) = cli(&["frobnicate"]);
    assert_eq!(code, EXIT_INPUT);
    let (code, out, _) = cli(&["--help"]);
    assert_eq!(code, EXIT_PASS);
    assert!(out.contains("Usage"));
}

fn random_spec(rng: &mut ChaCha8Rng) -> String {
    let mut poly = || {
        let deg = rng.random_range(0..=3usize);
        let cs: Vec<String> =
            (0..=deg).map(|_| format!("\"{}/{}\"", rng.random_range(-4..=4), rng.random_range(1..=3))).collect();
        format!("{{\"kind\":\"poly\",\"coeffs\":[{}]}}", cs.join(","))
    };
    let (a, b, f) = (poly(), poly(), poly());
    format!("{{\"u0\":\"1/2\",\"mode\":\"exact\",\"alpha\":{a},\"beta\":{b},\"f\":{f}}}")
}

#[test]
fn compare_random_specs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..20 {
        let path = tmp.path().join(format!("spec{i}.json"));
        std::fs::write(&path, random_spec(&mut rng)).unwrap();
        let (code, out, err) = cli(&["series", "compare", "--sde", path.to_str().unwrap(), "--order", "4"]);
        assert_eq!(code, EXIT_PASS, "{err}");
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["agree"], true);
    }
}

#[test]
fn verify_reports_json_lines() {
    let (code, out, _) = cli(&["verify", "--max-order", "4"]);
    assert_eq!(code, EXIT_PASS);
    for line in out.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["status"], "pass", "{line}");
        assert_eq!(v["max_order"], 4);
    }
    assert!(out.lines().count() >= 16);
}

#[test]
fn mc_ou_mean_passes() {
    let ou = data("ou_mean_float.json");
    let (code, out, err) = cli(&["mc", "--sde", &ou, "--t", "0.2", "--seed", "1"]);
    assert_eq!(code, EXIT_PASS, "{err}{out}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["status"], "pass");
    assert_eq!(v["paths"], 100_000);
    let diff = v["difference"].as_f64().unwrap();
    assert!(diff.abs() <= v["tolerance"].as_f64().unwrap());
}

#[test]
fn mc_exact_spec_and_derivs() {
    let ou = data("ou_mean.json");
    let (code, out, _) = cli(&["mc", "--sde", &ou, "--t", "0.2", "--paths", "2000"]);
    assert_eq!(code, EXIT_PASS);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["series_value"].as_f64().unwrap() - (-0.2f64).exp()).abs() < 1e-8);
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("derivs.json");
    let spec = r#"{"u0":"1","mode":"float","alpha":{"kind":"derivs","values":["0","-1","0","0","0","0","0","0","0","0","0","0","0"]},"beta":{"kind":"poly","coeffs":["1"]},"f":{"kind":"poly","coeffs":["0","1"]}}"#;
    std::fs::write(&path, spec).unwrap();
    let (code, _, err) = cli(&["mc", "--sde", path.to_str().unwrap(), "--t", "0.2", "--paths", "200"]);
    assert_eq!(code, EXIT_INPUT, "{err}");
    assert!(err.contains("pointwise"), "{err}");
}
