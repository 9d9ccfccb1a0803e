use convex_toric::samplers;
use convex_toric_cli::inputs::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use std::fmt::Debug;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn input(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("inputs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convex-toric")).args(args).output().unwrap()
}

fn run_stdin(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_convex-toric"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn report(cmd: &str, file: &str, extra: &[&str]) -> (Value, i32) {
    let path = input(file);
    let mut args = vec![cmd, path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = run(&args);
    let code = out.status.code().unwrap();
    let v: Value = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)));
    assert_eq!(v["exit_status"], code);
    (v, code)
}

fn check<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()
}

#[test]
fn bmi_on_two_unit_squares_is_an_equality() {
    let (r, code) = report("bmi", "squares.json", &[]);
    assert_eq!(code, 0);
    let eq = check(&r, "equality");
    assert_eq!(eq["status"], "PASS");
    assert_eq!(eq["margin"], "0");
    assert_eq!(check(&r, "brunn-minkowski")["status"], "PASS");
    assert_eq!(r["result"]["homothety"], "1");
}

#[test]
fn mixed_volumes_of_orthogonal_segments() {
    let (r, code) = report("mixed-volumes", "segments.json", &[]);
    assert_eq!(code, 0);
    let entries = r["result"]["entries"].as_array().unwrap();
    let e11 = entries.iter().find(|e| e["I"] == serde_json::json!([1, 1])).unwrap();
    assert_eq!(e11["value"], "1/2");
    assert_eq!(r["result"]["n"], 2);
    assert_eq!(r["result"]["k"], 2);
}

#[test]
fn af_check_on_square_and_segment_has_no_failures() {
    let (r, code) = report("af-check", "square_segment_table.json", &[]);
    assert_eq!(code, 0);
    let checks = r["checks"].as_array().unwrap();
    let mids: Vec<&Value> = checks
        .iter()
        .filter(|c| c["name"].as_str().unwrap().starts_with("af-midpoint"))
        .collect();
    assert_eq!(mids.len(), 1);
    // (1/2)^2 >= 1 * 0: the right side vanishes
    assert_eq!(mids[0]["name"], "af-midpoint (0,2) (1,1) (2,0)");
    assert_eq!(mids[0]["details"]["exact_margin"], "1/4");
    assert!(checks.iter().all(|c| c["status"] != "FAIL"));
}

#[test]
fn every_sample_input_runs_cleanly() {
    for (cmd, file) in [
        ("logconcavity", "square_segment.json"),
        ("stratify", "square_system.json"),
        ("momentum-image", "square_orbit.json"),
        ("reach-target", "square_target.json"),
        ("conjugate", "lse_conjugate.json"),
        ("moment-solve", "bernoulli_moment.json"),
        ("integrate-form", "square_form.json"),
        ("bridge-check", "square_simplex_bridge.json"),
    ] {
        let (r, code) = report(cmd, file, &[]);
        assert_eq!(code, 0, "{cmd}: {r:#}");
        assert_eq!(r["command"], cmd);
        assert_eq!(r["inputs_digest"].as_str().unwrap().len(), 64);
        for c in r["checks"].as_array().unwrap() {
            assert!(c["status"] == "VACUOUS" || c["margin"].is_string(), "{c}");
        }
    }
}

#[test]
fn stratify_square_has_nine_strata() {
    let (r, _) = report("stratify", "square_system.json", &[]);
    assert_eq!(r["result"].as_array().unwrap().len(), 9);
    assert_eq!(check(&r, "distinct-momenta")["status"], "PASS");
}

#[test]
fn vertex_target_fails_with_exit_one() {
    let (r, code) = report("reach-target", "square_vertex_target.json", &[]);
    assert_eq!(code, 1);
    assert_eq!(check(&r, "target-in-algint")["status"], "FAIL");
}

#[test]
fn conjugate_outside_the_domain_is_vacuous() {
    let (r, _) = report("conjugate", "lse_conjugate.json", &[]);
    assert_eq!(check(&r, "conjugate alpha[2]")["status"], "VACUOUS");
    // f*(1/2) for log(1 + e^x) is the binary entropy term 2 (1/2 log 1/2)
    let v = r["result"][0]["value"].as_f64().unwrap();
    assert!((v - 0.5f64.ln()).abs() <= 1e-12, "{v}");
}

#[test]
fn tolerance_flag_overrides_the_default() {
    let (_, code) = report("integrate-form", "square_form.json", &["--tol", "1e-16"]);
    assert_eq!(code, 1);
}

#[test]
fn reports_are_byte_identical_for_a_fixed_seed() {
    for (cmd, file) in [("momentum-image", "square_orbit.json"), ("conjugate", "lse_conjugate.json")] {
        let path = input(file);
        let p = path.to_str().unwrap();
        let a = run(&[cmd, p, "--seed", "7"]);
        let b = run(&[cmd, p, "--seed", "7", "--workers", "1"]);
        let c = run(&[cmd, p, "--seed", "8"]);
        assert_eq!(a.stdout, b.stdout);
        assert_ne!(a.stdout, c.stdout);
    }
    let path = input("square_simplex_bridge.json");
    let one = run(&["bridge-check", path.to_str().unwrap(), "--workers", "1"]);
    let four = run(&["bridge-check", path.to_str().unwrap(), "--workers", "4"]);
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn digest_ignores_formatting_of_the_input() {
    let path = input("segments.json");
    let text = std::fs::read_to_string(&path).unwrap();
    let compact: Value = serde_json::from_str(&text).unwrap();
    let a = run(&["mixed-volumes", path.to_str().unwrap()]);
    let b = run_stdin(&["mixed-volumes", "-"], &compact.to_string());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn malformed_json_exits_two_with_position() {
    let out = run_stdin(&["bmi", "-"], "{\"y1\": {\"dim\": 2,\n  \"vertices\": [[\"0\", ]]}}");
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("-:2:"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn schema_violations_exit_two() {
    for (cmd, text) in [
        ("bmi", r#"{"y1": {"dim": 2, "vertices": [["0", "0"]]}}"#),
        ("mixed-volumes", r#"{"bodies": [], "extra": 1}"#),
        ("mixed-volumes", r#"{"bodies": [{"dim": 1, "vertices": [["1/0"]]}]}"#),
        ("moment-solve", r#"{"measure": {"dim": 1, "atoms": [{"alpha": ["0"], "w": "-1"}]}, "target": ["0"]}"#),
    ] {
        let out = run_stdin(&[cmd, "-"], text);
        assert_eq!(out.status.code(), Some(2), "{cmd} {text}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
    let out = run(&["bmi", "/nonexistent/input.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn resource_guards_exit_three() {
    let weights: Vec<Vec<i64>> = (0..13).map(|i| vec![i]).collect();
    let amps: Vec<[&str; 2]> = vec![["1", "0"]; 13];
    let text = serde_json::json!({
        "weights": {"rank": 1, "weights": weights},
        "vector": {"amps": amps},
    });
    let out = run_stdin(&["stratify", "-"], &text.to_string());
    assert_eq!(out.status.code(), Some(3));
    let big = r#"{"bodies": [{"dim": 5, "vertices": [["0","0","0","0","0"]]}]}"#;
    assert_eq!(run_stdin(&["mixed-volumes", "-"], big).status.code(), Some(3));
}

#[test]
fn csv_format_prints_the_table() {
    let path = input("segments.json");
    let out = run(&["mixed-volumes", path.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("i1,i2,value"));
    assert!(text.contains("1,1,1/2"));
    let path = input("squares.json");
    let out = run(&["bmi", path.to_str().unwrap(), "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("name,status,margin\n"));
    assert!(text.contains("equality,PASS,0"));
}

fn round_trip<T: Serialize + DeserializeOwned + PartialEq + Debug>(text: &str) {
    let a: T = serde_json::from_str(text).unwrap();
    let canon = serde_json::to_string(&a).unwrap();
    let b: T = serde_json::from_str(&canon).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&b).unwrap(), canon);
}

#[test]
fn sample_inputs_round_trip_canonically() {
    let read = |f: &str| std::fs::read_to_string(input(f)).unwrap();
    round_trip::<BodiesInput>(&read("segments.json"));
    round_trip::<PairInput>(&read("squares.json"));
    round_trip::<TableInput>(&read("square_segment_table.json"));
    round_trip::<LogConcavityInput>(&read("square_segment.json"));
    round_trip::<SystemInput>(&read("square_system.json"));
    round_trip::<OrbitInput>(&read("square_orbit.json"));
    round_trip::<ReachInput>(&read("square_target.json"));
    round_trip::<ConjugateInput>(&read("lse_conjugate.json"));
    round_trip::<MomentSolveInput>(&read("bernoulli_moment.json"));
    round_trip::<IntegrateInput>(&read("square_form.json"));
    round_trip::<BridgeInput>(&read("square_simplex_bridge.json"));
}

#[test]
fn random_inputs_round_trip_canonically() {
    let mut rng = samplers::seeded(77);
    for _ in 0..30 {
        let bodies = (0..3).map(|_| samplers::random_polytope(&mut rng, 2, 5, 3, 7)).collect();
        round_trip::<BodiesInput>(&serde_json::to_string(&BodiesInput { bodies }).unwrap());
        let weights = samplers::random_weights(&mut rng, 2, 5, 3);
        let vector = samplers::random_vector(&mut rng, 5);
        let target = samplers::random_real_vector(&mut rng, 2, 1.0);
        round_trip::<ReachInput>(&serde_json::to_string(&ReachInput { weights, vector, target }).unwrap());
        let measure = samplers::random_measure(&mut rng, 2, 4, 2);
        let target = samplers::random_real_vector(&mut rng, 2, 1.0);
        round_trip::<MomentSolveInput>(&serde_json::to_string(&MomentSolveInput { measure, target }).unwrap());
        for (_, potential) in samplers::potential_registry(&mut rng, 2) {
            let alphas = vec![samplers::random_real_vector(&mut rng, 2, 1.0)];
            let c = ConjugateInput {
                potential,
                alphas,
                probes: 3,
                probe_radius: 1.5,
            };
            round_trip::<ConjugateInput>(&serde_json::to_string(&c).unwrap());
        }
    }
}
