use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isoflow"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().expect("spawn isoflow");
    assert!(
        out.status.success(),
        "command {:?} failed: {}\n{}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn roots_classifies_the_null_vector() {
    let text = run_ok(&[
        "roots",
        "--file",
        fixture("affine_d4_delta.json").to_str().unwrap(),
    ]);
    assert!(text.contains("imaginary root, positive"));
    assert!(text.contains("(d,d) = 0"));
    assert!(text.contains("delta = 2-(d,d) = 2"));
}

#[test]
fn readings_reproduce_the_three_shapes() {
    let text = run_ok(&[
        "readings",
        "--file",
        fixture("affine_d4_delta.json").to_str().unwrap(),
    ]);
    // data rows end with [rank, finite poles, pole order]
    let ranks: Vec<usize> = text
        .lines()
        .skip(1)
        .filter_map(|l| {
            let tokens: Vec<&str> = l.split_whitespace().collect();
            (tokens.len() >= 3).then(|| tokens[tokens.len() - 3].parse().ok())?
        })
        .collect();
    assert!(ranks.contains(&2), "ranks found: {ranks:?}\n{text}");
    assert!(ranks.contains(&3));
    assert!(ranks.contains(&5));
}

#[test]
fn exists_verdicts() {
    let text = run_ok(&[
        "exists",
        "--file",
        fixture("affine_d4_delta.json").to_str().unwrap(),
    ]);
    assert!(text.contains("nonempty"));
    let text = run_ok(&[
        "exists",
        "--file",
        fixture("triple_eps.json").to_str().unwrap(),
    ]);
    assert!(text.contains("not a positive root"));
}

#[test]
fn orbit_reaches_the_reduced_vector() {
    let text = run_ok(&[
        "orbit",
        "--file",
        fixture("a2pp.json").to_str().unwrap(),
        "--depth",
        "3",
    ]);
    assert!(
        text.contains("d=[1, 1, 1, 0]"),
        "expected reduced dimension vector in:\n{text}"
    );
    // invariants printed per row and constant across the orbit
    for line in text.lines().filter(|l| l.contains("(d,d)=")) {
        assert!(line.contains("(d,d)=0"), "wrong invariant in line: {line}");
    }
}

#[test]
fn reflect_refuses_zero_parameter() {
    // λ = 0 at leg:0:1 after engineering: use triple_eps which has a zero entry
    let out = bin()
        .args([
            "reflect",
            "--file",
            fixture("triple_eps.json").to_str().unwrap(),
            "--node",
            "core:0:0",
        ])
        .output()
        .expect("spawn");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("refused"));
}

#[test]
fn integrate_writes_outputs_and_conserves() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("traj.json");
    let text = run_ok(&[
        "integrate",
        "--file",
        fixture("schlesinger.json").to_str().unwrap(),
        "--output",
        json.to_str().unwrap(),
    ]);
    assert!(text.contains("final lambda drift"));
    assert!(json.exists());
    assert!(dir.path().join("traj.monitors.csv").exists());
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(parsed.as_array().unwrap().len() >= 2);
    let drift = parsed.as_array().unwrap().last().unwrap()["lambda_drift"]
        .as_f64()
        .unwrap();
    assert!(drift < 1e-8, "lambda drift {drift}");
}

#[test]
fn malformed_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = bin()
        .args(["roots", "--file", bad.to_str().unwrap()])
        .output()
        .expect("spawn");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_small_suite_passes() {
    let out = bin()
        .args(["verify", "--suite", "orbits", "--trials", "3", "--seed", "5"])
        .env("ISOFLOW_THREADS", "2")
        .output()
        .expect("spawn");
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("0 failed"), "{text}");
}
