use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const A38: &str = "# p_a = 3/8\nm 2\nT 3\ninit 0\nperm0 1 2 0 3\nperm1 0 1 2 3\n";
/// One fair coin flip straight onto the flag: p_a = 1/2.
const HALF: &str = "m 1\nT 1\ninit 0\nperm0 0 1\nperm1 1 0\n";

fn postforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_postforge"))
        .args(args)
        .env_remove("POSTFORGE_TOL")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(out: &str, key: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(' '))
        .unwrap_or_else(|| panic!("no `{key}` in\n{out}"))
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_inc_writes_circuit_and_residual() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("inc3.qc");
    let o = postforge(&["synth", "inc", "--n", "3", "-o", s(&file)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(field(&stdout(&o), "residual") <= 1e-9);
    let text = std::fs::read_to_string(&file).unwrap();
    assert!(text.contains("qubits 3"));
}

#[test]
fn synth_mcx_two_controls_is_the_toffoli() {
    let o = postforge(&["synth", "mcx", "--k", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(field(&out, "tcount"), 7.0);
    assert_eq!(field(&out, "cnot"), 6.0);
    assert_eq!(field(&out, "ancillas"), 0.0);
}

#[test]
fn bad_synth_parameters_are_usage_errors() {
    assert_eq!(postforge(&["synth", "inc", "--n", "0"]).status.code(), Some(2));
    assert_eq!(postforge(&["synth", "cinc", "--n", "2"]).status.code(), Some(2));
    assert_eq!(postforge(&["synth", "nope"]).status.code(), Some(2));
}

#[test]
fn build_final_records_p_a_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let aut = write(dir.path(), "a38.aut", A38);
    let file = dir.path().join("final.qc");
    let o = postforge(&["build", s(&aut), "--stage", "final", "--r", "2", "-o", s(&file)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&file).unwrap();
    assert!(text.contains("p_a=3/8"));
    assert!(text.lines().any(|l| l.starts_with("measure ") && l.ends_with(" W")));
}

#[test]
fn qx_stage_keeps_intermediate_postselections() {
    let dir = tempfile::tempdir().unwrap();
    let aut = write(dir.path(), "a38.aut", A38);
    let out = stdout(&postforge(&["build", s(&aut), "--stage", "qx"]));
    assert_eq!(out.lines().filter(|l| l.starts_with("post ")).count(), 5);
}

#[test]
fn half_probability_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let aut = write(dir.path(), "half.aut", HALF);
    assert_eq!(postforge(&["build", s(&aut), "--stage", "qx"]).status.code(), Some(4));
    assert_eq!(postforge(&["decide", s(&aut)]).status.code(), Some(4));
}

#[test]
fn simulating_the_final_circuit_favours_reject() {
    let dir = tempfile::tempdir().unwrap();
    let aut = write(dir.path(), "a38.aut", A38);
    let file = dir.path().join("final.qc");
    postforge(&["build", s(&aut), "--stage", "final", "-o", s(&file)]);
    let out = stdout(&postforge(&["sim", s(&file)]));
    assert!(field(&out, "cond W") > 625.0 / 706.0, "{out}");
    assert!(field(&out, "p_post") > 0.0);
}

#[test]
fn sim_exit_codes_and_trivial_reports() {
    let dir = tempfile::tempdir().unwrap();
    let orth = write(dir.path(), "orth.qc", "qubits 1\nx 0\npost 0 0\n");
    let o = postforge(&["sim", s(&orth)]);
    assert_eq!(o.status.code(), Some(3));
    let id = write(dir.path(), "id.qc", "qubits 2\n");
    let out = stdout(&postforge(&["sim", s(&id)]));
    assert!(out.lines().any(|l| l == "p_post 1"), "{out}");
    let mixed = stdout(&postforge(&["sim", s(&id), "--dqc1-clean", "1"]));
    assert_eq!(field(&mixed, "p_post"), 1.0);
    assert_eq!(postforge(&["sim", "/nonexistent.qc"]).status.code(), Some(2));
}

#[test]
fn decide_a38() {
    let dir = tempfile::tempdir().unwrap();
    let aut = write(dir.path(), "a38.aut", A38);
    let r1 = postforge(&["decide", s(&aut), "--r", "1"]);
    assert_eq!(r1.status.code(), Some(0));
    let out = stdout(&r1);
    assert!(out.starts_with("verdict reject\n"));
    assert!(field(&out, "p_correct") > 0.885);

    let out = stdout(&postforge(&["decide", s(&aut), "--r", "4"]));
    assert!(field(&out, "p_correct") > 0.9375);

    let wrapped = postforge(&["decide", s(&aut), "--r", "1", "--dqc1"]);
    assert_eq!(wrapped.status.code(), Some(0));
    let w = stdout(&wrapped);
    assert!(w.starts_with("verdict reject\n"));
    let m = field(&stdout(&r1), "qubits");
    let ratio = field(&w, "p_post") / field(&stdout(&r1), "p_post");
    assert!((ratio * m.exp2() - 1.0).abs() < 1e-12, "{ratio}");
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let aut = write(dir.path(), "a38.aut", A38);
    let a = postforge(&["decide", s(&aut), "--r", "2"]).stdout;
    let b = postforge(&["decide", s(&aut), "--r", "2"]).stdout;
    assert_eq!(a, b);
}

#[test]
fn counter_width_override() {
    let dir = tempfile::tempdir().unwrap();
    let aut = write(dir.path(), "a38.aut", A38);
    assert_eq!(
        postforge(&["build", s(&aut), "--stage", "vx", "-N", "2"]).status.code(),
        Some(2)
    );
    let wide = stdout(&postforge(&["build", s(&aut), "--stage", "vx", "-N", "4"]));
    assert!(wide.contains("reg C 5 4"), "{wide}");
}

#[test]
fn tolerance_comes_from_flag_then_environment() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_postforge"));
        c.args(["synth", "cinc", "--n", "3", "--k", "2"]).args(extra);
        match env {
            Some(v) => c.env("POSTFORGE_TOL", v),
            None => c.env_remove("POSTFORGE_TOL"),
        };
        c.output().unwrap()
    };
    let base = run(None, &[]);
    assert_eq!(base.status.code(), Some(0));
    let residual = field(&stdout(&base), "residual");
    // a tolerance below the rounding residual turns the check red
    let strict = if residual > 0.0 { Some(1) } else { Some(0) };
    assert_eq!(run(Some("1e-300"), &[]).status.code(), strict);
    assert_eq!(run(Some("1e-300"), &["--tol", "1e-6"]).status.code(), Some(0));
    assert_eq!(run(Some("lots"), &[]).status.code(), Some(2));
}
