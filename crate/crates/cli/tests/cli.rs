use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hisd(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hisd"));
    cmd.args(args).env_remove("HISD_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.toml"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const QUADRATIC: &str = r#"
name = "q"

[benchmark]
family = "quadratic"
matrix = [[-1.0, 0.0], [0.0, 2.0]]

[run]
k = 1
x0 = [1.0, 1.0]
beta = { policy = "constant", value = 0.5 }
"#;

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_artifacts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let cfg = shipped("powell_case1");
    let cfg = cfg.to_str().unwrap();
    for out in [&a, &b] {
        let o = hisd(&["run", cfg, "--outdir", out.to_str().unwrap()], &[]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let csv_a = std::fs::read(a.join("powell_case1.csv")).unwrap();
    let csv_b = std::fs::read(b.join("powell_case1.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    assert!(String::from_utf8(csv_a).unwrap().starts_with("n,grad_norm,r_n,alpha_n,contraction,beta\n"));
    let plot = std::fs::read_to_string(a.join("powell_case1.plot.dat")).unwrap();
    assert!(plot.lines().nth(1).unwrap().split(' ').count() == 2);
    let summary = std::fs::read_to_string(a.join("powell_case1.summary.txt")).unwrap();
    for key in ["beta = ", "gamma = ", "dimer_length = ", "v0_seed = 0", "kappa = 11.56"] {
        assert!(summary.contains(key), "missing {key}");
    }
    assert!(a.join("powell_case1.meta.txt").exists());
}

#[test]
fn seed_env_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = shipped("powell_case1");
    let o = hisd(
        &["run", cfg.to_str().unwrap(), "--outdir", dir.path().to_str().unwrap()],
        &[("HISD_SEED", "7")],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("v0_seed = 7"));

    let o = hisd(&["run", cfg.to_str().unwrap()], &[("HISD_SEED", "seven")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn parse_error_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = QUADRATIC.replace("k = 1", "k = [1]");
    let p = write_config(dir.path(), "bad.toml", &bad);
    let o = hisd(&["run", p.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.toml:9:5:"), "{}", stderr(&o));
}

#[test]
fn inadmissible_alpha_exits_2_naming_inequality() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(shipped("powell_case1"))
        .unwrap()
        .replace(
            r#"beta = { policy = "constant", value = 0.009 }"#,
            r#"beta = { policy = "theory-index1", alpha = 0.3 }"#,
        );
    let p = write_config(dir.path(), "alpha.toml", &text);
    let o = hisd(&["run", p.to_str().unwrap(), "--outdir", dir.path().to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("1 − 2α > 2κ(α + 2√α)"), "{}", stderr(&o));
}

#[test]
fn divergence_exits_3_and_keeps_trace() {
    let dir = tempfile::tempdir().unwrap();
    let text = QUADRATIC.replace("value = 0.5", "value = 5.0");
    let p = write_config(dir.path(), "div.toml", &text);
    let out = dir.path().join("out");
    let o = hisd(&["run", p.to_str().unwrap(), "--outdir", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged"));
    assert!(out.join("q.csv").exists());
}

#[test]
fn verify_subset_and_injected_fault() {
    let o = hisd(&["verify", "--only", "linalg", "--trials", "20"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("\"failures\":[]"));

    let o = hisd(
        &["verify", "--only", "d-bound", "--trials", "20", "--inject-fault", "d-bound"],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    let json_line = stdout(&o).lines().last().unwrap().to_string();
    let v: serde_json::Value = serde_json::from_str(&json_line).unwrap();
    assert_eq!(v["failures"][0]["name"], "theory.d-bound");

    let o = hisd(&["verify", "--only", "nothing"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn table1_and_figure_arguments() {
    let o = hisd(&["table1"], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).matches("PASS").count(), 3);

    let o = hisd(&["figures", "4"], &[]);
    assert_eq!(o.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let o = hisd(&["figures", "1", "--outdir", dir.path().to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(dir.path().join("figure1_summary.txt").exists());
    assert!(dir.path().join("powell_case3.plot.dat").exists());
}
