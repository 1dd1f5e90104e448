use std::path::PathBuf;
use std::process::{Command, Output};

fn specs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn run(spec: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cuspgrowth"))
        .arg("--spec")
        .arg(specs().join(spec))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a growth CSV, skipping comments and the header.
fn growth_rows(text: &str) -> Vec<(u32, u64)> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("kind,"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect()
}

#[test]
fn tree_spheres_have_exact_counts() {
    let o = run("free2.toml", &["--command", "growth", "--kind", "orbit", "--delta-width", "0.5"]);
    assert!(o.status.success());
    let rows = growth_rows(&stdout(&o));
    assert!(!rows.is_empty());
    for (n, count) in rows {
        if n >= 1 {
            assert_eq!(count, 4 * 3u64.pow(n - 1), "n = {n}");
        }
    }
}

#[test]
fn csv_echoes_seed_and_parameters() {
    let o = run("free2.toml", &["--command", "exponent", "--seed", "41"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("audit,param_json,key,value\n"));
    assert!(text.lines().any(|l| l.starts_with("run,") && l.ends_with(",seed,41.0")));
    assert!(text.contains("truncation_radius"));
}

#[test]
fn horoballs_of_a_cocompact_spec() {
    let o = run("free2.toml", &["--command", "growth", "--kind", "horoball"]);
    assert!(o.status.success());
    assert!(growth_rows(&stdout(&o)).is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn tree_theorem_audit() {
    let o = run("free2.toml", &["--command", "theorem-audit", "--format", "json-like"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["detail"]["rows"].as_array().unwrap();
    let status: Vec<&str> = rows.iter().map(|r| r["status"].as_str().unwrap()).collect();
    assert_eq!(status, ["vacuous", "consistent", "consistent", "vacuous"]);
    let delta = v["detail"]["exponent"]["delta_hat"].as_f64().unwrap();
    assert!((delta - 3f64.ln()).abs() < 0.01);
}

#[test]
fn modular_group_theorem_audit() {
    let o = run("psl2z.toml", &["--command", "theorem-audit", "--format", "text"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let verdicts: Vec<&str> = text.lines().skip(1).filter(|l| l.starts_with(char::is_numeric)).take(4).collect();
    assert_eq!(verdicts.len(), 4);
    assert!(verdicts.iter().all(|l| l.split_whitespace().nth(1) == Some("consistent")), "{verdicts:?}");
}

#[test]
fn unreachable_cone_center_is_inconclusive() {
    let o = run("free2.toml", &["--command", "theorem-audit", "--center", "a^6 b^6", "--format", "text"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("inconclusive"));
}

#[test]
fn malformed_spec_leaves_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.toml");
    std::fs::write(&spec, "model = \"half_plane\"\ngenerators = [[1, 1, 0]]\n").unwrap();
    let out = dir.path().join("out.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_cuspgrowth"))
        .args(["--spec", spec.to_str().unwrap(), "--command", "growth", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn flags_are_checked_against_the_command() {
    for args in [
        &["--command", "exponent", "--shadow-r", "2"][..],
        &["--command", "growth", "--samples", "3"],
        &["--command", "growth", "--kind", "orbit", "--center", "a"],
        &["--command", "growth", "--delta-width", "-1"],
        &["--command", "growth", "--window", "5:2"],
        &["--command", "nonsense"],
        &["--command", "growth", "--format", "xml"],
    ] {
        let o = run("free2.toml", args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("run{i}.txt"));
        let o = run(
            "free2_cusped.toml",
            &["--command", "shadow-audit", "--samples", "8", "--seed", "5", "--out", out.to_str().unwrap()],
        );
        assert!(o.status.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn parabolic_growth_on_the_cusped_graph() {
    let o = run("free2_cusped.toml", &["--command", "growth", "--kind", "parabolic"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("# class=")));
    // stabilizer counts grow: distortion is logarithmic
    assert!(growth_rows(&text).iter().any(|&(_, c)| c > 0));
}
