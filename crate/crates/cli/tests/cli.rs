use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn wiretap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wiretap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn bsc_file(dir: &Path) -> PathBuf {
    write(
        dir,
        "bsc.json",
        r#"{"input_dist": [0.5, 0.5], "wiretap": [[0.9, 0.1], [0.1, 0.9]]}"#,
    )
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

// rows as maps from header name to field
fn records(o: &Output) -> Vec<Vec<(String, String)>> {
    let text = stdout(o);
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| {
            header
                .iter()
                .cloned()
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect()
}

fn field(row: &[(String, String)], key: &str) -> String {
    row.iter().find(|(k, _)| k == key).unwrap().1.clone()
}

fn float(row: &[(String, String)], key: &str) -> f64 {
    field(row, key).parse().unwrap()
}

#[test]
fn exponent_record_cross_checks() {
    let dir = TempDir::new().unwrap();
    let f = bsc_file(dir.path());
    let o = wiretap(&[
        "exponent",
        "--channel",
        f.to_str().unwrap(),
        "--r1",
        "0.6",
        "--r2",
        "0.1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = records(&o);
    assert_eq!(rows.len(), 1);
    assert!(float(&rows[0], "discrepancy") <= 1e-4);
    let e = float(&rows[0], "E");
    assert!(e > 0.0 && e < 0.5);
}

#[test]
fn invalid_rates_exit_two() {
    let dir = TempDir::new().unwrap();
    let f = bsc_file(dir.path());
    let o = wiretap(&[
        "exponent",
        "--channel",
        f.to_str().unwrap(),
        "--r1",
        "0.1",
        "--r2",
        "0.2",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn equal_rates_give_zero() {
    let dir = TempDir::new().unwrap();
    let f = bsc_file(dir.path());
    let o = wiretap(&[
        "exponent",
        "--channel",
        f.to_str().unwrap(),
        "--r1",
        "0.4",
        "--r2",
        "0.4",
    ]);
    assert!(o.status.success());
    assert_eq!(field(&records(&o)[0], "E"), "0");
}

#[test]
fn parse_errors_name_the_line() {
    let dir = TempDir::new().unwrap();
    let f = write(
        dir.path(),
        "bad.json",
        "{\n  \"input_dist\": [0.5, 0.5],\n  \"wiretap\": [[0.9, 0.1]\n}",
    );
    let o = wiretap(&["check", "--channel", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4"), "{err}");

    let f = write(
        dir.path(),
        "sum.json",
        r#"{"input_dist": [0.5, 0.6], "wiretap": [[1, 0], [0, 1]]}"#,
    );
    let o = wiretap(&["check", "--channel", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("input_dist"));

    let o = wiretap(&["check", "--channel", "/nonexistent/file.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_zero_region_and_monotonicity() {
    let dir = TempDir::new().unwrap();
    let f = bsc_file(dir.path());
    let args = [
        "sweep",
        "--channel",
        f.to_str().unwrap(),
        "--r1-min",
        "0",
        "--r1-max",
        "1",
        "--r1-steps",
        "11",
        "--r2-min",
        "0",
        "--r2-max",
        "1",
        "--r2-steps",
        "11",
    ];
    let o = wiretap(&args);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("skipped 55"));
    let rows = records(&o);
    assert_eq!(rows.len(), 66);
    let i_p = 2f64.ln() + 0.1 * 0.1f64.ln() + 0.9 * 0.9f64.ln();
    for r in &rows {
        let (r1, r2) = (float(r, "R1"), float(r, "R2"));
        let zero = field(r, "class") == "ZERO";
        assert_eq!(zero, r1 <= i_p || r1 == r2, "({r1},{r2})");
    }
    // nondecreasing in R1 at fixed R2
    for a in &rows {
        for b in &rows {
            if float(a, "R2") == float(b, "R2") && float(b, "R1") > float(a, "R1") {
                assert!(float(b, "E") >= float(a, "E") - 1e-9);
            }
        }
    }
    let again = wiretap(&args);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn empty_grid_is_header_only() {
    let dir = TempDir::new().unwrap();
    let f = bsc_file(dir.path());
    let o = wiretap(&[
        "sweep",
        "--channel",
        f.to_str().unwrap(),
        "--r1-min",
        "0",
        "--r1-max",
        "1",
        "--r1-steps",
        "0",
        "--r2-fraction-steps",
        "5",
        "--columns",
        "R1,R2,E",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "R1,R2,E\n");
}

#[test]
fn region_rows() {
    let dir = TempDir::new().unwrap();
    let f = bsc_file(dir.path());
    let o = wiretap(&[
        "region",
        "--channel",
        f.to_str().unwrap(),
        "--r1",
        "0.2,0.75",
    ]);
    assert!(o.status.success());
    let rows = records(&o);
    assert_eq!(field(&rows[0], "R2_lower"), "");
    assert_eq!(field(&rows[1], "verified"), "true");
    assert!(float(&rows[1], "R2_lower") <= float(&rows[1], "bracket_lower") + 1e-9);
    assert!((float(&rows[1], "I_Qstar") - 2f64.ln()).abs() < 1e-7);
}

#[test]
fn gaussian_single_and_sweep() {
    let o = wiretap(&[
        "gaussian",
        "--s",
        "1",
        "--sigma2",
        "1",
        "--r1",
        "0.5",
        "--r2",
        "0.5",
        "--rho-points",
        "2001",
    ]);
    assert!(o.status.success());
    assert_eq!(field(&records(&o)[0], "E"), "0");
    let o = wiretap(&[
        "gaussian",
        "--s",
        "1",
        "--sigma2",
        "1",
        "--rho-points",
        "2001",
        "--r1-min",
        "0.2",
        "--r1-max",
        "1.2",
        "--r1-steps",
        "3",
        "--r2-fraction-steps",
        "3",
    ]);
    assert!(o.status.success());
    let rows = records(&o);
    assert_eq!(rows.len(), 9);
    assert_eq!(field(&rows[0], "class"), "ZERO");
    let o = wiretap(&[
        "gaussian", "--s", "-1", "--sigma2", "1", "--r1", "0.5", "--r2", "0.1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_useless_channel_and_budget() {
    let dir = TempDir::new().unwrap();
    let f = write(
        dir.path(),
        "flat.json",
        r#"{"input_dist": [0.5, 0.5], "wiretap": [[0.3, 0.7], [0.3, 0.7]]}"#,
    );
    let o = wiretap(&[
        "simulate",
        "--channel",
        f.to_str().unwrap(),
        "--n",
        "6,8",
        "--r1",
        "0.5",
        "--r2",
        "0.2",
        "--trials",
        "20",
        "--seed",
        "4",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for r in records(&o) {
        let n: f64 = float(&r, "n");
        let m = (n * 0.3f64).exp().round();
        assert!((float(&r, "pc_mean") - 1.0 / m).abs() < 1e-11);
        assert_eq!(field(&r, "pc_stderr"), "0");
    }
    let g = bsc_file(dir.path());
    let o = wiretap(&[
        "simulate",
        "--channel",
        g.to_str().unwrap(),
        "--n",
        "200",
        "--r1",
        "0.6",
        "--r2",
        "0.1",
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn non_convergence_exit_three_and_config_precedence() {
    let dir = TempDir::new().unwrap();
    let f = bsc_file(dir.path());
    let cfg = write(
        dir.path(),
        "cfg.toml",
        "max_iter = 1\nresidual_tol = 0.0\nobj_tol = 0.0\n",
    );
    let base = [
        "exponent",
        "--channel",
        f.to_str().unwrap(),
        "--r1",
        "0.6",
        "--r2",
        "0.1",
    ];
    let mut with_cfg: Vec<&str> = base.to_vec();
    with_cfg.extend(["--config", cfg.to_str().unwrap()]);
    let o = wiretap(&with_cfg);
    assert_eq!(o.status.code(), Some(3));
    with_cfg.extend([
        "--max-iter",
        "100000",
        "--residual-tol",
        "1e-8",
        "--obj-tol",
        "1e-10",
    ]);
    let o = wiretap(&with_cfg);
    assert!(o.status.success());
    let bad = write(dir.path(), "bad.toml", "nonsense = 1\n");
    let o = wiretap(&[
        "check",
        "--channel",
        f.to_str().unwrap(),
        "--config",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_reports_degradedness() {
    let dir = TempDir::new().unwrap();
    let f = write(
        dir.path(),
        "pair.json",
        r#"{"input_dist": [0.5, 0.5], "wiretap": [[0.8, 0.2], [0.2, 0.8]], "main": [[0.9, 0.1], [0.1, 0.9]]}"#,
    );
    let o = wiretap(&["check", "--channel", f.to_str().unwrap()]);
    assert!(o.status.success());
    let r = &records(&o)[0];
    assert_eq!(field(r, "degraded"), "true");
    assert_eq!(field(r, "has_main"), "true");
    let f = bsc_file(dir.path());
    let o = wiretap(&["check", "--channel", f.to_str().unwrap()]);
    assert_eq!(field(&records(&o)[0], "degraded"), "");
}

#[test]
fn bits_flag_converts_units() {
    let dir = TempDir::new().unwrap();
    let f = bsc_file(dir.path());
    let ln2 = 2f64.ln();
    let nats = wiretap(&[
        "exponent",
        "--channel",
        f.to_str().unwrap(),
        "--r1",
        "0.6",
        "--r2",
        "0.1",
    ]);
    let bits = wiretap(&[
        "--bits",
        "exponent",
        "--channel",
        f.to_str().unwrap(),
        "--r1",
        &(0.6 / ln2).to_string(),
        "--r2",
        &(0.1 / ln2).to_string(),
    ]);
    assert!(bits.status.success());
    let (a, b) = (
        float(&records(&nats)[0], "E"),
        float(&records(&bits)[0], "E"),
    );
    assert!((a / ln2 - b).abs() < 1e-9);
}
