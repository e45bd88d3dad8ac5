use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_subrayleigh"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("subrayleigh-cli-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d.join(name)
}

/// Data rows as field vectors, keyed by the column header.
fn rows(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let cols = lines.next().unwrap().split(',').map(String::from).collect();
    (cols, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let (cols, rows) = rows(csv);
    let i = cols.iter().position(|c| c == name).unwrap();
    rows.into_iter().map(|r| r[i].clone()).collect()
}

fn header_value(csv: &str, key: &str) -> String {
    let prefix = format!("# {key}: ");
    csv.lines().find_map(|l| l.strip_prefix(&prefix)).unwrap().to_string()
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["mse-sim", "--theta", "0.3,0.8", "--N", "50", "--trials", "3000", "--seed", "11"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["mse-sim", "--theta", "0.5", "--N", "20", "--trials", "9000", "--seed", "4"];
    let one = bin().args(args).env("SUBRAYLEIGH_THREADS", "1").output().unwrap();
    let three = bin().args(args).env("SUBRAYLEIGH_THREADS", "3").output().unwrap();
    assert_eq!(stdout(&one), stdout(&three));
}

#[test]
fn header_carries_provenance() {
    let s = stdout(&run(&["bounds", "--grid", "0.1:1:3", "--seed", "9"]));
    assert_eq!(header_value(&s, "command"), "bounds");
    assert_eq!(header_value(&s, "seed"), "9");
    assert!(header_value(&s, "tool").starts_with("subrayleigh "));
    let h = header_value(&s, "config_sha256");
    assert_eq!(h.len(), 64);
    assert!(h.chars().all(|c| c.is_ascii_hexdigit()));
    let other = stdout(&run(&["bounds", "--grid", "0.1:1:4", "--seed", "9"]));
    assert_ne!(header_value(&other, "config_sha256"), h);
}

#[test]
fn bounds_report_infinite_crb_at_zero_separation() {
    let s = stdout(&run(&["bounds", "--grid", "0:1:3", "--N", "100"]));
    let direct = column(&s, "crb_direct");
    assert_eq!(direct[0], "inf");
    let q: f64 = column(&s, "qcrb")[0].parse().unwrap();
    assert!((q - 0.01).abs() < 1e-6, "qcrb at zero {q}");
    for v in &direct[1..] {
        assert!(v.parse::<f64>().unwrap().is_finite());
    }
}

#[test]
fn spade_chernoff_matches_quantum() {
    let s = stdout(&run(&["chernoff", "--theta", "0.1,0.3,0.6"]));
    let spade = column(&s, "xi_spade");
    let quantum = column(&s, "xi_quantum");
    for (a, b) in spade.iter().zip(&quantum) {
        let (a, b): (f64, f64) = (a.parse().unwrap(), b.parse().unwrap());
        assert!((a - b).abs() <= 1e-5 * b, "{a} vs {b}");
    }
}

#[test]
fn json_lines_output() {
    let s = stdout(&run(&["coherence", "--theta", "0.2", "--gamma", "0,0.5", "--format", "json-lines"]));
    let lines: Vec<serde_json::Value> = s.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["header"]["command"], "coherence");
    assert_eq!(lines[1]["gamma"], 0.0);
    assert!(lines[2]["fi_spade"].as_f64().unwrap() > 0.0);
}

#[test]
fn moments_then_reconstruct() {
    let scene = scratch("pair.toml");
    std::fs::write(&scene, "schema = \"scene v1\"\nkind = \"two-point\"\nseparation = 0.3\n").unwrap();
    let m = scratch("moments.csv");
    let o = run(&[
        "moments",
        "--scene",
        scene.to_str().unwrap(),
        "--basis-cutoff",
        "8",
        "--N",
        "200000",
        "--out",
        m.to_str().unwrap(),
    ]);
    assert!(o.status.success() && o.stdout.is_empty());
    let pgm = scratch("image.pgm");
    let s = stdout(&run(&[
        "reconstruct",
        "--moments",
        m.to_str().unwrap(),
        "--width",
        "31",
        "--pitch",
        "0.025",
        "--auto-lambda",
        "--pgm",
        pgm.to_str().unwrap(),
    ]));
    let lambda: f64 = header_value(&s, "lambda").parse().unwrap();
    assert!(lambda > 0.0);
    let total: f64 = column(&s, "intensity").iter().map(|v| v.parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    let bytes = std::fs::read(&pgm).unwrap();
    assert!(bytes.starts_with(b"P5\n# tool: subrayleigh"));
    assert!(String::from_utf8_lossy(&bytes).contains("# command: reconstruct"));
}

#[test]
fn adaptive_rows_per_split() {
    let s = stdout(&run(&["adaptive", "--split", "0.5,0.9", "--N", "500", "--trials", "100"]));
    assert_eq!(column(&s, "split").len(), 2);
}

#[test]
fn config_errors_exit_2_with_json_record() {
    for args in [
        vec!["bounds", "--grid", "0:1"],
        vec!["bounds", "--sigma", "-1"],
        vec!["bounds", "--no-such-flag"],
        vec!["mse-sim", "--trials", "0"],
        vec!["moments", "--psf", "sinc", "--scene", "missing.toml"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        let rec: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
        assert_eq!(rec["exit_code"], 2);
        assert!(rec["message"].as_str().is_some());
    }
}

#[test]
fn malformed_scene_is_a_parse_error() {
    let scene = scratch("bad.toml");
    std::fs::write(&scene, "schema = \"scene v9\"\nkind = \"two-point\"\nseparation = 0.3\n").unwrap();
    let o = run(&["chernoff", "--scene", scene.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let rec: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(rec["error"], "parse");
}

#[test]
fn bad_thread_count_is_rejected() {
    let o = bin().args(["bounds", "--theta", "1"]).env("SUBRAYLEIGH_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
