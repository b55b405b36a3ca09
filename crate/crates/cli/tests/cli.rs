use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const DIAG123: &str = r#"{"n":3,"d":2,"terms":[{"exp":[2,0,0],"coef":0.5},{"exp":[0,2,0],"coef":1.0},{"exp":[0,0,2],"coef":1.5}]}"#;
const X1_CUBED: &str = r#"{"n":2,"d":3,"terms":[{"exp":[3,0],"coef":1.0}]}"#;
const TWO_FOUR: &str = r#"{"n":2,"d":3,"terms":[{"exp":[3,0],"coef":2.0},{"exp":[0,3],"coef":4.0}]}"#;

fn sphopt(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sphopt"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn classify_diag123() {
    let dir = TempDir::new().unwrap();
    write(&dir, "p.json", DIAG123);
    let o = sphopt(&["classify", "--poly", "p.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("6 critical points: 2 SOSC, 4 FONC_ONLY, 0 SONC_DEGENERATE"));
}

#[test]
fn classify_json_and_csv() {
    let dir = TempDir::new().unwrap();
    write(&dir, "p.json", DIAG123);
    let o = sphopt(&["classify", "--poly", "p.json", "--json", "--out", "out/points.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/points.json")).unwrap();
    assert_eq!(text.matches("\"SOSC\"").count(), 2);
    assert!(text.contains("1.0000000000000000e0"));

    let o = sphopt(&["classify", "--poly", "p.json", "--csv"], dir.path());
    let csv = stdout(&o);
    assert_eq!(csv.lines().next(), Some("x1,x2,x3,lambda,residual,margin,verdict"));
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn classify_zero_and_malformed() {
    let dir = TempDir::new().unwrap();
    write(&dir, "zero.json", r#"{"n":2,"d":3,"terms":[]}"#);
    write(&dir, "bad.json", r#"{"n":2,"d":3,"terms":[{"exp":[2,0],"coef":1.0}]}"#);
    let o = sphopt(&["classify", "--poly", "zero.json"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let o = sphopt(&["classify", "--poly", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("term 0"), "{}", stderr(&o));
    write(&dir, "junk.json", "{\"n\": 2,");
    assert_eq!(sphopt(&["classify", "--poly", "junk.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn detect_outcomes() {
    let dir = TempDir::new().unwrap();
    write(&dir, "cube.json", X1_CUBED);
    write(&dir, "p.json", DIAG123);

    let o = sphopt(&["detect", "--poly", "cube.json", "--point", "0,1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("\"mu\": 0.0000000000000000e0"));
    assert!(stdout(&o).contains("\"rank_verified\": true"));

    let o = sphopt(&["detect", "--poly", "p.json", "--point", "1,0,0"], dir.path());
    assert_eq!(stdout(&o).trim(), "no witness: SOSC margin = 1.0000000000000000e0");

    let o = sphopt(&["detect", "--poly", "p.json", "--point", "0.7,0.7,0.14"], dir.path());
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("FONC residual"));
    assert!(stderr(&o).contains("warning: --point has norm"));
}

#[test]
fn detect_bad_points() {
    let dir = TempDir::new().unwrap();
    write(&dir, "p.json", DIAG123);
    assert_eq!(sphopt(&["detect", "--poly", "p.json", "--point", "1,0"], dir.path()).status.code(), Some(2));
    assert_eq!(sphopt(&["detect", "--poly", "p.json", "--point", "1,x,0"], dir.path()).status.code(), Some(2));
    // within the warning threshold: silent normalization
    let o = sphopt(&["detect", "--poly", "p.json", "--point", "-1.0000001,0,0"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(!stderr(&o).contains("warning"));
}

#[test]
fn oracle2_off_and_on_locus() {
    let dir = TempDir::new().unwrap();
    write(&dir, "p.json", TWO_FOUR);
    write(&dir, "cube.json", X1_CUBED);
    let o = sphopt(&["oracle2", "--poly", "p.json"], dir.path());
    assert!(stdout(&o).starts_with("on_locus: false"));
    let o = sphopt(&["oracle2", "--poly", "cube.json"], dir.path());
    assert!(stdout(&o).starts_with("on_locus: true"));
    write(&dir, "p3.json", DIAG123);
    assert_eq!(sphopt(&["oracle2", "--poly", "p3.json"], dir.path()).status.code(), Some(1));
}

#[test]
fn witness_modes() {
    let dir = TempDir::new().unwrap();
    let o = sphopt(&["witness", "--mode", "d2", "--n", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("suite witness_d2_n3: PASS"));

    let o = sphopt(&["witness", "--mode", "general", "--n", "2", "--d", "3", "--out", "w.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report = fs::read_to_string(dir.path().join("w.json")).unwrap();
    assert!(report.contains("\"passed\": true"));
    assert!(!report.contains("runtime_ms"));

    let o = sphopt(&["witness", "--mode", "degenerate", "--n", "2", "--d", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let o = sphopt(&["witness", "--mode", "general", "--n", "2", "--d", "2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sample_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let args = ["sample", "--n", "2", "--d", "3", "--trials", "12", "--seed", "7"];
    let o = sphopt(&[&args[..], &["--out", "a.json", "--csv", "a.csv"]].concat(), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("degenerate_hits: 0"));
    sphopt(&[&args[..], &["--out", "b.json"]].concat(), dir.path());
    let a = fs::read(dir.path().join("a.json")).unwrap();
    let b = fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
    let csv = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);

    // default report path
    let o = sphopt(&args, dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("sample_n2_d3_seed7.json").exists());
}

#[test]
fn quad_writes_report() {
    let dir = TempDir::new().unwrap();
    let o = sphopt(&["quad", "--n", "4", "--trials", "10", "--seed", "3", "--out", "q.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("pipeline_disagreements: 0"));
    assert!(fs::read_to_string(dir.path().join("q.json")).unwrap().contains("quadratic_sweep"));
}

#[test]
fn flag_errors() {
    let dir = TempDir::new().unwrap();
    assert_eq!(sphopt(&["classify"], dir.path()).status.code(), Some(2));
    assert_eq!(sphopt(&["sample", "--n", "2", "--d", "3", "--trials", "0"], dir.path()).status.code(), Some(1));
    assert_eq!(sphopt(&["classify", "--poly", "missing.json"], dir.path()).status.code(), Some(1));
}
