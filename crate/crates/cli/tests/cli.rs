use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use limitlyap::expr::{parse, poly_equal_with_tol, SampleGrid, Var};
use limitlyap_cli::AnalysisReport;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .display()
        .to_string()
}

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn limitlyap(args: &[&str]) -> Out {
    let o = Command::new(env!("CARGO_BIN_EXE_limitlyap"))
        .args(args)
        .env_remove("LIMITLYAP_THREADS")
        .output()
        .unwrap();
    Out {
        code: o.status.code().unwrap(),
        stdout: String::from_utf8(o.stdout).unwrap(),
        stderr: String::from_utf8(o.stderr).unwrap(),
    }
}

fn value<'a>(stdout: &'a str, key: &str) -> Option<&'a str> {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(" = "))
}

fn same_xy(a: &str, b: &str, half: f64) -> bool {
    let grid = SampleGrid::new()
        .axis(Var::X, -half, half, 25)
        .axis(Var::Y, -half, half, 25);
    poly_equal_with_tol(&parse(a).unwrap(), &parse(b).unwrap(), &grid, 1e-10).unwrap()
}

#[test]
fn pipeline_on_circle() {
    let o = limitlyap(&["pipeline", &fixture("circle.sys")]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let phi = value(&o.stdout, "phi").unwrap();
    assert!(same_xy(phi, "(1/4)*(x^2 + y^2)*(x^2 + y^2 - 2)", 2.0), "{phi}");
    assert_eq!(value(&o.stdout, "verdict"), Some("pass"));
    assert_eq!(value(&o.stdout, "criteria"), Some("disagree"));
    assert_eq!(value(&o.stdout, "cycle.0.radius"), Some("1"));
}

#[test]
fn pipeline_on_vibration_with_transform_file() {
    let o = limitlyap(&[
        "pipeline",
        &fixture("vibration.sys"),
        "--transform",
        &fixture("vibration_transform.sys"),
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let phi = value(&o.stdout, "phi").unwrap();
    let want = "(1/4)*(x^2 + (y - x + x^3)^2)*(x^2 + (y - x + x^3)^2 - 2)";
    assert!(same_xy(phi, want, 1.5), "{phi}");
    assert_eq!(value(&o.stdout, "kind"), Some("separable"));
    assert_eq!(value(&o.stdout, "verdict"), Some("pass"));
}

#[test]
fn cycles_without_a_cycle() {
    let o = limitlyap(&["cycles", &fixture("decay.sys")]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(value(&o.stdout, "cycles"), Some("0"));
    assert_eq!(value(&o.stdout, "note"), Some("no limit cycle"));
}

#[test]
fn cycles_from_flag_and_from_polar_file() {
    let o = limitlyap(&["cycles", "--u0", "r - r^3"]);
    assert_eq!(o.code, 0);
    assert_eq!(value(&o.stdout, "cycle.0.radius"), Some("1"));
    assert_eq!(value(&o.stdout, "cycle.0.stability"), Some("stable"));
    let o = limitlyap(&["cycles", &fixture("rectified_polar.sys")]);
    assert_eq!(value(&o.stdout, "cycles"), Some("1"));
}

#[test]
fn exit_codes() {
    // usage and input problems
    assert_eq!(limitlyap(&["--no-such-flag"]).code, 1);
    assert_eq!(limitlyap(&["pipeline"]).code, 1);
    assert_eq!(limitlyap(&["pipeline", "/no/such/file.sys"]).code, 1);
    assert_eq!(limitlyap(&["pipeline", &fixture("circle.sys"), "--tol", "0"]).code, 1);
    assert_eq!(limitlyap(&["pipeline", &fixture("circle.sys"), "--window", "1,0,0,1"]).code, 1);
    assert_eq!(limitlyap(&["cycles"]).code, 1);
    assert_eq!(limitlyap(&["conformal", &fixture("ellipse.curve"), "--n", "1000"]).code, 1);
    assert_eq!(limitlyap(&["--help"]).code, 0);
    assert_eq!(limitlyap(&["--version"]).code, 0);
    // verification failure: the angular factor changes sign
    let o = limitlyap(&["pipeline", &fixture("mixed_sign.sys"), "--grid", "100"]);
    assert_eq!(o.code, 2, "{}", o.stderr);
    assert_eq!(value(&o.stdout, "verdict"), Some("fail"));
    // analysis that cannot proceed
    let o = limitlyap(&["lyapunov", &fixture("mixed_sign.sys")]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.starts_with("error: lyapunov[L007] at (0, 0)"), "{}", o.stderr);
}

#[test]
fn errors_name_module_code_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.sys");
    fs::write(&bad, "fx = y\n# comment\nfy = -x +\n").unwrap();
    let o = limitlyap(&["pipeline", bad.to_str().unwrap()]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("definition[F004] at line 3: `fy`"), "{}", o.stderr);
    fs::write(&bad, "fx = y\nfy = x\nfz = 1\n").unwrap();
    let o = limitlyap(&["polar", bad.to_str().unwrap()]);
    assert!(o.stderr.contains("definition[F002] at line 3"), "{}", o.stderr);
}

fn run_into(dir: &Path, args: &[&str]) -> Out {
    let mut all: Vec<&str> = args.to_vec();
    let d = dir.to_str().unwrap();
    all.extend(["--out", d, "--format", "csv,json,svg"]);
    limitlyap(&all)
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn artifacts_are_deterministic() {
    let cases: [&[&str]; 4] = [
        &["pipeline", &fixture("circle.sys"), "--grid", "21"],
        &["conformal", &fixture("ellipse.curve"), "--n", "256"],
        &["portrait", &fixture("vibration.sys"), "--grid", "15"],
        &["decompose", &fixture("circle.sys"), "--grid", "11"],
    ];
    for args in cases {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        assert_eq!(run_into(a.path(), args).code, 0);
        assert_eq!(run_into(b.path(), args).code, 0);
        let (fa, fb) = (files(a.path()), files(b.path()));
        assert!(!fa.is_empty());
        assert_eq!(fa.len(), fb.len());
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(x.file_name(), y.file_name());
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
        }
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_limitlyap"))
            .args(["pipeline", &fixture("vibration.sys"), "--transform", &fixture("vibration_transform.sys")])
            .args(["--grid", "31", "--out", dir.path().to_str().unwrap()])
            .env("LIMITLYAP_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success());
        fs::read(dir.path().join("pipeline.json")).unwrap()
    };
    assert_eq!(run("0"), run("4"));
}

#[test]
fn pipeline_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_into(dir.path(), &["pipeline", &fixture("circle.sys"), "--grid", "21"]).code, 0);
    let text = fs::read_to_string(dir.path().join("pipeline.json")).unwrap();
    let report: AnalysisReport = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::from_str::<AnalysisReport>(&serde_json::to_string(&report).unwrap()).unwrap(), report);
    assert_eq!(report.provenance.version, env!("CARGO_PKG_VERSION"));
    assert_eq!(report.provenance.config_hash.len(), 64);
    assert_eq!(report.cycles.len(), 1);
    assert!(report.lyapunov.pass);
    assert!(same_xy(&report.potential.phi, "(1/4)*(x^2 + y^2)*(x^2 + y^2 - 2)", 2.0));
}

#[test]
fn provenance_tracks_inputs_and_settings() {
    let hash = |args: &[&str]| {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run_into(dir.path(), args).code, 0);
        let text = fs::read_to_string(dir.path().join("cycles.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["provenance"]["config_hash"].as_str().unwrap().to_string()
    };
    let base = hash(&["cycles", &fixture("circle.sys")]);
    assert_eq!(base, hash(&["cycles", &fixture("circle.sys")]));
    assert_ne!(base, hash(&["cycles", &fixture("circle.sys"), "--rmax", "5"]));
    assert_ne!(base, hash(&["cycles", &fixture("rectified.sys")]));
}

#[test]
fn csv_tables_have_headers_and_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_into(dir.path(), &["decompose", &fixture("circle.sys"), "--grid", "5"]).code, 0);
    let text = fs::read_to_string(dir.path().join("decompose.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,D,q,s,t,H_P,div,singular"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 25);
    // (2, 0): D = 1, q = 1/3, s = 0.9, t = -0.3, H_P = 36
    let r = rows.iter().find(|r| r[0] == "2.0000000000000000e0" && r[1] == "0.0000000000000000e0").unwrap();
    let f = |i: usize| r[i].parse::<f64>().unwrap();
    assert!((f(2) - 1.0).abs() < 1e-12 && (f(3) - 1.0 / 3.0).abs() < 1e-12);
    assert!((f(4) - 0.9).abs() < 1e-12 && (f(5) + 0.3).abs() < 1e-12);
    assert!((f(6) - 36.0).abs() < 1e-9);
    // the origin is singular and leaves the ratios empty
    let o = rows.iter().find(|r| r[0] == "0.0000000000000000e0" && r[1] == "0.0000000000000000e0").unwrap();
    assert_eq!((o[2], o[8]), ("", "true"));
}

#[test]
fn conformal_table_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_into(dir.path(), &["conformal", &fixture("ellipse.curve"), "--n", "256"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(value(&o.stdout, "verdict"), Some("pass"));
    let text = fs::read_to_string(dir.path().join("conformal.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("theta,tau,rho"));
    assert_eq!(text.lines().count(), 257);
    let taus: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(taus.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn equiv_reports_both_findings() {
    let o = limitlyap(&["equiv", &fixture("circle.sys"), &fixture("circle_polar.sys")]);
    assert_eq!(o.code, 0);
    assert_eq!(value(&o.stdout, "verdict"), Some("parallel"));
    let o = limitlyap(&["equiv", &fixture("rectified.sys"), &fixture("circle.sys")]);
    assert_eq!(value(&o.stdout, "verdict"), Some("same-attractors-only"));
    assert_eq!(value(&o.stdout, "cycle.0"), Some("1 first=true second=true"));
}

#[test]
fn portrait_svg_has_arrows_and_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_into(dir.path(), &["portrait", &fixture("circle.sys"), "--grid", "11"]).code, 0);
    let svg = fs::read_to_string(dir.path().join("portrait.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<path") && svg.contains("<polyline"));
    let csv = fs::read_to_string(dir.path().join("portrait.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,y,fx,fy"));
    assert_eq!(csv.lines().count(), 1 + 121);
}

#[test]
fn nothing_written_without_out() {
    let o = limitlyap(&["polar", &fixture("circle.sys")]);
    assert_eq!(o.code, 0);
    assert_eq!(value(&o.stdout, "kind"), Some("pure_radial"));
    assert!(!o.stdout.contains("artifact"));
}
