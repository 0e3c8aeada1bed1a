mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::fixture_dir;

fn proxsplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proxsplit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn result_line(o: &Output) -> String {
    stdout(o)
        .lines()
        .rfind(|l| l.starts_with("RESULT "))
        .expect("RESULT line")
        .to_string()
}

fn read_vector(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let problem = fixture_dir().join("cli/problem.json");
    let o = proxsplit(&["solve", s(&problem), "--out", s(dir.path())]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(result_line(&o).starts_with("RESULT converged=true iters="));
    for f in ["trace.csv", "solution.csv", "summary.txt"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert_eq!(read_vector(&dir.path().join("solution.csv")).len(), 3);
}

#[test]
fn solve_examples() {
    let dir = tempfile::tempdir().unwrap();
    let soft = write(
        dir.path(),
        "soft.json",
        r#"{"z": [3.0], "terms": [{"weight": 1.0, "function": {"kind": "norm1"}}]}"#,
    );
    let out = dir.path().join("soft");
    let o = proxsplit(&["solve", s(&soft), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!((read_vector(&out.join("solution.csv"))[0] - 2.0).abs() <= 1e-8);

    let boxed = write(
        dir.path(),
        "box.json",
        r#"{"z": [2.0, -0.5], "terms": [{"weight": 1.0, "function": {"kind": "box", "lo": [0.0, 0.0], "hi": [1.0, 1.0]}}]}"#,
    );
    let out = dir.path().join("box");
    let o = proxsplit(&["solve", s(&boxed), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_vector(&out.join("solution.csv")), vec![1.0, 0.0]);
}

#[test]
fn invalid_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let truncated = write(dir.path(), "bad.json", "{\"z\": [1.0, 2.0],\n \"terms\": [");
    let o = proxsplit(&["solve", s(&truncated), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json:2:"));

    let empty = write(
        dir.path(),
        "empty.json",
        r#"{"z": [1.0], "constraints": []}"#,
    );
    let o = proxsplit(&["project", s(&empty), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));

    let o = proxsplit(&["solve", "--tol"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(proxsplit(&["--help"]).status.code(), Some(0));
}

#[test]
fn iteration_limit_exits_two_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let problem = fixture_dir().join("cli/problem.json");
    let o = proxsplit(&[
        "solve",
        s(&problem),
        "--max-iter",
        "2",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(result_line(&o).starts_with("RESULT converged=false iters=2 "));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 3);
}

#[test]
fn project_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = proxsplit(&[
        "project",
        s(&fixture_dir().join("projection/disk_halfplane.json")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let x = read_vector(&dir.path().join("solution.csv"));
    assert!(x[0].abs() <= 1e-4 && (x[1] - 1.0).abs() <= 1e-4, "{x:?}");
    assert!(fs::read_to_string(dir.path().join("summary.txt"))
        .unwrap()
        .contains("feasibility residual"));

    let ball = write(
        dir.path(),
        "ball.json",
        r#"{"z": [3.0, 4.0], "constraints": [{"set": {"kind": "ball", "center": [0.0, 0.0], "radius": 1.0}}], "slater_point": [0.0, 0.0]}"#,
    );
    let out = dir.path().join("ball");
    let o = proxsplit(&["project", s(&ball), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let x = read_vector(&out.join("solution.csv"));
    assert!(
        (x[0] - 0.6).abs() <= 1e-6 && (x[1] - 0.8).abs() <= 1e-6,
        "{x:?}"
    );
}

#[test]
fn denoise_examples() {
    let dir = tempfile::tempdir().unwrap();
    let pixel = write(dir.path(), "pixel.csv", "2.0\n");
    let out = dir.path().join("pixel");
    let o = proxsplit(&[
        "denoise",
        s(&pixel),
        "--weights",
        "0.5,0.25,0.25",
        "--tol",
        "1e-10",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let x: f64 = fs::read_to_string(out.join("recovered.csv"))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((x - 0.25).abs() <= 1e-6);

    let zeros = write(dir.path(), "zeros.csv", "0,0,0\n0,0,0\n");
    let out = dir.path().join("zeros");
    let o = proxsplit(&["denoise", s(&zeros), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(out.join("recovered.csv")).unwrap();
    assert!(text
        .split([',', '\n'])
        .filter(|t| !t.is_empty())
        .all(|t| t.parse::<f64>().unwrap() == 0.0));

    let o = proxsplit(&["denoise", s(&zeros), "--basis", "haar", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn denoise_pgm_reports_objectives() {
    let dir = tempfile::tempdir().unwrap();
    let image = fixture_dir().join("cli/noisy.pgm");
    let o = proxsplit(&[
        "denoise",
        s(&image),
        "--basis",
        "haar",
        "--out",
        s(dir.path()),
    ]);
    assert!(matches!(o.status.code(), Some(0 | 2)));
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    let value = |key: &str| -> f64 {
        summary
            .lines()
            .find_map(|l| l.strip_prefix(key))
            .unwrap()
            .trim()
            .parse()
            .unwrap()
    };
    assert!(value("objective recovered:") < value("objective observed:"));
    assert!(value("tv recovered:") <= value("tv observed:"));
    for f in [
        "observed.pgm",
        "recovered.pgm",
        "recovered.csv",
        "trace.csv",
        "tv_dual_h.csv",
        "tv_dual_v.csv",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn trace_plot_data_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = proxsplit(&[
        "solve",
        s(&fixture_dir().join("cli/problem.json")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let plot = dir.path().join("plot.csv");
    let o = proxsplit(&[
        "trace-plot-data",
        s(&dir.path().join("trace.csv")),
        "--out",
        s(&plot),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&plot).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("n,log10_step_norm,primal,dual,primal_excess")
    );
    let trace_rows = fs::read_to_string(dir.path().join("trace.csv"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(text.lines().count(), trace_rows);
}
