use std::fs;
use std::process::{Command, Output};

use tempfile::TempDir;

fn hfide(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hfide"))
        .args(args)
        .env_remove("HF_QUAD_NODES")
        .output()
        .expect("binary runs")
}

fn read_matrix(path: &std::path::Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn solve_builtins_to_stdout() {
    for name in ["ex1", "ex2", "ex3"] {
        let out = hfide(&["solve", name, "--grid", "11"]);
        assert!(
            out.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let text = String::from_utf8(out.stdout).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,y_approx,y_exact,abs_error"));
        let rows: Vec<Vec<f64>> = lines
            .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 11);
        for row in &rows {
            assert_eq!(row.len(), 4);
            assert_eq!(row[3], (row[1] - row[2]).abs());
            assert!(row[3] < 2e-3);
        }
        let stderr = String::from_utf8(out.stderr).unwrap();
        assert!(stderr.contains("iterations"), "{stderr}");
    }
}

#[test]
fn solve_writes_file_with_17_digits() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("sol.csv");
    let out = hfide(&["solve", "ex2", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1001);
    let first = text.lines().nth(1).unwrap();
    let mantissa = first.split(',').nth(1).unwrap().split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').len(), 18);
}

#[test]
fn problem_file_without_exact_solution() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("p.toml");
    fs::write(
        &file,
        "[problem]\nk = 1\nn = 0\nm = 0\ng = \"0\"\nf = \"1\"\ny0 = [0.0]\n\n[discretization]\nr = 2\nq = 3\n",
    )
    .unwrap();
    let out = hfide(&["solve", file.to_str().unwrap(), "--grid", "4"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,y_approx"));
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((v[1] - v[0]).abs() < 1e-12);
    }
}

#[test]
fn non_convergence_exits_nonzero_but_still_writes_table() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("p.toml");
    let src =
        include_str!("../../core/problems/ex1.toml").replace("max_iter = 100", "max_iter = 1");
    assert!(src.contains("max_iter = 1\n"));
    fs::write(&file, src).unwrap();
    let out = hfide(&["solve", file.to_str().unwrap(), "--grid", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 4);
    assert!(String::from_utf8(out.stderr).unwrap().contains("warning"));
}

#[test]
fn matrices_block_pulse_and_l() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("m.csv");
    let p = path.to_str().unwrap();

    assert!(
        hfide(&["matrices", "--which", "P", "--r", "1", "--q", "2", "--out", p])
            .status
            .success()
    );
    assert_eq!(read_matrix(&path), vec![vec![0.25, 0.5], vec![0.0, 0.25]]);

    assert!(
        hfide(&["matrices", "--which", "J", "--r", "1", "--q", "2", "--out", p])
            .status
            .success()
    );
    let j = read_matrix(&path);
    let want = [[4.0, 0.0], [-8.0, 4.0]];
    for (row, w) in j.iter().zip(want) {
        for (a, b) in row.iter().zip(w) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    assert!(
        hfide(&["matrices", "--which", "L", "--r", "3", "--q", "4", "--out", p])
            .status
            .success()
    );
    let l = read_matrix(&path);
    assert_eq!(l.len(), 12);
    for (i, row) in l.iter().enumerate() {
        assert_eq!(row.len(), 12);
        for (j, v) in row.iter().enumerate() {
            let want = if i == j {
                1.0 / (4.0 * (2 * (i % 3) + 1) as f64)
            } else {
                0.0
            };
            assert_eq!(*v, want);
        }
    }
}

#[test]
fn project_writes_one_coefficient_per_line() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("c.txt");
    let out = hfide(&[
        "project",
        "--expr",
        "2*t^3",
        "--r",
        "3",
        "--q",
        "4",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: Vec<f64> = fs::read_to_string(&path)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(v.len(), 12);
    assert!((v[0] - 0.0078125).abs() < 1e-15);
    assert!((v[1] - 0.0140625).abs() < 1e-15);
}

#[test]
fn quadrature_env_override() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("c.txt");
    let p = path.to_str().unwrap();
    let run = |nodes: &str| {
        Command::new(env!("CARGO_BIN_EXE_hfide"))
            .args([
                "project", "--expr", "exp(t)", "--r", "3", "--q", "4", "--out", p,
            ])
            .env("HF_QUAD_NODES", nodes)
            .output()
            .unwrap()
    };
    assert!(run("2").status.success());
    let coarse = fs::read_to_string(&path).unwrap();
    assert!(run("24").status.success());
    let fine = fs::read_to_string(&path).unwrap();
    assert_ne!(coarse, fine);
    assert_eq!(run("zero").status.code(), Some(2));
}

#[test]
fn bad_input_is_reported() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("x");
    let p = p.to_str().unwrap();
    let cases: [&[&str]; 6] = [
        &["solve", "/nonexistent/problem.toml"],
        &["solve", "ex1", "--grid", "1"],
        &[
            "matrices", "--which", "Q", "--r", "1", "--q", "2", "--out", p,
        ],
        &[
            "matrices", "--which", "P", "--r", "0", "--q", "2", "--out", p,
        ],
        &[
            "project", "--expr", "s*t", "--r", "2", "--q", "2", "--out", p,
        ],
        &[
            "project", "--expr", "2t", "--r", "2", "--q", "2", "--out", p,
        ],
    ];
    for args in cases {
        let out = hfide(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}
