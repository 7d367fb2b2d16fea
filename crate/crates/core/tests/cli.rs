use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use tempfile::TempDir;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/finite_rank_example.json")
}

fn run(config: &Path, out: &Path, args: &[&str]) -> (i32, String) {
    let mut full = vec![
        "fiberspec".to_string(),
        "--config".into(),
        config.display().to_string(),
        "--out".into(),
        out.display().to_string(),
    ];
    full.extend(args.iter().map(|s| s.to_string()));
    let mut buf = Vec::new();
    let code = fiberspec::cli::run_with(full, &mut buf);
    (code, String::from_utf8(buf).unwrap())
}

fn write_config(dir: &TempDir, body: &str) -> PathBuf {
    let path = dir.path().join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn read_rows(path: &Path) -> Vec<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(|c| c.parse().unwrap()).collect())
        .collect()
}

fn section_error(path: &Path, exact: impl Fn(f64, f64) -> f64) -> f64 {
    read_rows(path)
        .iter()
        .map(|r| (r[2] - exact(r[0], r[1])).abs())
        .fold(0.0, f64::max)
}

#[test]
fn decompose_writes_three_closed_form_curves() {
    let out = TempDir::new().unwrap();
    let (code, msg) = run(&fixture(), out.path(), &["decompose"]);
    assert_eq!(code, 0);
    assert!(msg.contains("3 aligned curves"));
    let rows = read_rows(&out.path().join("eigencurves.csv"));
    assert_eq!(rows.len(), 64 * 3);
    for r in rows {
        let w = r[0];
        let exact = match r[1] as usize {
            1 => (PI * w / 2.0).cos().powi(2),
            2 => 0.5 * (PI * w).sin().powi(2),
            3 => w * w / 3.0,
            id => panic!("unexpected curve id {}", id),
        };
        assert!((r[2] - exact).abs() <= 1e-10, "{:?}", r);
    }
    let bounds = read_rows(&out.path().join("bounds.csv"));
    assert!(bounds.iter().all(|r| r[1] == 0.0 && r[2] > 0.0));
    let header = std::fs::read_to_string(out.path().join("eigenfunctions.csv")).unwrap();
    assert!(header.starts_with("omega,curve_id,t,value\n"));
}

#[test]
fn zero_kernel_has_no_curves_and_zero_bounds() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{"omega_grid":{"n":8},"s_quadrature":{"n":8},"kernel":{"type":"expression","expr":"0"}}"#,
    );
    let (code, _) = run(&cfg, dir.path(), &["decompose"]);
    assert_eq!(code, 0);
    let curves = std::fs::read_to_string(dir.path().join("eigencurves.csv")).unwrap();
    assert_eq!(curves, "omega,curve_id,lambda\n");
    let bounds = read_rows(&dir.path().join("bounds.csv"));
    assert_eq!(bounds.len(), 8);
    assert!(bounds.iter().all(|r| r[1] == 0.0 && r[2] == 0.0));
}

#[test]
fn malformed_expressions_exit_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{"kernel":{"type":"separable","terms":[{"curve":"sin(","basis":"1"}]}}"#,
    );
    assert_eq!(run(&cfg, dir.path(), &["decompose"]).0, 2);
    let (code, _) = run(
        &fixture(),
        dir.path(),
        &["funcalc", "--function", "lambda^", "--section", "f"],
    );
    assert_eq!(code, 2);
}

#[test]
fn usage_and_lookup_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let f = fixture();
    assert_eq!(run(&f, dir.path(), &["apply", "--section", "nope"]).0, 2);
    assert_eq!(
        run(
            &f,
            dir.path(),
            &["project", "--threshold", "nope", "--section", "f"]
        )
        .0,
        2
    );
    assert_eq!(run(&f, dir.path(), &["mix", "--partition", "nope"]).0, 2);
    assert_eq!(run(&f, dir.path(), &["reconstruct", "--rank", "4"]).0, 2);
    assert_eq!(
        run(
            &f,
            dir.path(),
            &[
                "rs",
                "--function",
                "lambda",
                "--mesh",
                "0",
                "--section",
                "f"
            ]
        )
        .0,
        2
    );
    assert_eq!(run(&f, dir.path(), &["--rank-tol=-1", "decompose"]).0, 2);
    assert_eq!(run(&f, dir.path(), &["frobnicate"]).0, 2);
    assert_eq!(
        fiberspec::cli::run_with(["fiberspec", "decompose"], &mut Vec::new()),
        2
    );
}

#[test]
fn non_finite_kernel_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{"omega_grid":{"n":4},"s_quadrature":{"n":6},
            "kernel":{"type":"expression","expr":"exp(800*t)*exp(800*s)"}}"#,
    );
    assert_eq!(run(&cfg, dir.path(), &["decompose"]).0, 3);
}

#[test]
fn apply_modes_match_closed_form_and_each_other() {
    let out = TempDir::new().unwrap();
    assert_eq!(
        run(&fixture(), out.path(), &["apply", "--section", "f"]).0,
        0
    );
    assert_eq!(
        run(
            &fixture(),
            out.path(),
            &["apply", "--section", "f", "--mode", "spectral"]
        )
        .0,
        0
    );
    let tf = |w: f64, t: f64| {
        w * (PI * w / 2.0).cos().powi(2) * (PI * t).sin()
            + 0.5 * (PI * w).sin().powi(2) * (2.0 * PI * t).sin()
    };
    let q = out.path().join("apply_quadrature.csv");
    let s = out.path().join("apply_spectral.csv");
    assert!(section_error(&q, tf) <= 1e-8);
    assert!(section_error(&s, tf) <= 1e-8);
    let diff = read_rows(&q)
        .iter()
        .zip(read_rows(&s))
        .map(|(a, b)| (a[2] - b[2]).abs())
        .fold(0.0, f64::max);
    assert!(diff <= 1e-10);
}

#[test]
fn funcalc_square_matches_closed_form() {
    let out = TempDir::new().unwrap();
    let (code, _) = run(
        &fixture(),
        out.path(),
        &["funcalc", "--function", "lambda^2", "--section", "f"],
    );
    assert_eq!(code, 0);
    let err = section_error(&out.path().join("funcalc.csv"), |w, t| {
        w * (PI * w / 2.0).cos().powi(4) * (PI * t).sin()
            + 0.25 * (PI * w).sin().powi(4) * (2.0 * PI * t).sin()
    });
    assert!(err <= 1e-8);
}

#[test]
fn project_at_constant_level_keeps_eigenmodes_below_it() {
    // at level 0.4 the sin(πt) component survives where cos²(πω/2) ≤ 0.4,
    // the sin(2πt) component where ½ sin²(πω) ≤ 0.4
    let out = TempDir::new().unwrap();
    assert_eq!(
        run(
            &fixture(),
            out.path(),
            &["project", "--threshold", "level", "--section", "f"]
        )
        .0,
        0
    );
    let err = section_error(&out.path().join("project.csv"), |w, t| {
        let a = if (PI * w / 2.0).cos().powi(2) <= 0.4 {
            w * (PI * t).sin()
        } else {
            0.0
        };
        let b = if 0.5 * (PI * w).sin().powi(2) <= 0.4 {
            (2.0 * PI * t).sin()
        } else {
            0.0
        };
        a + b
    });
    assert!(err <= 1e-10);
}

#[test]
fn rs_report_tracks_mesh() {
    let out = TempDir::new().unwrap();
    let (code, msg) = run(
        &fixture(),
        out.path(),
        &[
            "rs",
            "--function",
            "lambda",
            "--mesh",
            "0.01",
            "--section",
            "f",
        ],
    );
    assert_eq!(code, 0);
    assert!(msg.starts_with("rs error vs funcalc"));
    let report = read_rows(&out.path().join("rs_report.csv"));
    assert_eq!(report.len(), 1);
    let (mesh, err, norm) = (report[0][0], report[0][1], report[0][2]);
    assert_eq!(mesh, 0.01);
    assert!(err > 0.0 && err <= mesh * norm);
}

#[test]
fn spectrum_with_partition_reports_membership() {
    let out = TempDir::new().unwrap();
    let (code, msg) = run(
        &fixture(),
        out.path(),
        &["spectrum", "--partition", "thirds"],
    );
    assert_eq!(code, 0);
    assert!(msg.contains("membership PASS"));
    let spectra = read_rows(&out.path().join("spectrum.csv"));
    assert_eq!(spectra.len(), 64 * 4);
    let membership = read_rows(&out.path().join("membership.csv"));
    assert_eq!(membership.len(), 64);
    assert!(membership.iter().all(|r| r[3] <= 1e-8));
    let mix = read_rows(&out.path().join("mix.csv"));
    for r in &mix {
        let w = r[0];
        let exact = if w < 1.0 / 3.0 {
            (PI * w / 2.0).cos().powi(2)
        } else if w < 2.0 / 3.0 {
            0.5 * (PI * w).sin().powi(2)
        } else {
            w * w / 3.0
        };
        assert!((r[1] - exact).abs() <= 1e-10);
    }
}

#[test]
fn reconstruct_reports_dropped_mass() {
    let out = TempDir::new().unwrap();
    assert_eq!(
        run(
            &fixture(),
            out.path(),
            &[
                "--omega-n",
                "8",
                "--quad-n",
                "12",
                "reconstruct",
                "--rank",
                "3"
            ]
        )
        .0,
        0
    );
    let report = read_rows(&out.path().join("reconstruct_report.csv"));
    assert_eq!(report[0][0], 3.0);
    assert!(report[0][1] <= 1e-8);
    assert_eq!(
        read_rows(&out.path().join("reconstruct.csv")).len(),
        8 * 12 * 12
    );
}

#[test]
fn grid_overrides_change_output_size() {
    let out = TempDir::new().unwrap();
    assert_eq!(
        run(&fixture(), out.path(), &["--omega-n", "10", "decompose"]).0,
        0
    );
    assert_eq!(read_rows(&out.path().join("eigencurves.csv")).len(), 30);
}

#[test]
fn verify_passes_on_fixture_and_fails_on_indefinite_kernel() {
    let out = TempDir::new().unwrap();
    let (code, table) = run(&fixture(), out.path(), &["verify"]);
    assert_eq!(code, 0, "{}", table);
    assert!(table.contains(" 0 failed"));
    assert!(!table.contains("FAIL"));

    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{"omega_grid":{"n":8},"s_quadrature":{"n":8},
            "kernel":{"type":"separable","terms":[{"curve":"-omega","basis":"sqrt(2)*sin(pi*t)"}]}}"#,
    );
    let (code, table) = run(&cfg, dir.path(), &["verify"]);
    assert_eq!(code, 4);
    assert!(table
        .lines()
        .any(|l| l.starts_with("psd_min_eigenvalue") && l.ends_with("FAIL")));
    let csv = std::fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(csv.starts_with("check,value,relation,limit,status\n"));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for (dir, threads) in [(a.path(), "1"), (b.path(), "4")] {
        for args in [
            vec!["--threads", threads, "decompose"],
            vec!["--threads", threads, "spectrum", "--partition", "thirds"],
            vec![
                "--threads",
                threads,
                "funcalc",
                "--function",
                "exp(-lambda)",
                "--section",
                "f",
            ],
        ] {
            assert_eq!(run(&fixture(), dir, &args).0, 0);
        }
    }
    for name in [
        "eigencurves.csv",
        "eigenfunctions.csv",
        "bounds.csv",
        "spectrum.csv",
        "mix.csv",
        "membership.csv",
        "funcalc.csv",
    ] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{} differs", name);
    }
}
