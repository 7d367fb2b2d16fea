//! Acceptance gate. Runs without the libtest harness so every criterion
//! prints its PASS/FAIL line on a plain `cargo test`; exits nonzero if any
//! criterion fails.

use std::f64::consts::{PI, SQRT_2};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;

use fiberspec::calculus::{apply_quadrature, apply_spectral, functional_calculus};
use fiberspec::config::{Config, Overrides};
use fiberspec::fiber::{decompose_with, jacobi_eigh, FiberDecomposition, SymMatrix};
use fiberspec::grid::{fiber_inner_product, l22_distance, l22_norm, ScalarField, Section};
use fiberspec::kernel::{mercer_reconstruct, sup_difference, Kernel};
use fiberspec::spectrum::{mix_field, spm_membership};
use fiberspec::verify::{self, projector_suite, random_separable_kernel, rs_error};

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/finite_rank_example.json")
}

struct Fixture {
    config: Config,
    kernel: Kernel,
    d: FiberDecomposition,
    f: Section,
}

fn fixture() -> Fixture {
    let config = Config::load(&fixture_path(), &Overrides::default()).expect("fixture config");
    let kernel = config.build_kernel().expect("kernel");
    let d = decompose_with(&kernel, &config.decompose_options()).expect("decomposition");
    let f = config.section("f").expect("section f");
    Fixture {
        config,
        kernel,
        d,
        f,
    }
}

fn sup_diff(a: &Section, b: &Section) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn closed_form(fx: &Fixture, f: impl Fn(f64, f64) -> f64) -> Section {
    Section::from_fn(fx.d.ogrid().clone(), fx.d.squad().clone(), f)
}

fn curves(w: f64) -> [f64; 3] {
    [
        (PI * w / 2.0).cos().powi(2),
        0.5 * (PI * w).sin().powi(2),
        w * w / 3.0,
    ]
}

fn criterion_1(fx: &Fixture) -> Outcome {
    let tf = apply_quadrature(&fx.kernel, &fx.f).unwrap();
    let exact = closed_form(fx, |w, t| {
        w * (PI * w / 2.0).cos().powi(2) * (PI * t).sin()
            + 0.5 * (PI * w).sin().powi(2) * (2.0 * PI * t).sin()
    });
    let err = sup_diff(&tf, &exact);
    outcome(err <= 1e-8, format!("sup |Tf - closed form| = {:.3e}", err))
}

fn criterion_2(fx: &Fixture) -> Outcome {
    let mut worst = 0.0f64;
    for (n, expected) in [
        (
            1.0,
            Box::new(|w: f64| w / SQRT_2) as Box<dyn Fn(f64) -> f64>,
        ),
        (2.0, Box::new(|_| 1.0 / SQRT_2)),
        (3.0, Box::new(|_| 0.0)),
    ] {
        let phi = closed_form(fx, |_, t| SQRT_2 * (n * PI * t).sin());
        let ip = fiber_inner_product(&fx.f, &phi).unwrap();
        for (i, &w) in fx.d.ogrid().nodes().iter().enumerate() {
            worst = worst.max((ip.get(i) - expected(w)).abs());
        }
    }
    outcome(
        worst <= 1e-10,
        format!("max |<f,phi_n> - closed form| = {:.3e}", worst),
    )
}

fn criterion_3(fx: &Fixture) -> Outcome {
    let mut set_err = 0.0f64;
    let mut curve_err = 0.0f64;
    let mut rank_ok = true;
    for (i, &w) in fx.d.ogrid().nodes().iter().enumerate() {
        let mut expected = curves(w);
        expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let got = fx.d.fiber(i).eigenvalues();
        if got.len() != 3 {
            rank_ok = false;
            continue;
        }
        for (a, b) in got.iter().zip(&expected) {
            set_err = set_err.max((a - b).abs());
        }
        for (k, c) in curves(w).iter().enumerate() {
            match fx.d.curve_value(k + 1, i, true) {
                Some(v) => curve_err = curve_err.max((v - c).abs()),
                None => curve_err = f64::INFINITY,
            }
        }
    }
    outcome(
        rank_ok && set_err <= 1e-8 && curve_err <= 1e-6 && fx.d.aligned_labels().count() == 3,
        format!(
            "rank 3 everywhere: {}, set error {:.3e}, aligned curve error {:.3e}",
            rank_ok, set_err, curve_err
        ),
    )
}

fn criterion_4(fx: &Fixture) -> Outcome {
    let g = fiberspec::expr::parse("lambda^2").unwrap();
    let gf = functional_calculus(&fx.d, &g, &fx.f, fx.config.epsilon).unwrap();
    let exact = closed_form(fx, |w, t| {
        w * (PI * w / 2.0).cos().powi(4) * (PI * t).sin()
            + 0.25 * (PI * w).sin().powi(4) * (2.0 * PI * t).sin()
    });
    let closed = sup_diff(&gf, &exact);
    let ttf = apply_quadrature(&fx.kernel, &apply_quadrature(&fx.kernel, &fx.f).unwrap()).unwrap();
    let hom = l22_distance(&gf, &ttf).unwrap();
    outcome(
        closed <= 1e-8 && hom <= 1e-10,
        format!(
            "sup error vs closed form {:.3e}, ||g(T)f - T(Tf)|| = {:.3e}",
            closed, hom
        ),
    )
}

fn criterion_5(fx: &Fixture) -> Outcome {
    let tie = fx.config.tolerances.tie_tol;
    let eps = fx.config.epsilon;
    let mut rng = verify::rng(51);
    let mut worst = projector_suite(&mut rng, &fx.kernel, &fx.d, 20, tie, eps).unwrap();
    for rank in 1..=5 {
        let spec = random_separable_kernel(&mut rng, rank);
        let k = Kernel::new(&spec, fx.d.ogrid().clone(), fx.d.squad().clone()).unwrap();
        let d = decompose_with(&k, &fx.config.decompose_options()).unwrap();
        worst.merge(&projector_suite(&mut rng, &k, &d, 20, tie, eps).unwrap());
    }
    let (name, value) =
        worst
            .named()
            .into_iter()
            .fold(("none", 0.0), |a, b| if b.1 > a.1 { b } else { a });
    outcome(
        worst.worst() <= 1e-9,
        format!(
            "worst residual {:.3e} ({}) over 6 kernels x 20 thresholds",
            value, name
        ),
    )
}

fn criterion_6(fx: &Fixture) -> Outcome {
    let meshes = [0.04, 0.02, 0.01];
    let norm = l22_norm(&fx.f);
    let errs: Vec<f64> = meshes
        .iter()
        .map(|&m| {
            rs_error(
                &fx.kernel,
                &fx.d,
                &fx.f,
                m,
                fx.config.epsilon,
                fx.config.tolerances.tie_tol,
            )
            .unwrap()
        })
        .collect();
    let bounded = meshes.iter().zip(&errs).all(|(m, e)| *e <= m * norm);
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    let halving = ratios.iter().all(|r| *r >= 1.6);
    outcome(
        bounded && halving,
        format!(
            "errors {:.3e} {:.3e} {:.3e} (bounds {:.3e} {:.3e} {:.3e}), ratios {:.3} {:.3}",
            errs[0],
            errs[1],
            errs[2],
            meshes[0] * norm,
            meshes[1] * norm,
            meshes[2] * norm,
            ratios[0],
            ratios[1]
        ),
    )
}

fn criterion_7(fx: &Fixture) -> Outcome {
    let full = Kernel::from_sampled(mercer_reconstruct(&fx.d, 3).unwrap()).unwrap();
    let e3 = sup_difference(&fx.kernel, &full).unwrap();
    let two = Kernel::from_sampled(mercer_reconstruct(&fx.d, 2).unwrap()).unwrap();
    let e2 = sup_difference(&fx.kernel, &two).unwrap();
    // sup over the grid of the discarded term λ_3 x_3(t) x_3(s)
    let mut dropped = 0.0f64;
    for fiber in fx.d.fibers() {
        if let (Some(l), Some(x)) = (fiber.eigenvalues().get(2), fiber.eigenfunctions().get(2)) {
            let xm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            dropped = dropped.max(l.abs() * xm * xm);
        }
    }
    outcome(
        e3 <= 1e-8 && (e2 - dropped).abs() <= 1e-8,
        format!(
            "rank-3 sup error {:.3e}; rank-2 error {:.6e} vs dropped term {:.6e}",
            e3, e2, dropped
        ),
    )
}

fn criterion_8(fx: &Fixture) -> Outcome {
    let tol = 1e-8;
    let p = fx.config.partition("thirds").unwrap();
    let mixed = mix_field(&fx.d, &p, true).unwrap();
    let m = spm_membership(&fx.d, &mixed, tol).unwrap();
    let c = spm_membership(
        &fx.d,
        &ScalarField::constant(fx.d.ogrid().clone(), 0.9),
        tol,
    )
    .unwrap();
    outcome(
        m.member && !c.member && !c.violations.is_empty(),
        format!(
            "mixed field member: {} ({} violations); constant 0.9 member: {} ({} violations)",
            m.member,
            m.violations.len(),
            c.member,
            c.violations.len()
        ),
    )
}

fn roots_2x2(a: &SymMatrix) -> Vec<f64> {
    let (p, q, r) = (a.get(0, 0), a.get(0, 1), a.get(1, 1));
    let mid = 0.5 * (p + r);
    let rad = (0.25 * (p - r).powi(2) + q * q).sqrt();
    vec![mid + rad, mid - rad]
}

// Trigonometric solution of the symmetric 3x3 characteristic cubic.
fn roots_3x3(a: &SymMatrix) -> Vec<f64> {
    let p1 = a.get(0, 1).powi(2) + a.get(0, 2).powi(2) + a.get(1, 2).powi(2);
    let q = a.trace() / 3.0;
    let p2 = (0..3).map(|i| (a.get(i, i) - q).powi(2)).sum::<f64>() + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p == 0.0 {
        return vec![q; 3];
    }
    let b = SymMatrix::from_fn(3, |i, j| (a.get(i, j) - if i == j { q } else { 0.0 }) / p);
    let det = b.get(0, 0) * (b.get(1, 1) * b.get(2, 2) - b.get(1, 2) * b.get(2, 1))
        - b.get(0, 1) * (b.get(1, 0) * b.get(2, 2) - b.get(1, 2) * b.get(2, 0))
        + b.get(0, 2) * (b.get(1, 0) * b.get(2, 1) - b.get(1, 1) * b.get(2, 0));
    let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    let l1 = q + 2.0 * p * phi.cos();
    let l3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let mut out = vec![l1, 3.0 * q - l1 - l3, l3];
    out.sort_by(|x, y| y.partial_cmp(x).unwrap());
    out
}

fn criterion_9() -> Outcome {
    let mut rng = verify::rng(9);
    let (mut resid, mut ortho, mut trace, mut closed) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for trial in 0..100 {
        let n = if trial < 20 {
            2 + trial % 2
        } else {
            rng.gen_range(1..=8)
        };
        let raw: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = SymMatrix::from_fn(n, |i, j| {
            if i <= j {
                raw[i * n + j]
            } else {
                raw[j * n + i]
            }
        });
        let e = jacobi_eigh(&a, 1e-14).unwrap();
        for (l, v) in e.values.iter().zip(&e.vectors) {
            let av = a.mul_vec(v);
            let r = av
                .iter()
                .zip(v)
                .map(|(x, y)| (x - l * y).powi(2))
                .sum::<f64>()
                .sqrt();
            resid = resid.max(r);
        }
        for (p, u) in e.vectors.iter().enumerate() {
            for (q, v) in e.vectors.iter().enumerate() {
                let dot: f64 = u.iter().zip(v).map(|(x, y)| x * y).sum();
                ortho = ortho.max((dot - if p == q { 1.0 } else { 0.0 }).abs());
            }
        }
        trace = trace.max((e.values.iter().sum::<f64>() - a.trace()).abs());
        let roots = match n {
            2 => Some(roots_2x2(&a)),
            3 => Some(roots_3x3(&a)),
            _ => None,
        };
        if let Some(r) = roots {
            for (x, y) in r.iter().zip(&e.values) {
                closed = closed.max((x - y).abs());
            }
        }
    }
    outcome(
        resid <= 1e-10 && ortho <= 1e-12 && trace <= 1e-10 && closed <= 1e-12,
        format!(
            "residual {:.3e}, orthonormality {:.3e}, trace {:.3e}, closed-form roots {:.3e}",
            resid, ortho, trace, closed
        ),
    )
}

fn criterion_10(fx: &Fixture) -> Outcome {
    let x = closed_form(fx, |w, t| w * SQRT_2 * (PI * t).sin());
    let lambda = ScalarField::from_fn(fx.d.ogrid().clone(), |w| (PI * w / 2.0).cos().powi(2));
    let tx = apply_quadrature(&fx.kernel, &x).unwrap();
    let r = l22_distance(&x.scale_by_field(&lambda).unwrap(), &tx).unwrap();
    let rs = l22_distance(
        &x.scale_by_field(&lambda).unwrap(),
        &apply_spectral(&fx.d, &x).unwrap(),
    )
    .unwrap();
    outcome(
        r <= 1e-8 && rs <= 1e-8,
        format!(
            "||(lambda I - T)(alpha x)|| = {:.3e} (quadrature), {:.3e} (spectral)",
            r, rs
        ),
    )
}

fn run_cli(args: &[&str], out: &Path) -> i32 {
    let config = fixture_path();
    let mut full = vec![
        "fiberspec".to_string(),
        "--config".into(),
        config.display().to_string(),
        "--out".into(),
        out.display().to_string(),
    ];
    full.extend(args.iter().map(|s| s.to_string()));
    fiberspec::cli::run_with(full, &mut std::io::sink())
}

fn criterion_11() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut codes = Vec::new();
    for dir in [a.path(), b.path()] {
        codes.push(run_cli(&["decompose"], dir));
        codes.push(run_cli(&["--threads", "3", "verify"], dir));
    }
    let files = [
        "eigencurves.csv",
        "eigenfunctions.csv",
        "bounds.csv",
        "verify.csv",
    ];
    let mut identical = true;
    for name in files {
        let x = std::fs::read(a.path().join(name)).unwrap_or_default();
        let y = std::fs::read(b.path().join(name)).unwrap_or_default();
        identical &= !x.is_empty() && x == y;
    }
    outcome(
        identical && codes.iter().all(|&c| c == 0),
        format!(
            "exit codes {:?}, {} files byte-identical: {}",
            codes,
            files.len(),
            identical
        ),
    )
}

fn main() {
    let fx = fixture();
    let criteria: Vec<Criterion> = vec![
        (
            "operator application matches closed form",
            Box::new(|| criterion_1(&fx)),
        ),
        ("fiber inner products", Box::new(|| criterion_2(&fx))),
        (
            "fiber spectra and aligned curves",
            Box::new(|| criterion_3(&fx)),
        ),
        (
            "functional calculus lambda^2",
            Box::new(|| criterion_4(&fx)),
        ),
        ("projector axiom suite", Box::new(|| criterion_5(&fx))),
        (
            "Riemann-Stieltjes convergence",
            Box::new(|| criterion_6(&fx)),
        ),
        ("Mercer reconstruction", Box::new(|| criterion_7(&fx))),
        (
            "spm membership of the mixed field",
            Box::new(|| criterion_8(&fx)),
        ),
        ("Jacobi eigensolver oracle", Box::new(criterion_9)),
        ("eigenspace module closure", Box::new(|| criterion_10(&fx))),
        (
            "determinism of verify and decompose",
            Box::new(criterion_11),
        ),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        if !o.passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {}: {} [{:.2}s]",
            n + 1,
            if o.passed { "PASS" } else { "FAIL" },
            name,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
