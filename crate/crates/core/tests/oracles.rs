//! Closed-form oracles for the numerical building blocks.

use std::f64::consts::PI;

use fiberspec::expr::parse;
use fiberspec::fiber::{decompose_with, jacobi_eigh_with, DecomposeOptions, SymMatrix};
use fiberspec::grid::{build_omega_grid, build_s_quadrature, gauss_legendre, QuadRule};
use fiberspec::kernel::{psd_check, Kernel, KernelSpec, SampledKernel};
use fiberspec::Error;

#[test]
fn three_point_gauss_legendre() {
    let h = (0.6f64).sqrt();
    let (x, w) = gauss_legendre(3);
    for (a, b) in x.iter().zip([-h, 0.0, h]) {
        assert!((a - b).abs() <= 1e-15);
    }
    for (a, b) in w.iter().zip([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0]) {
        assert!((a - b).abs() <= 1e-15);
    }
    let q = build_s_quadrature(QuadRule::GaussLegendre, 3).unwrap();
    for (a, b) in q.nodes().iter().zip([0.5 - h / 2.0, 0.5, 0.5 + h / 2.0]) {
        assert!((a - b).abs() <= 1e-15);
    }
    for (a, b) in q.weights().iter().zip([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0]) {
        assert!((a - b).abs() <= 1e-15);
    }
}

#[test]
fn gauss_legendre_integrates_smooth_periodic_functions() {
    let q = build_s_quadrature(QuadRule::GaussLegendre, 64).unwrap();
    assert!((q.integrate(|t| (PI * t).sin().powi(2)) - 0.5).abs() <= 1e-15);
    assert!((q.integrate(|t| t.exp()) - (1f64.exp() - 1.0)).abs() <= 1e-14);
}

#[test]
fn rank_one_kernel_with_unnormalized_basis() {
    // k = (1 + ω) t s has the single eigenpair ((1 + ω)/3, √3 t)
    let og = build_omega_grid(5).unwrap();
    let sq = build_s_quadrature(QuadRule::GaussLegendre, 6).unwrap();
    let e = parse("(1 + omega) * t * s").unwrap();
    let k = Kernel::from_sampled(SampledKernel::from_expr(&e, og.clone(), sq.clone()).unwrap())
        .unwrap();
    let d = decompose_with(&k, &DecomposeOptions::default()).unwrap();
    for (i, w) in og.nodes().iter().enumerate() {
        let f = d.fiber(i);
        assert_eq!(f.rank(), 1);
        assert!((f.eigenvalues()[0] - (1.0 + w) / 3.0).abs() <= 1e-14);
        for (x, t) in f.eigenfunctions()[0].iter().zip(sq.nodes()) {
            assert!((x - 3f64.sqrt() * t).abs() <= 1e-13);
        }
    }
}

#[test]
fn brownian_covariance_spectrum() {
    // min(t, s) has eigenvalues 1 / ((k - 1/2) π)². The kink on the diagonal
    // limits Nyström to algebraic convergence, so check accuracy and that
    // refining the rule reduces the error.
    let error = |n: usize| -> Vec<f64> {
        let og = build_omega_grid(2).unwrap();
        let sq = build_s_quadrature(QuadRule::GaussLegendre, n).unwrap();
        let e = parse("min(t, s)").unwrap();
        let k = Kernel::from_sampled(SampledKernel::from_expr(&e, og, sq).unwrap()).unwrap();
        let d = decompose_with(&k, &DecomposeOptions::default()).unwrap();
        assert!(psd_check(&d, 1e-10).ok);
        (1..=4)
            .map(|kk| {
                let exact = 1.0 / ((kk as f64 - 0.5) * PI).powi(2);
                (d.fiber(0).eigenvalues()[kk - 1] - exact).abs() / exact
            })
            .collect()
    };
    let coarse = error(16);
    let fine = error(64);
    for (c, f) in coarse.iter().zip(&fine) {
        assert!(*f <= 1e-2);
        assert!(f < c);
    }
}

#[test]
fn indefinite_kernel_fails_psd_and_keeps_negative_curves() {
    let og = build_omega_grid(4).unwrap();
    let sq = build_s_quadrature(QuadRule::GaussLegendre, 24).unwrap();
    let e = parse("2*sin(pi*t)*sin(pi*s) - omega*2*sin(2*pi*t)*sin(2*pi*s)").unwrap();
    let k = Kernel::from_sampled(SampledKernel::from_expr(&e, og.clone(), sq).unwrap()).unwrap();
    let d = decompose_with(&k, &DecomposeOptions::default()).unwrap();
    let report = psd_check(&d, 1e-12);
    assert!(!report.ok);
    assert!((report.worst + og.nodes()[3]).abs() <= 1e-12);
    for i in 0..4 {
        assert!((d.lower_bound().get(i) + og.nodes()[i]).abs() <= 1e-12);
        assert!((d.upper_bound().get(i) - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn asymmetric_kernel_expression_is_rejected() {
    let og = build_omega_grid(2).unwrap();
    let sq = build_s_quadrature(QuadRule::GaussLegendre, 4).unwrap();
    let err = SampledKernel::from_expr(&parse("t").unwrap(), og.clone(), sq.clone())
        .and_then(|k| Kernel::new(&KernelSpec::Sampled(k), og, sq));
    assert!(matches!(err, Err(Error::AsymmetricKernel(_))));
}

#[test]
fn jacobi_reports_non_convergence() {
    let a = SymMatrix::from_fn(6, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
    let err = jacobi_eigh_with(&a, 1e-15, 1).unwrap_err();
    assert!(matches!(err, Error::NoConvergence { sweeps: 1, .. }));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn jacobi_on_diagonal_input_is_exact() {
    let a = SymMatrix::from_fn(4, |i, j| {
        if i == j {
            [3.0, -1.0, 7.0, 0.5][i]
        } else {
            0.0
        }
    });
    let e = jacobi_eigh_with(&a, 1e-12, 8).unwrap();
    assert_eq!(e.values, vec![7.0, 3.0, 0.5, -1.0]);
    assert_eq!(e.sweeps, 0);
}
