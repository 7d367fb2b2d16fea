//! Operator application, the projector family E_λ, Riemann–Stieltjes sums
//! and the continuous functional calculus, all evaluated fiberwise.
//!
//! Every spectral operation below has the same shape at a node ω: expand
//! f(ω, ·) in the retained eigenfunctions, c_n = ⟨f, x_n⟩, and reweight
//!
//! ```text
//! Σ_n h(λ_n) c_n x_n + h(0) · (f − Σ_n c_n x_n)
//! ```
//!
//! where the second term is the component of f in the kernel of T_ω.

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expression, Var};
use crate::fiber::FiberDecomposition;
use crate::grid::{dot_weighted, ScalarField, Section};
use crate::kernel::Kernel;

pub const DEFAULT_TIE_TOL: f64 = 1e-12;
pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_EIGENSPACE_TOL: f64 = 1e-8;

/// Projector index λ(ω) with the tolerance used for λ_n(ω) ≤ λ(ω).
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdField {
    pub field: ScalarField,
    pub tie_tol: f64,
}

impl ThresholdField {
    pub fn new(field: ScalarField) -> Self {
        ThresholdField {
            field,
            tie_tol: DEFAULT_TIE_TOL,
        }
    }

    pub fn with_tie_tol(field: ScalarField, tie_tol: f64) -> Self {
        ThresholdField { field, tie_tol }
    }

    pub fn constant(d: &FiberDecomposition, value: f64, tie_tol: f64) -> Self {
        ThresholdField {
            field: ScalarField::constant(d.ogrid().clone(), value),
            tie_tol,
        }
    }

    fn admits(&self, i: usize, lambda: f64) -> bool {
        lambda <= self.field.get(i) + self.tie_tol
    }
}

fn check_section(d: &FiberDecomposition, f: &Section) -> Result<()> {
    let same_o = std::sync::Arc::ptr_eq(d.ogrid(), f.ogrid()) || **d.ogrid() == **f.ogrid();
    let same_s = std::sync::Arc::ptr_eq(d.squad(), f.squad()) || **d.squad() == **f.squad();
    if same_o && same_s {
        Ok(())
    } else {
        Err(Error::GridMismatch(
            "section and decomposition live on different grids".into(),
        ))
    }
}

/// Applies Σ_n h_n c_n x_n + h_0 (f − Σ_n c_n x_n) at every node, where
/// `weights(i, λ_n)` gives h_n and `null_weight(i)` gives h_0.
fn spectral_map(
    d: &FiberDecomposition,
    f: &Section,
    mut weights: impl FnMut(usize, f64) -> Result<f64>,
    mut null_weight: impl FnMut(usize) -> Result<f64>,
) -> Result<Section> {
    check_section(d, f)?;
    let w = d.squad().weights();
    let mut values = Vec::with_capacity(f.values().len());
    for (i, row) in f.rows().enumerate() {
        let fiber = d.fiber(i);
        let h0 = null_weight(i)?;
        let mut out: Vec<f64> = row.iter().map(|v| h0 * v).collect();
        for (&lambda, x) in fiber.eigenvalues().iter().zip(fiber.eigenfunctions()) {
            let c = dot_weighted(w, row, x);
            let h = weights(i, lambda)?;
            let coef = (h - h0) * c;
            if coef != 0.0 {
                out.iter_mut().zip(x).for_each(|(o, xj)| *o += coef * xj);
            }
        }
        values.extend(out);
    }
    Section::new(f.ogrid().clone(), f.squad().clone(), values)
}

/// (Tf)(ω_i, t_j) = Σ_k w_k k(ω_i, t_j, t_k) f(ω_i, t_k)
pub fn apply_quadrature(kernel: &Kernel, f: &Section) -> Result<Section> {
    let probe = Section::zeros(kernel.ogrid().clone(), kernel.squad().clone());
    probe.check_grids(f)?;
    let w = kernel.squad().weights();
    let n = w.len();
    Ok(Section::from_rows(
        f.ogrid().clone(),
        f.squad().clone(),
        |i, out| {
            let k = kernel.fiber_slice(i);
            let wf: Vec<f64> = f.row(i).iter().zip(w).map(|(a, b)| a * b).collect();
            for (j, o) in out.iter_mut().enumerate() {
                *o = k[j * n..(j + 1) * n]
                    .iter()
                    .zip(&wf)
                    .map(|(a, b)| a * b)
                    .sum();
            }
        },
    ))
}

/// Series form Σ_n λ_n(ω) ⟨f, x_n⟩ x_n over retained eigenpairs.
pub fn apply_spectral(d: &FiberDecomposition, f: &Section) -> Result<Section> {
    spectral_map(d, f, |_, lambda| Ok(lambda), |_| Ok(0.0))
}

/// E_λ f: retained components with λ_n(ω) ≤ λ(ω) + tie_tol, plus the
/// kernel component of f when 0 ≤ λ(ω) + tie_tol.
pub fn projector_apply(
    d: &FiberDecomposition,
    threshold: &ThresholdField,
    f: &Section,
) -> Result<Section> {
    if threshold.field.grid().len() != d.ogrid().len() {
        return Err(Error::GridMismatch(
            "threshold field has the wrong length".into(),
        ));
    }
    spectral_map(
        d,
        f,
        |i, lambda| {
            Ok(if threshold.admits(i, lambda) {
                1.0
            } else {
                0.0
            })
        },
        |i| Ok(if threshold.admits(i, 0.0) { 1.0 } else { 0.0 }),
    )
}

/// A scalar function of `lambda`, checked to be evaluable.
fn lambda_fn(g: &Expression) -> Result<impl Fn(f64) -> Result<f64> + '_> {
    if let Some(v) = g.first_var_outside(&[Var::Lambda]) {
        return Err(Error::Config(format!(
            "calculus function `{}` may only use `lambda` (found `{}`)",
            g, v
        )));
    }
    Ok(move |x: f64| Ok(g.evaluate(&Bindings::new().lambda(x))?))
}

/// Global spectral interval [min_ω m(ω), max_ω M(ω)].
pub fn spectral_interval(d: &FiberDecomposition) -> (f64, f64) {
    let (m, big_m) = d.spectral_bounds();
    let lo = m.values().iter().copied().fold(0.0, f64::min);
    let hi = big_m.values().iter().copied().fold(0.0, f64::max);
    (lo, hi)
}

/// g(T)f = Σ_n g(λ_n) ⟨f, x_n⟩ x_n + g(0) (f − Σ_n ⟨f, x_n⟩ x_n).
///
/// `g` must evaluate at both ends of [m*, M* + ε].
pub fn functional_calculus(
    d: &FiberDecomposition,
    g: &Expression,
    f: &Section,
    epsilon: f64,
) -> Result<Section> {
    let g = lambda_fn(g)?;
    let (lo, hi) = spectral_interval(d);
    g(lo)?;
    g(hi + epsilon)?;
    let g0 = g(0.0)?;
    spectral_map(d, f, |_, lambda| g(lambda), |_| Ok(g0))
}

/// Uniform partition m* = c_0 < … < c_K = M* + ε with step ≤ `mesh`.
pub fn rs_partition(d: &FiberDecomposition, mesh: f64, epsilon: f64) -> Result<Vec<f64>> {
    if mesh.is_nan() || mesh <= 0.0 || mesh.is_infinite() {
        return Err(Error::InvalidMesh(mesh));
    }
    let (lo, hi) = spectral_interval(d);
    let hi = hi + epsilon;
    let cells = (((hi - lo) / mesh).ceil() as usize).max(1);
    let step = (hi - lo) / cells as f64;
    Ok((0..=cells)
        .map(|k| if k == cells { hi } else { lo + k as f64 * step })
        .collect())
}

/// Right-endpoint Riemann–Stieltjes sum
/// Σ_k g(c_k) (E_{c_k} − E_{c_{k−1}}) f + g(c_0) E_{c_0} f
/// over the partition from [`rs_partition`], with constant thresholds.
pub fn riemann_stieltjes_apply(
    d: &FiberDecomposition,
    g: &Expression,
    f: &Section,
    mesh: f64,
    epsilon: f64,
    tie_tol: f64,
) -> Result<Section> {
    let g = lambda_fn(g)?;
    let points = rs_partition(d, mesh, epsilon)?;
    let project = |c: f64| projector_apply(d, &ThresholdField::constant(d, c, tie_tol), f);

    let mut prev = project(points[0])?;
    let mut acc = prev.scale(g(points[0])?);
    for &c in &points[1..] {
        let next = project(c)?;
        let increment = next.sub(&prev)?;
        acc = acc.add(&increment.scale(g(c)?))?;
        prev = next;
    }
    Ok(acc)
}

/// Eigenspace ker(λ I − T) at each node, as the retained eigenfunctions with
/// |λ_n(ω) − λ(ω)| ≤ tol.
#[derive(Debug, Clone)]
pub struct Eigenspace {
    pub bases: Vec<Vec<Vec<f64>>>,
    pub multiplicity: ScalarField,
}

pub fn eigenspace(d: &FiberDecomposition, lambda: &ScalarField, tol: f64) -> Result<Eigenspace> {
    if lambda.grid().len() != d.ogrid().len() {
        return Err(Error::GridMismatch(
            "eigenvalue field has the wrong length".into(),
        ));
    }
    let bases: Vec<Vec<Vec<f64>>> = d
        .fibers()
        .iter()
        .enumerate()
        .map(|(i, fiber)| {
            fiber
                .eigenvalues()
                .iter()
                .zip(fiber.eigenfunctions())
                .filter(|(l, _)| (*l - lambda.get(i)).abs() <= tol)
                .map(|(_, x)| x.clone())
                .collect()
        })
        .collect();
    let multiplicity = ScalarField::new(
        d.ogrid().clone(),
        bases.iter().map(|b| b.len() as f64).collect(),
    )?;
    Ok(Eigenspace {
        bases,
        multiplicity,
    })
}

/// Section whose ω-slice is the eigenfunction of the aligned curve `id`
/// (zero where the curve is absent).
pub fn curve_section(d: &FiberDecomposition, id: usize, aligned: bool) -> Section {
    Section::from_rows(d.ogrid().clone(), d.squad().clone(), |i, out| {
        if let Some(x) = d.curve_function(id, i, aligned) {
            out.copy_from_slice(x);
        }
    })
}
