//! Per-ω Nyström discretization and eigen-decomposition of T_ω.
//!
//! For each ω node the fiber operator T_ω f(t) = ∫ k(ω, t, s) f(s) ds is
//! discretized as the symmetric matrix A = W^{1/2} K W^{1/2}. Its eigenvectors
//! v map to eigenfunction node values x(t_j) = v_j / √w_j, which are
//! orthonormal in the quadrature inner product.

mod align;
mod jacobi;

use std::sync::Arc;

use rayon::prelude::*;

pub use align::{CurveLabels, DEGENERACY_GAP, MIN_OVERLAP};
pub use jacobi::{
    jacobi_eigh, jacobi_eigh_with, SymEigen, SymMatrix, DEFAULT_EIG_TOL, DEFAULT_MAX_SWEEPS,
};

use crate::error::{Error, Result};
use crate::grid::{OmegaGrid, SQuadrature, ScalarField};
use crate::kernel::Kernel;

pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Nyström matrix A[j][k] = √w_j · k(ω_i, t_j, t_k) · √w_k.
pub fn assemble_fiber_matrix(kernel: &Kernel, i: usize) -> Result<SymMatrix> {
    if i >= kernel.ogrid().len() {
        return Err(Error::IndexOutOfRange(format!(
            "omega node {} of {}",
            i,
            kernel.ogrid().len()
        )));
    }
    let sq = kernel.squad();
    let n = sq.len();
    let root_w: Vec<f64> = sq.weights().iter().map(|w| w.sqrt()).collect();
    let mut data = kernel.fiber_slice(i);
    for j in 0..n {
        for k in 0..n {
            data[j * n + k] *= root_w[j] * root_w[k];
        }
    }
    SymMatrix::from_row_major(n, data)
}

/// x_n(t_j) = v_n[j] / √w_j for each eigenvector.
pub fn extract_eigenfunctions(vectors: &[Vec<f64>], squad: &SQuadrature) -> Vec<Vec<f64>> {
    let inv_root: Vec<f64> = squad.weights().iter().map(|w| 1.0 / w.sqrt()).collect();
    vectors
        .iter()
        .map(|v| v.iter().zip(&inv_root).map(|(a, b)| a * b).collect())
        .collect()
}

/// Flips `x` so that its largest-magnitude component is positive. Ties
/// (within a relative 1e-9) go to the lowest index.
fn fix_sign(x: &mut [f64]) {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return;
    }
    if let Some(j) = x.iter().position(|v| v.abs() >= peak * (1.0 - 1e-9)) {
        if x[j] < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeOptions {
    pub rank_tol: f64,
    pub eig_tol: f64,
    pub max_sweeps: usize,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            rank_tol: DEFAULT_RANK_TOL,
            eig_tol: DEFAULT_EIG_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

/// Retained eigen-data of one fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberEigen {
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<Vec<f64>>,
    min_eigenvalue: f64,
    max_eigenvalue: f64,
    dropped_trace: f64,
    matrix_trace: f64,
}

impl FiberEigen {
    /// Retained eigenvalues, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenfunction node values, paired with [`Self::eigenvalues`].
    pub fn eigenfunctions(&self) -> &[Vec<f64>] {
        &self.eigenfunctions
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Smallest eigenvalue of the assembled matrix, retained or not.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// Largest eigenvalue of the assembled matrix, retained or not.
    pub fn max_eigenvalue(&self) -> f64 {
        self.max_eigenvalue
    }

    /// Sum of the eigenvalues that fell below the rank threshold.
    pub fn dropped_trace(&self) -> f64 {
        self.dropped_trace
    }

    pub fn matrix_trace(&self) -> f64 {
        self.matrix_trace
    }
}

fn decompose_fiber(kernel: &Kernel, i: usize, opts: &DecomposeOptions) -> Result<FiberEigen> {
    let a = assemble_fiber_matrix(kernel, i)?;
    let eig = jacobi_eigh_with(&a, opts.eig_tol, opts.max_sweeps)?;
    let scale = eig
        .values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let cutoff = opts.rank_tol * scale;
    let mut eigenvalues = Vec::new();
    let mut kept = Vec::new();
    let mut dropped_trace = 0.0;
    for (value, vector) in eig.values.iter().zip(eig.vectors) {
        if value.abs() > cutoff {
            eigenvalues.push(*value);
            kept.push(vector);
        } else {
            dropped_trace += value;
        }
    }
    let mut eigenfunctions = extract_eigenfunctions(&kept, kernel.squad());
    eigenfunctions.iter_mut().for_each(|x| fix_sign(x));
    Ok(FiberEigen {
        eigenvalues,
        eigenfunctions,
        min_eigenvalue: eig.values.last().copied().unwrap_or(0.0),
        max_eigenvalue: eig.values.first().copied().unwrap_or(0.0),
        dropped_trace,
        matrix_trace: a.trace(),
    })
}

/// Eigen-decomposition of every fiber, with aligned curve labels and the
/// spectral bounds m(ω) = min(0, λ_min(ω)), M(ω) = max(0, λ_max(ω)) taken
/// over retained eigenvalues.
#[derive(Debug, Clone)]
pub struct FiberDecomposition {
    ogrid: Arc<OmegaGrid>,
    squad: Arc<SQuadrature>,
    fibers: Vec<FiberEigen>,
    aligned: CurveLabels,
    descending: CurveLabels,
    lower: ScalarField,
    upper: ScalarField,
    rank_tol: f64,
}

pub fn decompose_all_fibers(kernel: &Kernel, rank_tol: f64) -> Result<FiberDecomposition> {
    decompose_with(
        kernel,
        &DecomposeOptions {
            rank_tol,
            ..DecomposeOptions::default()
        },
    )
}

pub fn decompose_with(kernel: &Kernel, opts: &DecomposeOptions) -> Result<FiberDecomposition> {
    let fibers = (0..kernel.ogrid().len())
        .into_par_iter()
        .map(|i| decompose_fiber(kernel, i, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(FiberDecomposition::from_fibers(
        kernel.ogrid().clone(),
        kernel.squad().clone(),
        fibers,
        opts.rank_tol,
    ))
}

impl FiberDecomposition {
    fn from_fibers(
        ogrid: Arc<OmegaGrid>,
        squad: Arc<SQuadrature>,
        fibers: Vec<FiberEigen>,
        rank_tol: f64,
    ) -> Self {
        let lower = fibers
            .iter()
            .map(|f| f.eigenvalues.last().map_or(0.0, |&v| v.min(0.0)))
            .collect();
        let upper = fibers
            .iter()
            .map(|f| f.eigenvalues.first().map_or(0.0, |&v| v.max(0.0)))
            .collect();
        let descending = CurveLabels::descending(fibers.iter().map(FiberEigen::rank));
        let views: Vec<align::NodeView<'_>> = fibers
            .iter()
            .map(|f| align::NodeView {
                values: &f.eigenvalues,
                functions: &f.eigenfunctions,
            })
            .collect();
        let aligned = align::align(&views, squad.weights());
        FiberDecomposition {
            lower: ScalarField::new(ogrid.clone(), lower).expect("finite bounds"),
            upper: ScalarField::new(ogrid.clone(), upper).expect("finite bounds"),
            ogrid,
            squad,
            fibers,
            aligned,
            descending,
            rank_tol,
        }
    }

    pub fn ogrid(&self) -> &Arc<OmegaGrid> {
        &self.ogrid
    }

    pub fn squad(&self) -> &Arc<SQuadrature> {
        &self.squad
    }

    pub fn fibers(&self) -> &[FiberEigen] {
        &self.fibers
    }

    pub fn fiber(&self, i: usize) -> &FiberEigen {
        &self.fibers[i]
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    pub fn max_rank(&self) -> usize {
        self.fibers.iter().map(FiberEigen::rank).max().unwrap_or(0)
    }

    /// Curve ids from overlap matching.
    pub fn aligned_labels(&self) -> &CurveLabels {
        &self.aligned
    }

    /// Curve ids = descending-order index.
    pub fn descending_labels(&self) -> &CurveLabels {
        &self.descending
    }

    pub fn labels(&self, aligned: bool) -> &CurveLabels {
        if aligned {
            &self.aligned
        } else {
            &self.descending
        }
    }

    /// Value of curve `id` (1-based) at node `i`, or `None` where the curve is
    /// not among the retained eigenpairs.
    pub fn curve_value(&self, id: usize, i: usize, aligned: bool) -> Option<f64> {
        self.labels(aligned)
            .position(i, id)
            .map(|k| self.fibers[i].eigenvalues[k])
    }

    /// Eigenfunction of curve `id` at node `i`.
    pub fn curve_function(&self, id: usize, i: usize, aligned: bool) -> Option<&[f64]> {
        self.labels(aligned)
            .position(i, id)
            .map(|k| self.fibers[i].eigenfunctions[k].as_slice())
    }

    /// (m, M)
    pub fn spectral_bounds(&self) -> (&ScalarField, &ScalarField) {
        (&self.lower, &self.upper)
    }

    pub fn lower_bound(&self) -> &ScalarField {
        &self.lower
    }

    pub fn upper_bound(&self) -> &ScalarField {
        &self.upper
    }
}

/// Re-runs the overlap matching on a finished decomposition.
pub fn align_curves(d: &FiberDecomposition) -> CurveLabels {
    let views: Vec<align::NodeView<'_>> = d
        .fibers
        .iter()
        .map(|f| align::NodeView {
            values: &f.eigenvalues,
            functions: &f.eigenfunctions,
        })
        .collect();
    align::align(&views, d.squad.weights())
}

pub fn spectral_bounds(d: &FiberDecomposition) -> (ScalarField, ScalarField) {
    (d.lower.clone(), d.upper.clone())
}
