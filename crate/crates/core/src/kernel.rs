//! Partially integral kernels k(ω, t, s).
//!
//! A [`KernelSpec`] is the declaration (separable closed forms or a sampled
//! tensor); a [`Kernel`] is a declaration bound to a pair of grids with all
//! expressions evaluated, which is what the fiber and calculus modules use.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expression, Var};
use crate::fiber::FiberDecomposition;
use crate::grid::{OmegaGrid, SQuadrature};

/// Sampled kernels with asymmetry up to this value are symmetrized on load.
pub const SYMMETRIZE_TOL: f64 = 1e-9;

/// One term curve(ω)·basis(t)·basis(s) of a separable kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableTerm {
    pub curve: Expression,
    pub basis: Expression,
}

impl SeparableTerm {
    pub fn new(curve: Expression, basis: Expression) -> Result<Self> {
        if let Some(v) = curve.first_var_outside(&[Var::Omega]) {
            return Err(Error::Config(format!(
                "kernel curve `{}` must depend on omega only (found `{}`)",
                curve, v
            )));
        }
        if let Some(v) = basis.first_var_outside(&[Var::T]) {
            return Err(Error::Config(format!(
                "kernel basis `{}` must depend on t only (found `{}`)",
                basis, v
            )));
        }
        Ok(SeparableTerm { curve, basis })
    }
}

/// Kernel tensor indexed (ω node, t node, s node) on a fixed pair of grids.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledKernel {
    ogrid: Arc<OmegaGrid>,
    squad: Arc<SQuadrature>,
    values: Vec<f64>,
}

impl SampledKernel {
    pub fn new(ogrid: Arc<OmegaGrid>, squad: Arc<SQuadrature>, values: Vec<f64>) -> Result<Self> {
        let n = squad.len();
        if values.len() != ogrid.len() * n * n {
            return Err(Error::GridMismatch(format!(
                "sampled kernel has {} values, expected {}",
                values.len(),
                ogrid.len() * n * n
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "kernel sample {} is {}",
                i, values[i]
            )));
        }
        Ok(SampledKernel {
            ogrid,
            squad,
            values,
        })
    }

    /// Samples an expression in (ω, t, s).
    pub fn from_expr(
        e: &Expression,
        ogrid: Arc<OmegaGrid>,
        squad: Arc<SQuadrature>,
    ) -> Result<Self> {
        if let Some(v) = e.first_var_outside(&[Var::Omega, Var::T, Var::S]) {
            return Err(Error::Config(format!(
                "kernel expression `{}` uses variable `{}`",
                e, v
            )));
        }
        let mut values = Vec::with_capacity(ogrid.len() * squad.len() * squad.len());
        for &w in ogrid.nodes() {
            for &t in squad.nodes() {
                for &s in squad.nodes() {
                    values.push(e.evaluate(&Bindings::new().omega(w).t(t).s(s))?);
                }
            }
        }
        SampledKernel::new(ogrid, squad, values)
    }

    pub fn ogrid(&self) -> &Arc<OmegaGrid> {
        &self.ogrid
    }

    pub fn squad(&self) -> &Arc<SQuadrature> {
        &self.squad
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.squad.len();
        self.values[(i * n + j) * n + k]
    }

    fn max_asymmetry(&self) -> f64 {
        let n = self.squad.len();
        let mut worst = 0.0f64;
        for i in 0..self.ogrid.len() {
            for j in 0..n {
                for k in (j + 1)..n {
                    worst = worst.max((self.get(i, j, k) - self.get(i, k, j)).abs());
                }
            }
        }
        worst
    }

    /// Replaces each entry by the average with its transpose, or rejects the
    /// kernel when the asymmetry exceeds [`SYMMETRIZE_TOL`].
    pub fn symmetrized(mut self) -> Result<Self> {
        let asym = self.max_asymmetry();
        if asym > SYMMETRIZE_TOL {
            return Err(Error::AsymmetricKernel(asym));
        }
        let n = self.squad.len();
        for i in 0..self.ogrid.len() {
            let base = i * n * n;
            for j in 0..n {
                for k in (j + 1)..n {
                    let a = base + j * n + k;
                    let b = base + k * n + j;
                    let avg = 0.5 * (self.values[a] + self.values[b]);
                    self.values[a] = avg;
                    self.values[b] = avg;
                }
            }
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Separable(Vec<SeparableTerm>),
    Sampled(SampledKernel),
}

/// Max over grid triples of |k(ω, t, s) − k(ω, s, t)|. Separable kernels are
/// symmetric by form and return exactly 0.
pub fn hermitian_check(spec: &KernelSpec) -> f64 {
    match spec {
        KernelSpec::Separable(_) => 0.0,
        KernelSpec::Sampled(s) => s.max_asymmetry(),
    }
}

#[derive(Debug, Clone)]
enum Form {
    /// curves[n][i] = curve_n(ω_i), bases[n][j] = basis_n(t_j)
    Separable {
        curves: Vec<Vec<f64>>,
        bases: Vec<Vec<f64>>,
    },
    Sampled(Vec<f64>),
}

/// A kernel evaluated on a fixed (Ω grid, S quadrature) pair.
#[derive(Debug, Clone)]
pub struct Kernel {
    ogrid: Arc<OmegaGrid>,
    squad: Arc<SQuadrature>,
    form: Form,
}

impl Kernel {
    /// Binds a declaration to grids. Sampled kernels must already live on
    /// these grids and are symmetrized (or rejected) here.
    pub fn new(spec: &KernelSpec, ogrid: Arc<OmegaGrid>, squad: Arc<SQuadrature>) -> Result<Self> {
        let form = match spec {
            KernelSpec::Separable(terms) => {
                let mut curves = Vec::with_capacity(terms.len());
                let mut bases = Vec::with_capacity(terms.len());
                for term in terms {
                    let c = ogrid
                        .nodes()
                        .iter()
                        .map(|&w| term.curve.evaluate(&Bindings::new().omega(w)))
                        .collect::<Result<Vec<_>, _>>()?;
                    let b = squad
                        .nodes()
                        .iter()
                        .map(|&t| term.basis.evaluate(&Bindings::new().t(t)))
                        .collect::<Result<Vec<_>, _>>()?;
                    if c.iter().chain(&b).any(|v| !v.is_finite()) {
                        return Err(Error::NonFinite(format!(
                            "kernel term `{}` * `{}` produced a non-finite sample",
                            term.curve, term.basis
                        )));
                    }
                    curves.push(c);
                    bases.push(b);
                }
                Form::Separable { curves, bases }
            }
            KernelSpec::Sampled(s) => {
                if *s.ogrid != *ogrid || *s.squad != *squad {
                    return Err(Error::GridMismatch(
                        "sampled kernel was built on different grids".into(),
                    ));
                }
                Form::Sampled(s.clone().symmetrized()?.values)
            }
        };
        Ok(Kernel { ogrid, squad, form })
    }

    /// Kernel from a raw tensor on the given grids.
    pub fn from_sampled(kernel: SampledKernel) -> Result<Self> {
        let ogrid = kernel.ogrid.clone();
        let squad = kernel.squad.clone();
        Kernel::new(&KernelSpec::Sampled(kernel), ogrid, squad)
    }

    pub fn ogrid(&self) -> &Arc<OmegaGrid> {
        &self.ogrid
    }

    pub fn squad(&self) -> &Arc<SQuadrature> {
        &self.squad
    }

    pub fn kernel_value(&self, i: usize, j: usize, k: usize) -> Result<f64> {
        let n = self.squad.len();
        if i >= self.ogrid.len() || j >= n || k >= n {
            return Err(Error::IndexOutOfRange(format!(
                "kernel index ({}, {}, {}) on a {}x{}x{} grid",
                i,
                j,
                k,
                self.ogrid.len(),
                n,
                n
            )));
        }
        Ok(self.value_unchecked(i, j, k))
    }

    fn value_unchecked(&self, i: usize, j: usize, k: usize) -> f64 {
        match &self.form {
            Form::Separable { curves, bases } => {
                let (lo, hi) = if j <= k { (j, k) } else { (k, j) };
                curves
                    .iter()
                    .zip(bases)
                    .map(|(c, b)| c[i] * b[lo] * b[hi])
                    .sum()
            }
            Form::Sampled(values) => {
                let n = self.squad.len();
                values[(i * n + j) * n + k]
            }
        }
    }

    /// Kernel matrix k(ω_i, t_j, t_k) of one fiber, row-major.
    pub fn fiber_slice(&self, i: usize) -> Vec<f64> {
        let n = self.squad.len();
        match &self.form {
            Form::Sampled(values) => values[i * n * n..(i + 1) * n * n].to_vec(),
            Form::Separable { curves, bases } => {
                let mut out = vec![0.0; n * n];
                for (c, b) in curves.iter().zip(bases) {
                    let ci = c[i];
                    if ci == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        let cj = ci * b[j];
                        for k in j..n {
                            out[j * n + k] += cj * b[k];
                        }
                    }
                }
                for j in 0..n {
                    for k in 0..j {
                        out[j * n + k] = out[k * n + j];
                    }
                }
                out
            }
        }
    }

    /// Max entrywise asymmetry of the evaluated tensor.
    pub fn hermitian_check(&self) -> f64 {
        match &self.form {
            Form::Separable { .. } => 0.0,
            Form::Sampled(values) => {
                let n = self.squad.len();
                let mut worst = 0.0f64;
                for i in 0..self.ogrid.len() {
                    let base = i * n * n;
                    for j in 0..n {
                        for k in (j + 1)..n {
                            worst = worst
                                .max((values[base + j * n + k] - values[base + k * n + j]).abs());
                        }
                    }
                }
                worst
            }
        }
    }

    /// Full tensor, for export.
    pub fn to_sampled(&self) -> SampledKernel {
        let n = self.squad.len();
        let mut values = Vec::with_capacity(self.ogrid.len() * n * n);
        for i in 0..self.ogrid.len() {
            values.extend(self.fiber_slice(i));
        }
        SampledKernel {
            ogrid: self.ogrid.clone(),
            squad: self.squad.clone(),
            values,
        }
    }

    /// Kernel multiplied by a constant.
    pub fn scaled(&self, c: f64) -> Kernel {
        let form = match &self.form {
            Form::Separable { curves, bases } => Form::Separable {
                curves: curves
                    .iter()
                    .map(|v| v.iter().map(|x| c * x).collect())
                    .collect(),
                bases: bases.clone(),
            },
            Form::Sampled(values) => Form::Sampled(values.iter().map(|x| c * x).collect()),
        };
        Kernel {
            ogrid: self.ogrid.clone(),
            squad: self.squad.clone(),
            form,
        }
    }
}

/// Outcome of [`psd_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdReport {
    pub ok: bool,
    /// Minimum over ω of the smallest fiber eigenvalue.
    pub worst: f64,
}

/// Positive semidefiniteness read off the fiber eigenvalues.
pub fn psd_check(d: &FiberDecomposition, tol: f64) -> PsdReport {
    let worst = d
        .fibers()
        .iter()
        .map(|f| f.min_eigenvalue())
        .fold(f64::INFINITY, f64::min);
    let worst = if worst.is_finite() { worst } else { 0.0 };
    PsdReport {
        ok: worst >= -tol,
        worst,
    }
}

/// Truncated Mercer sum Σ_{n < rank} λ_n(ω) x_n(ω, t) x_n(ω, s).
///
/// Fibers retaining fewer than `rank` eigenpairs contribute all they have.
pub fn mercer_reconstruct(d: &FiberDecomposition, rank: usize) -> Result<SampledKernel> {
    let available = d.max_rank();
    if rank > available {
        return Err(Error::RankTooLarge {
            requested: rank,
            available,
        });
    }
    let n = d.squad().len();
    let mut values = vec![0.0; d.ogrid().len() * n * n];
    for (fiber, block) in d.fibers().iter().zip(values.chunks_mut(n * n)) {
        for (lambda, x) in fiber
            .eigenvalues()
            .iter()
            .zip(fiber.eigenfunctions())
            .take(rank)
        {
            for j in 0..n {
                let lx = lambda * x[j];
                for (o, xk) in block[j * n..(j + 1) * n].iter_mut().zip(x) {
                    *o += lx * xk;
                }
            }
        }
    }
    SampledKernel::new(d.ogrid().clone(), d.squad().clone(), values)
}

/// Sup over grid triples of |a − b|.
pub fn sup_difference(a: &Kernel, b: &Kernel) -> Result<f64> {
    if *a.ogrid != *b.ogrid || *a.squad != *b.squad {
        return Err(Error::GridMismatch(
            "kernels live on different grids".into(),
        ));
    }
    let mut worst = 0.0f64;
    for i in 0..a.ogrid.len() {
        for (x, y) in a.fiber_slice(i).iter().zip(b.fiber_slice(i)) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}
