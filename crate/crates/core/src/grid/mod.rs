//! Discretization of Ω × S and the module structure on sampled sections.
//!
//! Ω = [0, 1] is sampled at midpoints with equal cell weights; S = [0, 1]
//! carries a selectable quadrature rule. A [`Section`] is a function of
//! (ω, t) sampled on both grids, and a [`ScalarField`] is a function of ω.
//! The fiber inner product ⟨x, y⟩(ω) = ∫_S x(ω, s) y(ω, s) ds is itself a
//! field, which is how statements about the operator are checked pointwise
//! in ω.

mod quadrature;

use std::sync::Arc;

pub use quadrature::{gauss_legendre, QuadRule, SQuadrature};

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expression, Var};

/// Midpoint grid on Ω = [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl OmegaGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidCount(
                "omega grid needs at least 1 node".into(),
            ));
        }
        let h = 1.0 / n as f64;
        Ok(OmegaGrid {
            nodes: (0..n).map(|i| (i as f64 + 0.5) * h).collect(),
            weights: vec![h; n],
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the node closest to `omega`.
    pub fn nearest(&self, omega: f64) -> usize {
        let n = self.len();
        ((omega * n as f64).floor().max(0.0) as usize).min(n - 1)
    }
}

pub fn build_omega_grid(n: usize) -> Result<Arc<OmegaGrid>> {
    OmegaGrid::new(n).map(Arc::new)
}

pub fn build_s_quadrature(rule: QuadRule, n: usize) -> Result<Arc<SQuadrature>> {
    SQuadrature::new(rule, n).map(Arc::new)
}

fn same<T: PartialEq>(a: &Arc<T>, b: &Arc<T>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(format!(
            "{} sample {} is {}",
            what, i, values[i]
        ))),
        None => Ok(()),
    }
}

/// Real function of ω sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<OmegaGrid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<OmegaGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "field has {} values for {} omega nodes",
                values.len(),
                grid.len()
            )));
        }
        check_finite(&values, "field")?;
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: Arc<OmegaGrid>, value: f64) -> Self {
        let n = grid.len();
        ScalarField {
            grid,
            values: vec![value; n],
        }
    }

    pub fn from_fn(grid: Arc<OmegaGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&w| f(w)).collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Arc<OmegaGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// ∫_Ω value dμ
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| v * w)
            .sum()
    }
}

/// Real function of (ω, t) sampled on Ω-grid × S-nodes, stored row-major by ω.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    ogrid: Arc<OmegaGrid>,
    squad: Arc<SQuadrature>,
    values: Vec<f64>,
}

impl Section {
    pub fn new(ogrid: Arc<OmegaGrid>, squad: Arc<SQuadrature>, values: Vec<f64>) -> Result<Self> {
        if values.len() != ogrid.len() * squad.len() {
            return Err(Error::GridMismatch(format!(
                "section has {} values for a {}x{} grid",
                values.len(),
                ogrid.len(),
                squad.len()
            )));
        }
        check_finite(&values, "section")?;
        Ok(Section {
            ogrid,
            squad,
            values,
        })
    }

    pub fn zeros(ogrid: Arc<OmegaGrid>, squad: Arc<SQuadrature>) -> Self {
        let n = ogrid.len() * squad.len();
        Section {
            ogrid,
            squad,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn(
        ogrid: Arc<OmegaGrid>,
        squad: Arc<SQuadrature>,
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(ogrid.len() * squad.len());
        for &w in ogrid.nodes() {
            for &t in squad.nodes() {
                values.push(f(w, t));
            }
        }
        Section {
            ogrid,
            squad,
            values,
        }
    }

    /// Builds a section row by row; `row(i, out)` fills the samples at ω_i.
    pub fn from_rows(
        ogrid: Arc<OmegaGrid>,
        squad: Arc<SQuadrature>,
        mut row: impl FnMut(usize, &mut [f64]),
    ) -> Self {
        let nt = squad.len();
        let mut values = vec![0.0; ogrid.len() * nt];
        for (i, chunk) in values.chunks_mut(nt).enumerate() {
            row(i, chunk);
        }
        Section {
            ogrid,
            squad,
            values,
        }
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

    pub fn row(&self, i: usize) -> &[f64] {
        let nt = self.squad.len();
        &self.values[i * nt..(i + 1) * nt]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.squad.len())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.squad.len() + j]
    }

    pub fn same_grids(&self, other: &Section) -> bool {
        same(&self.ogrid, &other.ogrid) && same(&self.squad, &other.squad)
    }

    pub(crate) fn check_grids(&self, other: &Section) -> Result<()> {
        if self.same_grids(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(
                "sections live on different grids".into(),
            ))
        }
    }

    fn zip_with(&self, other: &Section, f: impl Fn(f64, f64) -> f64) -> Result<Section> {
        self.check_grids(other)?;
        Ok(Section {
            ogrid: self.ogrid.clone(),
            squad: self.squad.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Section) -> Result<Section> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Section) -> Result<Section> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Section {
        Section {
            ogrid: self.ogrid.clone(),
            squad: self.squad.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Module action: (α x)(ω, t) = α(ω) x(ω, t).
    pub fn scale_by_field(&self, alpha: &ScalarField) -> Result<Section> {
        if !same(&self.ogrid, alpha.grid()) {
            return Err(Error::GridMismatch(
                "field and section omega grids differ".into(),
            ));
        }
        Ok(Section::from_rows(
            self.ogrid.clone(),
            self.squad.clone(),
            |i, out| {
                let a = alpha.get(i);
                for (o, x) in out.iter_mut().zip(self.row(i)) {
                    *o = a * x;
                }
            },
        ))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check_vars(e: &Expression, allowed: &[Var]) -> Result<()> {
    match e.first_var_outside(allowed) {
        Some(v) => Err(Error::Config(format!(
            "expression `{}` uses variable `{}`; allowed here: {}",
            e,
            v,
            allowed
                .iter()
                .map(|v| v.name())
                .collect::<Vec<_>>()
                .join(", ")
        ))),
        None => Ok(()),
    }
}

/// Samples an ω-only expression at every grid node.
pub fn sample_field(e: &Expression, grid: &Arc<OmegaGrid>) -> Result<ScalarField> {
    check_vars(e, &[Var::Omega])?;
    let values = grid
        .nodes()
        .iter()
        .map(|&w| e.evaluate(&Bindings::new().omega(w)))
        .collect::<Result<Vec<_>, _>>()?;
    ScalarField::new(grid.clone(), values)
}

/// Samples an expression in (ω, t) on the product grid.
pub fn sample_section(
    e: &Expression,
    ogrid: &Arc<OmegaGrid>,
    squad: &Arc<SQuadrature>,
) -> Result<Section> {
    check_vars(e, &[Var::Omega, Var::T])?;
    let mut values = Vec::with_capacity(ogrid.len() * squad.len());
    for &w in ogrid.nodes() {
        for &t in squad.nodes() {
            values.push(e.evaluate(&Bindings::new().omega(w).t(t))?);
        }
    }
    Section::new(ogrid.clone(), squad.clone(), values)
}

pub(crate) fn dot_weighted(w: &[f64], x: &[f64], y: &[f64]) -> f64 {
    w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum()
}

/// ⟨x, y⟩(ω_i) = Σ_j w_j x(ω_i, t_j) y(ω_i, t_j)
pub fn fiber_inner_product(x: &Section, y: &Section) -> Result<ScalarField> {
    x.check_grids(y)?;
    let w = x.squad.weights();
    let values = x
        .rows()
        .zip(y.rows())
        .map(|(a, b)| dot_weighted(w, a, b))
        .collect();
    Ok(ScalarField {
        grid: x.ogrid.clone(),
        values,
    })
}

/// ‖x‖(ω) = sqrt(⟨x, x⟩(ω))
pub fn fiber_norm_field(x: &Section) -> ScalarField {
    let w = x.squad.weights();
    ScalarField {
        grid: x.ogrid.clone(),
        values: x
            .rows()
            .map(|r| dot_weighted(w, r, r).max(0.0).sqrt())
            .collect(),
    }
}

/// ‖x‖_{2,2} = (∫_Ω ∫_S |x|²)^{1/2}
pub fn l22_norm(x: &Section) -> f64 {
    let w = x.squad.weights();
    x.rows()
        .zip(x.ogrid.weights())
        .map(|(r, mu)| mu * dot_weighted(w, r, r))
        .sum::<f64>()
        .max(0.0)
        .sqrt()
}

/// ‖x − y‖_{2,2}
pub fn l22_distance(x: &Section, y: &Section) -> Result<f64> {
    Ok(l22_norm(&x.sub(y)?))
}
