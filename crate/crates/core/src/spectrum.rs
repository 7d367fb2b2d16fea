//! Fiber spectra, mixings along partitions of Ω, and membership in the
//! cyclic modular spectrum.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fiber::FiberDecomposition;
use crate::grid::{OmegaGrid, ScalarField};

pub const DEFAULT_MEMBER_TOL: f64 = 1e-8;

/// One set A_n of a partition; label 0 selects the zero curve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSet {
    pub label: usize,
    pub nodes: Vec<usize>,
}

/// Disjoint sets of ω nodes covering the whole grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    grid: Arc<OmegaGrid>,
    sets: Vec<PartitionSet>,
    owner: Vec<usize>,
}

/// A half-open range [start, end) of ω with its curve label. A range ending
/// at or beyond 1 is closed on the right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledRange {
    pub label: usize,
    pub start: f64,
    pub end: f64,
}

impl Partition {
    pub fn new(grid: Arc<OmegaGrid>, sets: Vec<PartitionSet>) -> Result<Self> {
        let n = grid.len();
        let mut owner = vec![usize::MAX; n];
        for (si, set) in sets.iter().enumerate() {
            for &i in &set.nodes {
                if i >= n {
                    return Err(Error::IndexOutOfRange(format!(
                        "partition node {} on a grid of {}",
                        i, n
                    )));
                }
                if owner[i] != usize::MAX {
                    return Err(Error::IncompletePartition(format!(
                        "node {} belongs to more than one set",
                        i
                    )));
                }
                owner[i] = si;
            }
        }
        if let Some(i) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::IncompletePartition(format!(
                "omega node {} (omega = {}) is not covered",
                i,
                grid.nodes()[i]
            )));
        }
        Ok(Partition { grid, sets, owner })
    }

    pub fn from_ranges(grid: Arc<OmegaGrid>, ranges: &[LabeledRange]) -> Result<Self> {
        let sets = ranges
            .iter()
            .map(|r| PartitionSet {
                label: r.label,
                nodes: grid
                    .nodes()
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w >= r.start && (w < r.end || r.end >= 1.0))
                    .map(|(i, _)| i)
                    .collect(),
            })
            .collect();
        Partition::new(grid, sets)
    }

    pub fn sets(&self) -> &[PartitionSet] {
        &self.sets
    }

    /// Label of the set containing node `i`.
    pub fn label_at(&self, i: usize) -> usize {
        self.sets[self.owner[i]].label
    }

    pub fn grid(&self) -> &Arc<OmegaGrid> {
        &self.grid
    }
}

/// Retained eigenvalues at node `i` followed by 0.
pub fn fiber_spectrum(d: &FiberDecomposition, i: usize) -> Result<Vec<f64>> {
    if i >= d.ogrid().len() {
        return Err(Error::IndexOutOfRange(format!(
            "omega node {} of {}",
            i,
            d.ogrid().len()
        )));
    }
    let mut out = d.fiber(i).eigenvalues().to_vec();
    out.push(0.0);
    Ok(out)
}

/// Mixing Σ_n χ_{A_n} λ̃_n with λ̃_0 ≡ 0. Curves are read from the aligned
/// labeling when `use_aligned` is set, otherwise by descending order. A curve
/// absent at a node (rank below its index) contributes the eigenvalue 0.
pub fn mix_field(d: &FiberDecomposition, p: &Partition, use_aligned: bool) -> Result<ScalarField> {
    if p.grid().len() != d.ogrid().len() {
        return Err(Error::GridMismatch(
            "partition grid differs from decomposition grid".into(),
        ));
    }
    let available = d.labels(use_aligned).count();
    if let Some(set) = p.sets().iter().find(|s| s.label > available) {
        return Err(Error::UnknownCurveLabel {
            label: set.label,
            available,
        });
    }
    let values = (0..d.ogrid().len())
        .map(|i| match p.label_at(i) {
            0 => 0.0,
            label => d.curve_value(label, i, use_aligned).unwrap_or(0.0),
        })
        .collect();
    ScalarField::new(d.ogrid().clone(), values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipRow {
    pub node: usize,
    pub omega: f64,
    pub lambda: f64,
    pub nearest: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub member: bool,
    pub violations: Vec<MembershipRow>,
    pub rows: Vec<MembershipRow>,
}

/// λ ∈ spm(T) iff at every node the distance from λ(ω) to sp(T_ω) is at
/// most `tol` (absolute).
pub fn spm_membership(
    d: &FiberDecomposition,
    lambda: &ScalarField,
    tol: f64,
) -> Result<Membership> {
    if lambda.grid().len() != d.ogrid().len() {
        return Err(Error::GridMismatch(
            "field grid differs from decomposition grid".into(),
        ));
    }
    let mut rows = Vec::with_capacity(lambda.values().len());
    for (i, &value) in lambda.values().iter().enumerate() {
        let spectrum = fiber_spectrum(d, i)?;
        let (nearest, distance) = spectrum.iter().map(|&s| (s, (value - s).abs())).fold(
            (0.0, f64::INFINITY),
            |best, cur| if cur.1 < best.1 { cur } else { best },
        );
        rows.push(MembershipRow {
            node: i,
            omega: d.ogrid().nodes()[i],
            lambda: value,
            nearest,
            distance,
        });
    }
    let violations: Vec<MembershipRow> =
        rows.iter().filter(|r| r.distance > tol).copied().collect();
    Ok(Membership {
        member: violations.is_empty(),
        violations,
        rows,
    })
}
