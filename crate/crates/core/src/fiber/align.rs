//! Tracking eigenvalue curves across ω by eigenfunction overlap.

use crate::grid::dot_weighted;

/// Eigenvalues closer than this are matched as one block.
pub const DEGENERACY_GAP: f64 = 1e-10;
/// Pairs whose (block) overlap falls below this start a new curve instead.
pub const MIN_OVERLAP: f64 = 0.5;

/// Per ω node, the curve id (1-based) of each retained eigenpair in
/// descending-eigenvalue order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveLabels {
    ids: Vec<Vec<usize>>,
    count: usize,
}

impl CurveLabels {
    /// Curve id = position in descending order (plus one) at every node.
    pub fn descending(ranks: impl IntoIterator<Item = usize>) -> Self {
        let ids: Vec<Vec<usize>> = ranks.into_iter().map(|r| (1..=r).collect()).collect();
        let count = ids.iter().map(Vec::len).max().unwrap_or(0);
        CurveLabels { ids, count }
    }

    pub fn ids(&self, node: usize) -> &[usize] {
        &self.ids[node]
    }

    pub fn per_node(&self) -> &[Vec<usize>] {
        &self.ids
    }

    /// Number of distinct curve ids; ids run over 1..=count.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Sorted index carrying `curve` at `node`, if that curve is present there.
    pub fn position(&self, node: usize, curve: usize) -> Option<usize> {
        self.ids[node].iter().position(|&c| c == curve)
    }
}

/// Eigen-data of one node as seen by the matcher.
pub(crate) struct NodeView<'a> {
    pub values: &'a [f64],
    pub functions: &'a [Vec<f64>],
}

/// Splits descending eigenvalues into runs with consecutive gaps < DEGENERACY_GAP.
fn blocks(values: &[f64]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || (values[i - 1] - values[i]).abs() >= DEGENERACY_GAP {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Greedy overlap matching between consecutive nodes.
///
/// Each previous eigenfunction is compared with each block of (nearly)
/// degenerate eigenfunctions at the next node; the block overlap is the norm
/// of the projection onto the block. Pairs are accepted in order of
/// descending overlap, ties broken by lower index, as long as the block has
/// free slots. Inside a block, matched ids are handed out in descending
/// eigenvalue order. Unmatched eigenpairs open new curves.
pub(crate) fn align(nodes: &[NodeView<'_>], weights: &[f64]) -> CurveLabels {
    let mut ids: Vec<Vec<usize>> = Vec::with_capacity(nodes.len());
    let mut count = 0usize;
    for (i, node) in nodes.iter().enumerate() {
        let r = node.values.len();
        if i == 0 {
            ids.push((1..=r).collect());
            count = r;
            continue;
        }
        let prev = &nodes[i - 1];
        let prev_ids = &ids[i - 1];
        let groups = blocks(node.values);

        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for (pi, pf) in prev.functions.iter().enumerate() {
            for (bi, g) in groups.iter().enumerate() {
                let overlap = g
                    .clone()
                    .map(|k| dot_weighted(weights, pf, &node.functions[k]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if overlap >= MIN_OVERLAP {
                    candidates.push((overlap, pi, bi));
                }
            }
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut prev_used = vec![false; prev.functions.len()];
        let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); groups.len()];
        for &(_, pi, bi) in &candidates {
            if prev_used[pi] || assigned[bi].len() == groups[bi].len() {
                continue;
            }
            prev_used[pi] = true;
            assigned[bi].push(pi);
        }

        let mut row = vec![0usize; r];
        for (g, mut members) in groups.iter().zip(assigned) {
            // previous sorted index is descending eigenvalue order there
            members.sort_unstable();
            let mut slots = g.clone();
            for pi in members {
                let k = slots.next().expect("block capacity respected");
                row[k] = prev_ids[pi];
            }
            for k in slots {
                count += 1;
                row[k] = count;
            }
        }
        ids.push(row);
    }
    CurveLabels { ids, count }
}
