use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QuadRule {
    Trapezoid,
    #[default]
    GaussLegendre,
}

/// Quadrature rule on S = [0, 1] with positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SQuadrature {
    rule: QuadRule,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl SQuadrature {
    pub fn new(rule: QuadRule, n: usize) -> Result<Self> {
        let (nodes, weights) = match rule {
            QuadRule::Trapezoid => {
                if n < 2 {
                    return Err(Error::InvalidCount(format!(
                        "trapezoid rule needs at least 2 nodes, got {}",
                        n
                    )));
                }
                trapezoid(n)
            }
            QuadRule::GaussLegendre => {
                if n < 1 {
                    return Err(Error::InvalidCount(
                        "Gauss-Legendre rule needs at least 1 node".into(),
                    ));
                }
                let (x, w) = gauss_legendre(n);
                // affine map [-1, 1] -> [0, 1]
                let nodes = x.iter().map(|x| 0.5 * (x + 1.0)).collect();
                let weights = w.iter().map(|w| 0.5 * w).collect();
                (nodes, weights)
            }
        };
        Ok(SQuadrature {
            rule,
            nodes,
            weights,
        })
    }

    pub fn rule(&self) -> QuadRule {
        self.rule
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

    /// Σ_j w_j f(t_j)
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

fn trapezoid(n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / (n - 1) as f64;
    let nodes = (0..n).map(|j| j as f64 * h).collect();
    let weights = (0..n)
        .map(|j| if j == 0 || j == n - 1 { 0.5 * h } else { h })
        .collect();
    (nodes, weights)
}

/// Legendre P_n and its derivative at x, by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Nodes (ascending) and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess for the i-th largest root
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() <= 1e-16 {
                break;
            }
        }
        if n % 2 == 1 && i == half - 1 {
            z = 0.0;
        }
        let (_, dp) = legendre(n, z);
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    (x, w)
}
