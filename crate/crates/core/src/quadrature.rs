//! Quadrature rules for Gaussian averages and finite-interval integrals.

use gauss_quad::{GaussHermite, GaussLegendre};

use crate::error::{Error, Result};

/// Nodes and weights for expectations over a standard normal variable.
#[derive(Debug, Clone)]
pub struct NormalRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NormalRule {
    pub fn new(count: usize) -> Result<Self> {
        let gh = GaussHermite::new(count)
            .map_err(|_| Error::invalid(format!("Gauss-Hermite rule needs >= 2 nodes, got {count}")))?;
        let mut pairs: Vec<(f64, f64)> = gh
            .as_node_weight_pairs()
            .iter()
            .map(|&(t, w)| (std::f64::consts::SQRT_2 * t, w / std::f64::consts::PI.sqrt()))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }

    /// Pairs whose weight is above `floor`; the dropped mass is returned as well.
    pub fn significant(&self, floor: f64) -> (Vec<(f64, f64)>, f64) {
        let mut kept = Vec::new();
        let mut dropped = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            if w > floor {
                kept.push((x, w));
            } else {
                dropped += w;
            }
        }
        (kept, dropped)
    }
}

/// Gauss-Legendre nodes and weights mapped onto `[lo, hi]`.
pub fn legendre_on(count: usize, lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
    let gl = GaussLegendre::new(count)
        .map_err(|_| Error::invalid(format!("Gauss-Legendre rule needs >= 2 nodes, got {count}")))?;
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().iter().map(|&(t, w)| (mid + half * t, half * w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs)
}
