//! Gauss-Legendre rules on finite intervals.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::algebra::{Element, C64};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadRule {
    pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<Self> {
        let deg = NonZeroUsize::new(n).ok_or_else(|| Error::Domain("quadrature needs at least one node".into()))?;
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Domain(format!("invalid interval [{a}, {b}]")));
        }
        let rule = GaussLegendre::new(deg);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let (nodes, weights) = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (mid + half * x, half * w))
            .unzip();
        Ok(Self { nodes, weights })
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

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.pairs().map(|(t, w)| w * f(t)).sum()
    }

    pub fn integrate_complex(&self, f: impl Fn(f64) -> C64) -> C64 {
        self.pairs().map(|(t, w)| f(t) * w).sum()
    }

    /// `Σ_k w_k f(t_k)` for element-valued `f`; `zero` fixes the shape.
    pub fn integrate_element(&self, zero: Element, f: impl Fn(f64) -> Element) -> Element {
        self.pairs().fold(zero, |acc, (t, w)| acc + f(t).scale_real(w))
    }

    fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}
