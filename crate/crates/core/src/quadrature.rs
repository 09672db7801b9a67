//! Gauss–Legendre rules and product quadrature on unit spheres.

use serde::{Deserialize, Serialize};

use crate::hyperbolic::FRAME_POLE_GUARD;
use crate::{Error, Result};

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
///
/// Newton iteration on the three-term recurrence, started from the
/// Chebyshev-like asymptotic guesses.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(k > 0, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    let kf = k as f64;
    for i in 0..k.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (kf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=k {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let pk = if k == 1 { x } else { p1 };
            let pkm1 = if k == 1 { 1.0 } else { p0 };
            dp = kf * (x * pk - pkm1) / (x * x - 1.0);
            let dx = pk / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[k - 1 - i] = x;
        weights[i] = w;
        weights[k - 1 - i] = w;
    }
    if k % 2 == 1 {
        nodes[k / 2] = 0.0;
    }
    (nodes, weights)
}

/// Node counts of the product sphere rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadSpec {
    /// Gauss–Legendre nodes per polar angle.
    pub polar: usize,
    /// Trapezoid nodes in the azimuth.
    pub azimuth: usize,
}

impl QuadSpec {
    /// 32×64 on 𝕊², coarser per level in higher dimensions to keep the
    /// product size bounded.
    pub fn default_for(n: usize) -> Self {
        match n {
            0..=3 => QuadSpec { polar: 32, azimuth: 64 },
            4 => QuadSpec { polar: 16, azimuth: 32 },
            _ => QuadSpec { polar: 10, azimuth: 20 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.polar < 2 || self.azimuth < 4 {
            return Err(Error::usage(format!(
                "quadrature needs at least 2 polar and 4 azimuthal nodes, got {}×{}",
                self.polar, self.azimuth
            )));
        }
        Ok(())
    }

    /// The rule with half the nodes in every direction, used for error estimates.
    pub fn half(&self) -> Self {
        QuadSpec { polar: (self.polar / 2).max(1), azimuth: (self.azimuth / 2).max(2) }
    }
}

/// A quadrature rule on the unit sphere `𝕊ⁿ⁻¹ ⊂ ℝⁿ`.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Whether the node set was rotated away from the frame pole.
    pub jittered: bool,
}

impl SphereRule {
    /// Product rule: Gauss–Legendre in each polar angle (weighted by the
    /// appropriate power of its sine), uniform trapezoid in the azimuth.
    /// The last coordinate is the cosine of the outermost polar angle.
    pub fn new(n: usize, spec: QuadSpec) -> Result<Self> {
        if n < 2 {
            return Err(Error::usage("sphere rules need ambient dimension ≥ 2"));
        }
        let (gx, gw) = gauss_legendre(spec.polar.max(1));
        let mut nodes: Vec<Vec<f64>> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let m = spec.azimuth.max(2);
        let dphi = 2.0 * std::f64::consts::PI / m as f64;
        for j in 0..m {
            let phi = (j as f64 + 0.5) * dphi;
            nodes.push(vec![phi.cos(), phi.sin()]);
            weights.push(dphi);
        }
        for level in 2..n {
            // 𝕊^{level−1} → 𝕊^{level}
            let mut next_nodes = Vec::with_capacity(nodes.len() * gx.len());
            let mut next_weights = Vec::with_capacity(nodes.len() * gx.len());
            for (x, w) in gx.iter().zip(&gw) {
                let theta = 0.5 * std::f64::consts::PI * (x + 1.0);
                let (s, c) = theta.sin_cos();
                let jac = 0.5 * std::f64::consts::PI * w * s.powi(level as i32 - 1);
                for (sub, sw) in nodes.iter().zip(&weights) {
                    let mut v: Vec<f64> = sub.iter().map(|a| a * s).collect();
                    v.push(c);
                    next_nodes.push(v);
                    next_weights.push(sw * jac);
                }
            }
            nodes = next_nodes;
            weights = next_weights;
        }
        let mut rule = SphereRule { nodes, weights, jittered: false };
        if rule.nodes.iter().any(|u| 1.0 + u[n - 1] < FRAME_POLE_GUARD) {
            rule.rotate_away_from_pole();
        }
        Ok(rule)
    }

    fn rotate_away_from_pole(&mut self) {
        let angle: f64 = 1e-3;
        let (s, c) = angle.sin_cos();
        for u in &mut self.nodes {
            let n = u.len();
            let (a, b) = (u[0], u[n - 1]);
            u[0] = c * a - s * b;
            u[n - 1] = s * a + c * b;
        }
        self.jittered = true;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weighted sum of precomputed node values, in node order.
    pub fn sum(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}
