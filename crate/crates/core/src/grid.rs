//! Discretization of radial functions on `H^d`: Gauss–Legendre nodes in
//! `rho = |Y|` and a uniform periodic grid in the central variable `s`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::quad::gauss_legendre;
use crate::specfun::sphere_area;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialNodes {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub r_max: f64,
}

impl RadialNodes {
    pub fn gauss_legendre(n: usize, r_max: f64) -> Self {
        let (nodes, weights) = gauss_legendre(n, 0.0, r_max);
        Self { nodes, weights, r_max }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights multiplied by `a`.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            nodes: self.nodes.iter().map(|x| a * x).collect(),
            weights: self.weights.iter().map(|w| a * w).collect(),
            r_max: a * self.r_max,
        }
    }
}

/// Uniform grid `s_j = -S + j h`, `h = 2S/N`, periodic with period `2S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerticalGrid {
    pub half_width: f64,
    pub n: usize,
}

impl VerticalGrid {
    pub fn step(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.step()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Spacing of the dual grid `lambda_k = pi k / S`.
    pub fn lambda_step(&self) -> f64 {
        PI / self.half_width
    }

    /// Centered frequency index `m = 0..n` holds `k = m - n/2`.
    pub fn lambda(&self, m: usize) -> f64 {
        (m as f64 - (self.n / 2) as f64) * self.lambda_step()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.lambda(m)).collect()
    }

    /// Index of the `lambda = 0` line, which carries no spectral data.
    pub fn zero_index(&self) -> usize {
        self.n / 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub d: usize,
    pub rho: RadialNodes,
    pub s: VerticalGrid,
}

impl Grid {
    pub fn new(d: usize, n_rho: usize, r_max: f64, n_s: usize, s_half_width: f64) -> Self {
        assert!(d >= 1, "dimension must be >= 1");
        assert!(n_s >= 2 && n_s % 2 == 0, "N_s must be even");
        Self {
            d,
            rho: RadialNodes::gauss_legendre(n_rho, r_max),
            s: VerticalGrid {
                half_width: s_half_width,
                n: n_s,
            },
        }
    }

    pub fn n_rho(&self) -> usize {
        self.rho.len()
    }

    pub fn n_s(&self) -> usize {
        self.s.n
    }

    /// Homogeneous dimension `2d + 2`.
    pub fn homogeneous_dim(&self) -> f64 {
        2.0 * self.d as f64 + 2.0
    }

    /// Weights for `int_{R^{2d}} g(|Y|) dY` at the radial nodes.
    pub fn y_weights(&self) -> Vec<f64> {
        let area = sphere_area(self.d);
        let e = 2 * self.d as i32 - 1;
        self.rho
            .nodes
            .iter()
            .zip(&self.rho.weights)
            .map(|(r, w)| area * w * r.powi(e))
            .collect()
    }

    /// The grid on which `f o delta_a` has exactly the samples of `f`:
    /// radial nodes divided by `a`, vertical box divided by `a^2`.
    pub fn dilated(&self, a: f64) -> Self {
        Self {
            d: self.d,
            rho: self.rho.scaled(1.0 / a),
            s: VerticalGrid {
                half_width: self.s.half_width / (a * a),
                n: self.s.n,
            },
        }
    }
}

/// Time nodes with trapezoid weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub nodes: Vec<f64>,
}

impl TimeGrid {
    pub fn uniform(t0: f64, t1: f64, n: usize) -> Self {
        assert!(n >= 2);
        let h = (t1 - t0) / (n - 1) as f64;
        Self {
            nodes: (0..n).map(|i| t0 + i as f64 * h).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let t = &self.nodes;
        let n = t.len();
        if n == 1 {
            return vec![1.0];
        }
        let mut w = vec![0.0; n];
        for i in 0..n - 1 {
            let h = t[i + 1] - t[i];
            w[i] += 0.5 * h;
            w[i + 1] += 0.5 * h;
        }
        w
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            nodes: self.nodes.iter().map(|t| a * t).collect(),
        }
    }
}
