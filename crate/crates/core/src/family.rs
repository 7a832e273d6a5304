//! Seeded random families of Gaussian packets used by the ratio scans.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fields::{RadialField, SpaceTimeField};
use crate::grid::{Grid, TimeGrid};
use crate::specfun::sphere_area;

/// `e^{i phase} e^{-a rho^2} e^{-((s - s0)/sigma)^2} e^{i kappa (s - s0)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    pub a: f64,
    pub sigma: f64,
    pub kappa: f64,
    pub s0: f64,
    pub phase: f64,
}

impl GaussianPacket {
    pub fn new(a: f64, sigma: f64, kappa: f64) -> Self {
        Self {
            a,
            sigma,
            kappa,
            s0: 0.0,
            phase: 0.0,
        }
    }

    pub fn eval(&self, rho: f64, s: f64) -> Complex64 {
        let x = s - self.s0;
        let m = (-self.a * rho * rho - (x / self.sigma).powi(2)).exp();
        Complex64::from_polar(m, self.kappa * x + self.phase)
    }

    pub fn field(&self, grid: &Grid) -> RadialField {
        let p = *self;
        RadialField::from_fn(grid.clone(), move |r, s| p.eval(r, s))
    }

    /// Exact transform `theta(ell, lambda)`.
    ///
    /// The radial factor is the Laplace transform of a Laguerre polynomial,
    /// `Gamma(ell + d)/ell! (p - 1)^ell p^{-ell-d}` with `p = (a + |lambda|)/(2|lambda|)`;
    /// its binomial prefactor cancels the multiplicity.
    pub fn spectrum(&self, ell: usize, lambda: f64, d: usize) -> Complex64 {
        let la = lambda.abs();
        let p = (self.a + la) / (2.0 * la);
        let gamma_d: f64 = (1..d).map(|k| k as f64).product();
        let radial = sphere_area(d) / (2f64.powi(d as i32 + 1) * la.powi(d as i32))
            * gamma_d
            * ((p - 1.0) / p).powi(ell as i32)
            * p.powi(-(d as i32));
        let dl = lambda - self.kappa;
        let vertical = self.sigma * PI.sqrt() * (-(self.sigma * dl).powi(2) / 4.0).exp();
        Complex64::from_polar(radial * vertical, self.phase - lambda * self.s0)
    }
}

/// A packet times the time envelope `e^{-((t - tc)/tau)^2} e^{i omega t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePacket {
    pub space: GaussianPacket,
    pub tc: f64,
    pub tau: f64,
    pub omega: f64,
}

impl SpaceTimePacket {
    pub fn envelope(&self, t: f64) -> Complex64 {
        Complex64::from_polar((-((t - self.tc) / self.tau).powi(2)).exp(), self.omega * t)
    }

    pub fn field(&self, grid: &Grid, times: &TimeGrid) -> SpaceTimeField {
        let base = self.space.field(grid);
        let slices = times.nodes.iter().map(|&t| base.scale(self.envelope(t))).collect();
        SpaceTimeField::from_slices(times.clone(), slices).expect("one slice per time node")
    }
}

/// Sampling ranges; widths are log-uniform, everything else uniform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketFamily {
    pub seed: u64,
    pub a: (f64, f64),
    pub sigma: (f64, f64),
    pub kappa: (f64, f64),
    pub s0: (f64, f64),
}

impl PacketFamily {
    pub fn samples(&self, n: usize) -> Vec<GaussianPacket> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> GaussianPacket {
        GaussianPacket {
            a: log_uniform(rng, self.a),
            sigma: log_uniform(rng, self.sigma),
            kappa: uniform(rng, self.kappa),
            s0: uniform(rng, self.s0),
            phase: rng.random_range(0.0..2.0 * PI),
        }
    }

    /// Space-time samples; the time envelopes draw from the same stream.
    pub fn spacetime_samples(
        &self,
        n: usize,
        tc: (f64, f64),
        tau: (f64, f64),
        omega: (f64, f64),
    ) -> Vec<SpaceTimePacket> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..n)
            .map(|_| {
                let space = self.draw(&mut rng);
                SpaceTimePacket {
                    space,
                    tc: uniform(&mut rng, tc),
                    tau: log_uniform(&mut rng, tau),
                    omega: uniform(&mut rng, omega),
                }
            })
            .collect()
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    uniform(rng, (lo.ln(), hi.ln())).exp()
}
