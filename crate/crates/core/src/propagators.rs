//! Spectral solution operators for `i d_t u - Delta_H u = f` and
//! `d_t^2 u - Delta_H u = 0` with radial data, and the transport solutions
//! that show the Schrödinger flow does not disperse.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{FieldError, RadialField, SpaceTimeField};
use crate::grid::{Grid, TimeGrid};
use crate::htransform::{forward, inverse, plancherel_constant, SpectralField, TransformError};
use crate::quad::loglog_slope;
use crate::specfun::wigner_radial_all;
use crate::window::Bump;

#[derive(Debug, Error, PartialEq)]
pub enum PropagatorError {
    /// The wave branches need `1/sqrt(mu)`; `u1` has mass where that is unsafe.
    #[error("refused: {reason}; bins {bins:?}")]
    Refused { reason: String, bins: Vec<(usize, f64)> },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// `theta -> e^{i mu t} theta`.
pub fn schrodinger_phase(theta: &SpectralField, t: f64) -> SpectralField {
    let mut out = theta.clone();
    let d = theta.grid.d as f64;
    out.multiply(|ell, l| Complex64::from_polar(1.0, 4.0 * l.abs() * (2.0 * ell as f64 + d) * t));
    out
}

/// Free Schrödinger evolution of `theta0` to every time in `times`.
pub fn schrodinger_spectral(theta0: &SpectralField, times: &TimeGrid) -> Vec<SpectralField> {
    times.nodes.par_iter().map(|&t| schrodinger_phase(theta0, t)).collect()
}

pub fn schrodinger_evolve(u0: &RadialField, times: &TimeGrid, l_max: usize) -> SpaceTimeField {
    let theta0 = forward(u0, l_max);
    let slices = schrodinger_spectral(&theta0, times).iter().map(inverse).collect();
    SpaceTimeField::from_slices(times.clone(), slices).expect("slices share the grid")
}

/// The two wave branches `gamma_+`, `gamma_-` of the data.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveBranches {
    pub plus: SpectralField,
    pub minus: SpectralField,
}

/// Mass threshold on the bins next to `lambda = 0`, and on tiny eigenvalues,
/// above which `gamma_+-` is refused.
pub const ORIGIN_TOLERANCE: f64 = 1e-12;

/// `gamma_+- = (theta0 +- theta1 / (i sqrt(mu))) / 2`.
pub fn wave_branches(theta0: &SpectralField, theta1: &SpectralField) -> Result<WaveBranches, PropagatorError> {
    if theta0.grid != theta1.grid || theta0.l_max != theta1.l_max {
        return Err(FieldError::GridMismatch.into());
    }
    let g = &theta1.grid;
    let ns = g.n_s();
    let total = theta1.weighted_mass(|_, _| 1.0);
    if total > 0.0 {
        let z = g.s.zero_index();
        let mut bins = Vec::new();
        for m in [z - 1, z + 1] {
            let l = g.s.lambda(m);
            let near = theta1.weighted_mass(|_, x| if x == l { 1.0 } else { 0.0 });
            if near > ORIGIN_TOLERANCE * total {
                bins.push((m, l));
            }
        }
        if !bins.is_empty() {
            return Err(PropagatorError::Refused {
                reason: "u1 carries spectral mass next to lambda = 0".into(),
                bins,
            });
        }
        let small: Vec<(usize, f64)> = (0..=theta1.l_max)
            .flat_map(|ell| (0..ns).map(move |m| (ell, m)))
            .filter(|&(ell, m)| {
                let l = g.s.lambda(m);
                l != 0.0 && theta1.mu(ell, m) < ORIGIN_TOLERANCE && theta1.at(ell, m).norm() > 0.0
            })
            .map(|(_, m)| (m, g.s.lambda(m)))
            .collect();
        if !small.is_empty() {
            return Err(PropagatorError::Refused {
                reason: "eigenvalue below 1e-12 with u1 mass".into(),
                bins: small,
            });
        }
    }
    let mut plus = theta0.clone();
    let mut minus = theta0.clone();
    for ell in 0..=theta0.l_max {
        for m in 0..ns {
            let k = ell * ns + m;
            if g.s.lambda(m) == 0.0 {
                continue;
            }
            let root = theta0.mu(ell, m).sqrt();
            let v = theta1.values[k] / Complex64::new(0.0, root);
            plus.values[k] = 0.5 * (theta0.values[k] + v);
            minus.values[k] = 0.5 * (theta0.values[k] - v);
        }
    }
    Ok(WaveBranches { plus, minus })
}

/// Spectral wave solution and its time derivative at `t`.
pub fn wave_at(b: &WaveBranches, t: f64) -> (SpectralField, SpectralField) {
    let mut u = b.plus.clone();
    let mut du = b.plus.clone();
    let ns = u.grid.n_s();
    for ell in 0..=u.l_max {
        for m in 0..ns {
            let k = ell * ns + m;
            if u.grid.s.lambda(m) == 0.0 {
                continue;
            }
            let root = u.mu(ell, m).sqrt();
            let ep = Complex64::from_polar(1.0, root * t);
            let (a, c) = (b.plus.values[k] * ep, b.minus.values[k] * ep.conj());
            u.values[k] = a + c;
            du.values[k] = Complex64::new(0.0, root) * (a - c);
        }
    }
    (u, du)
}

pub fn wave_evolve(
    u0: &RadialField,
    u1: &RadialField,
    times: &TimeGrid,
    l_max: usize,
) -> Result<SpaceTimeField, PropagatorError> {
    let b = wave_branches(&forward(u0, l_max), &forward(u1, l_max))?;
    let slices = times.nodes.par_iter().map(|&t| inverse(&wave_at(&b, t).0)).collect();
    Ok(SpaceTimeField::from_slices(times.clone(), slices)?)
}

/// `sum mult (mu |u|^2 + |d_t u|^2) |lambda|^d dlambda`.
pub fn wave_energy(u: &SpectralField, du: &SpectralField) -> f64 {
    let potential = u.weighted_mass(|ell, l| crate::specfun::eigenvalue(ell as u64, l, u.grid.d));
    potential + du.weighted_mass(|_, _| 1.0)
}

/// `u(t) = U(t - t_0) u(t_0) - i int_{t_0}^t U(t - t') f(t') dt'` on the
/// time grid of `source`, the integral by the composite trapezoid rule.
pub fn duhamel(u0: &RadialField, source: &SpaceTimeField, l_max: usize) -> Result<SpaceTimeField, PropagatorError> {
    if u0.grid != source.grid {
        return Err(FieldError::GridMismatch.into());
    }
    let times = &source.times;
    let theta0 = forward(u0, l_max);
    let f_hat: Vec<SpectralField> = (0..times.len())
        .into_par_iter()
        .map(|n| forward(&source.slice(n), l_max))
        .collect();
    let t0 = times.nodes[0];
    let mut acc = SpectralField::zeros(u0.grid.clone(), l_max);
    let mut out = Vec::with_capacity(times.len());
    for n in 0..times.len() {
        if n > 0 {
            let dt = times.nodes[n] - times.nodes[n - 1];
            // J_n = e^{i mu dt} (J_{n-1} + dt/2 f_{n-1}) + dt/2 f_n
            let mut carried = acc.clone();
            for (a, f) in carried.values.iter_mut().zip(&f_hat[n - 1].values) {
                *a += f * (0.5 * dt);
            }
            acc = schrodinger_phase(&carried, dt);
            for (a, f) in acc.values.iter_mut().zip(&f_hat[n].values) {
                *a += f * (0.5 * dt);
            }
        }
        let mut u = schrodinger_phase(&theta0, times.nodes[n] - t0);
        for (a, j) in u.values.iter_mut().zip(&acc.values) {
            *a -= Complex64::new(0.0, 1.0) * j;
        }
        out.push(u);
    }
    let slices = out.par_iter().map(inverse).collect();
    Ok(SpaceTimeField::from_slices(times.clone(), slices)?)
}

/// `u_0^{(ell)} = int Theta_lambda^{(ell)} g(lambda) |lambda|^d dlambda` with
/// `Theta_lambda^{(ell)}(Y, s) = e^{i s lambda} W(ell, lambda, Y)` and `g`
/// a bump on positive frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportDatum {
    pub ell: usize,
    pub profile: Bump,
}

impl TransportDatum {
    pub fn new(ell: usize) -> Self {
        Self {
            ell,
            profile: Bump::default(),
        }
    }

    /// Propagation speed of the datum in `s`: `4(2 ell + d)`.
    pub fn velocity(&self, d: usize) -> f64 {
        4.0 * (2.0 * self.ell as f64 + d as f64)
    }

    /// Spectrum of the datum on `grid`: only line `ell` is populated.
    pub fn spectrum(&self, grid: &Grid, l_max: usize) -> Result<SpectralField, PropagatorError> {
        if self.ell > l_max {
            return Err(PropagatorError::InvalidArgument(format!(
                "ell {} exceeds L_max {l_max}",
                self.ell
            )));
        }
        if self.profile.lo <= 0.0 {
            return Err(PropagatorError::InvalidArgument(
                "profile must vanish near lambda = 0".into(),
            ));
        }
        let c = plancherel_constant(grid.d);
        let g = self.profile;
        Ok(SpectralField::from_fn(grid.clone(), l_max, |ell, l| {
            Complex64::new(if ell == self.ell { c * g.eval(l) } else { 0.0 }, 0.0)
        }))
    }

    /// Share of the profile's `L^1` mass beyond the largest grid frequency.
    pub fn leakage(&self, grid: &Grid) -> f64 {
        let top = grid.s.lambda(grid.n_s() - 1);
        if self.profile.hi <= top {
            return 0.0;
        }
        let n = 2000;
        let h = (self.profile.hi - self.profile.lo) / n as f64;
        let (mut all, mut out) = (0.0, 0.0);
        for k in 0..n {
            let l = self.profile.lo + (k as f64 + 0.5) * h;
            let v = self.profile.eval(l);
            all += v;
            if l > top {
                out += v;
            }
        }
        out / all
    }
}

/// `int Theta^{(ell)}_lambda(Y, s + 4t(2 ell + d)) g(lambda) lambda^d dlambda`
/// as a direct Riemann sum over the dual grid.
pub fn transport_reference(datum: &TransportDatum, grid: &Grid, t: f64) -> RadialField {
    let leak = datum.leakage(grid);
    if leak > 1e-12 {
        log::warn!("transport profile leaks {leak:.3e} of its mass beyond the lambda grid");
    }
    let d = grid.d;
    let shift = datum.velocity(d) * t;
    let dl = grid.s.lambda_step();
    let lines: Vec<(f64, f64)> = grid
        .s
        .lambdas()
        .into_iter()
        .filter(|&l| l > 0.0)
        .map(|l| (l, datum.profile.eval(l) * l.powi(d as i32) * dl))
        .filter(|&(_, w)| w != 0.0)
        .collect();
    let ell = datum.ell;
    let s = grid.s.nodes();
    let ns = grid.n_s();
    let mut values = vec![Complex64::new(0.0, 0.0); grid.n_rho() * ns];
    values.par_chunks_mut(ns).enumerate().for_each(|(i, row)| {
        let rho = grid.rho.nodes[i];
        let mut w = vec![0.0; ell + 1];
        for &(l, gw) in &lines {
            wigner_radial_all(l, d, rho, &mut w);
            let a = gw * w[ell];
            for (v, sj) in row.iter_mut().zip(&s) {
                *v += Complex64::from_polar(a, (sj + shift) * l);
            }
        }
    });
    RadialField {
        grid: grid.clone(),
        values,
    }
}

/// Fitted power law of `sup |u(t)|` over a time ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub times: Vec<f64>,
    pub sup_norms: Vec<f64>,
    pub fitted_exponent: f64,
}

fn fit_decay(times: &[f64], sups: Vec<f64>) -> Result<DecayReport, PropagatorError> {
    let (t, s): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(&sups)
        .filter(|(t, _)| **t != 0.0)
        .map(|(t, s)| (t.abs(), *s))
        .unzip();
    if t.len() < 2 {
        return Err(PropagatorError::InvalidArgument(
            "decay fit needs two nonzero times".into(),
        ));
    }
    Ok(DecayReport {
        fitted_exponent: loglog_slope(&t, &s),
        times: times.to_vec(),
        sup_norms: sups,
    })
}

/// `sup |u(t)|` for the wave flow; `t = 0` is kept in the table but not fitted.
pub fn wave_decay_probe(
    u0: &RadialField,
    u1: &RadialField,
    times: &[f64],
    l_max: usize,
) -> Result<DecayReport, PropagatorError> {
    let b = wave_branches(&forward(u0, l_max), &forward(u1, l_max))?;
    let sups = times
        .par_iter()
        .map(|&t| inverse(&wave_at(&b, t).0).max_abs())
        .collect();
    fit_decay(times, sups)
}

/// The same probe for the Schrödinger flow.
pub fn schrodinger_decay_probe(u0: &RadialField, times: &[f64], l_max: usize) -> Result<DecayReport, PropagatorError> {
    let theta0 = forward(u0, l_max);
    let sups = times
        .par_iter()
        .map(|&t| inverse(&schrodinger_phase(&theta0, t)).max_abs())
        .collect();
    fit_decay(times, sups)
}
