//! Fourier transform of radial functions on `H^d`, its inverse, and the
//! spectral operations built on them.
//!
//! A radial function only sees the diagonal `(n, n, lambda)` with `|n| = ell`,
//! so a spectrum is a table `theta(ell, lambda_m)`, `ell <= L`, on the dual
//! grid of the vertical variable. The `lambda = 0` line is not part of the
//! frequency set and is kept at zero.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{sfft, FieldError, RadialField, SpaceTimeField};
use crate::grid::{Grid, TimeGrid};
use crate::quad::{gauss_laguerre, pairwise_sum};
use crate::specfun::{
    eigenvalue, laguerre_weighted, multiplicity_f64, sphere_area, wigner_bruteforce, wigner_radial_all, KernelPoint,
    SpecFunError,
};
use crate::window::Localizer;

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error("truncation estimate {estimate:e} exceeds tolerance {tolerance:e} ({source_of})")]
    Truncation {
        estimate: f64,
        tolerance: f64,
        source_of: String,
    },
    #[error("refused: {0}")]
    Refused(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

/// `pi^{d+1} / 2^{d-1}`: spectral over physical `L^2` mass.
pub fn plancherel_constant(d: usize) -> f64 {
    PI.powi(d as i32 + 1) / 2f64.powi(d as i32 - 1)
}

/// `pi^{d+2} / 2^{d-2}`, the same constant on `R x H^d`.
pub fn plancherel_constant_d(d: usize) -> f64 {
    PI.powi(d as i32 + 2) / 2f64.powi(d as i32 - 2)
}

/// Where a forward transform may have lost mass.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TailDiagnostics {
    /// Share of `||f||^2` with `rho > 0.9 R_max`.
    pub rho_edge: f64,
    /// Share of `||f||^2` with `|s| > 0.9 S`.
    pub s_edge: f64,
    /// Share of spectral mass in the top tenth of the `ell` range.
    pub ell_tail: f64,
}

impl TailDiagnostics {
    pub fn worst(&self) -> (f64, &'static str) {
        let mut w = (self.rho_edge, "radial edge");
        if self.s_edge > w.0 {
            w = (self.s_edge, "vertical edge");
        }
        if self.ell_tail > w.0 {
            w = (self.ell_tail, "ell truncation");
        }
        w
    }
}

/// Spectrum of a radial field: `values[ell * n_s + m] = theta(ell, lambda_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: Grid,
    pub l_max: usize,
    pub values: Vec<Complex64>,
    pub diagnostics: TailDiagnostics,
}

impl SpectralField {
    pub fn zeros(grid: Grid, l_max: usize) -> Self {
        let n = (l_max + 1) * grid.n_s();
        Self {
            grid,
            l_max,
            values: vec![Complex64::new(0.0, 0.0); n],
            diagnostics: TailDiagnostics::default(),
        }
    }

    /// Spectrum given by a closure `(ell, lambda) -> theta`; the `lambda = 0` line stays zero.
    pub fn from_fn<F: Fn(usize, f64) -> Complex64>(grid: Grid, l_max: usize, f: F) -> Self {
        let mut out = Self::zeros(grid, l_max);
        let ns = out.grid.n_s();
        let z = out.grid.s.zero_index();
        for ell in 0..=l_max {
            for m in 0..ns {
                if m != z {
                    out.values[ell * ns + m] = f(ell, out.grid.s.lambda(m));
                }
            }
        }
        out
    }

    pub fn at(&self, ell: usize, m: usize) -> Complex64 {
        self.values[ell * self.grid.n_s() + m]
    }

    /// Eigenvalue `4|lambda_m|(2 ell + d)` at a table entry.
    pub fn mu(&self, ell: usize, m: usize) -> f64 {
        eigenvalue(ell as u64, self.grid.s.lambda(m), self.grid.d)
    }

    /// Apply `theta -> mult(ell, lambda) theta` in place.
    pub fn multiply<F: Fn(usize, f64) -> Complex64>(&mut self, f: F) {
        let ns = self.grid.n_s();
        for ell in 0..=self.l_max {
            for m in 0..ns {
                let l = self.grid.s.lambda(m);
                if l != 0.0 {
                    self.values[ell * ns + m] *= f(ell, l);
                }
            }
        }
    }

    /// Weights of the radial Plancherel measure `binom(ell+d-1, ell) |lambda|^d dlambda`.
    fn measure(&self, ell: usize, m: usize) -> f64 {
        let l = self.grid.s.lambda(m);
        multiplicity_f64(ell as u64, self.grid.d).value * l.abs().powi(self.grid.d as i32) * self.grid.s.lambda_step()
    }

    /// `L^p` norm on the radial frequency set; `p = inf` is the sup.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let ns = self.grid.n_s();
        if p.is_infinite() {
            return self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        let mut terms = Vec::with_capacity(self.values.len());
        for ell in 0..=self.l_max {
            for m in 0..ns {
                terms.push(self.measure(ell, m) * self.values[ell * ns + m].norm().powf(p));
            }
        }
        pairwise_sum(&terms).powf(1.0 / p)
    }

    /// `sum mult |lambda|^d w(ell, lambda) |theta|^2 dlambda`.
    pub fn weighted_mass<F: Fn(usize, f64) -> f64>(&self, w: F) -> f64 {
        let ns = self.grid.n_s();
        let mut terms = Vec::with_capacity(self.values.len());
        for ell in 0..=self.l_max {
            for m in 0..ns {
                let l = self.grid.s.lambda(m);
                if l != 0.0 {
                    terms.push(self.measure(ell, m) * w(ell, l) * self.values[ell * ns + m].norm_sqr());
                }
            }
        }
        pairwise_sum(&terms)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, TransformError> {
        if self.grid != other.grid || self.l_max != other.l_max {
            return Err(FieldError::GridMismatch.into());
        }
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a -= b;
        }
        Ok(out)
    }

    /// `sum_ell mult int theta_a conj(theta_b) |lambda|^d dlambda`.
    pub fn inner(&self, other: &Self) -> Result<Complex64, TransformError> {
        if self.grid != other.grid || self.l_max != other.l_max {
            return Err(FieldError::GridMismatch.into());
        }
        let ns = self.grid.n_s();
        let (mut re, mut im) = (
            Vec::with_capacity(self.values.len()),
            Vec::with_capacity(self.values.len()),
        );
        for ell in 0..=self.l_max {
            for m in 0..ns {
                let v = self.values[ell * ns + m] * other.values[ell * ns + m].conj() * self.measure(ell, m);
                re.push(v.re);
                im.push(v.im);
            }
        }
        Ok(Complex64::new(pairwise_sum(&re), pairwise_sum(&im)))
    }

    /// Spectral mass fraction in the two bins adjacent to `lambda = 0`.
    pub fn near_origin_fraction(&self) -> f64 {
        let z = self.grid.s.zero_index();
        let total = self.weighted_mass(|_, _| 1.0);
        if total == 0.0 {
            return 0.0;
        }
        let (lo, hi) = (self.grid.s.lambda(z - 1), self.grid.s.lambda(z + 1));
        self.weighted_mass(|_, l| if l == lo || l == hi { 1.0 } else { 0.0 }) / total
    }
}

pub(crate) fn diagnostics_physical(f: &RadialField) -> (f64, f64) {
    let g = &f.grid;
    let yw = g.y_weights();
    let s = g.s.nodes();
    let (rc, sc) = (0.9 * g.rho.r_max, 0.9 * g.s.half_width);
    let (mut re, mut se, mut tot) = (0.0, 0.0, 0.0);
    for (i, r) in g.rho.nodes.iter().enumerate() {
        for (j, sj) in s.iter().enumerate() {
            let m = yw[i] * f.at(i, j).norm_sqr();
            tot += m;
            if *r > rc {
                re += m;
            }
            if sj.abs() > sc {
                se += m;
            }
        }
    }
    if tot == 0.0 {
        (0.0, 0.0)
    } else {
        (re / tot, se / tot)
    }
}

fn ell_tail(theta: &SpectralField) -> f64 {
    let cut = theta.l_max - theta.l_max / 10;
    if theta.l_max < 10 {
        return 0.0;
    }
    let total = theta.weighted_mass(|_, _| 1.0);
    if total == 0.0 {
        return 0.0;
    }
    theta.weighted_mass(|ell, _| if ell > cut { 1.0 } else { 0.0 }) / total
}

/// Transposes per-lambda columns (`cols[m][ell]`) into the `[ell][m]` table.
fn assemble(grid: &Grid, l_max: usize, cols: Vec<Vec<Complex64>>) -> SpectralField {
    let ns = grid.n_s();
    let mut out = SpectralField::zeros(grid.clone(), l_max);
    for (m, col) in cols.into_iter().enumerate() {
        for (ell, v) in col.into_iter().enumerate() {
            out.values[ell * ns + m] = v;
        }
    }
    out
}

fn inv_multiplicities(l_max: usize, d: usize) -> Vec<f64> {
    (0..=l_max)
        .map(|ell| 1.0 / multiplicity_f64(ell as u64, d).value)
        .collect()
}

/// Forward transform on the stored grid: FFT in `s`, Gauss–Legendre in `rho`.
pub fn forward(f: &RadialField, l_max: usize) -> SpectralField {
    let g = &f.grid;
    let (nr, ns, d) = (g.n_rho(), g.n_s(), g.d);
    let spec = sfft::forward_rows(&f.values, ns, g.s.step());
    let yw = g.y_weights();
    let inv_mult = inv_multiplicities(l_max, d);
    let z = g.s.zero_index();
    let cols: Vec<Vec<Complex64>> = (0..ns)
        .into_par_iter()
        .map(|m| {
            let mut acc = vec![Complex64::new(0.0, 0.0); l_max + 1];
            if m == z {
                return acc;
            }
            let lambda = g.s.lambda(m);
            let mut w = vec![0.0; l_max + 1];
            for i in 0..nr {
                wigner_radial_all(lambda, d, g.rho.nodes[i], &mut w);
                let c = spec[i * ns + m] * yw[i];
                for (a, wl) in acc.iter_mut().zip(&w) {
                    *a += c * *wl;
                }
            }
            for (a, im) in acc.iter_mut().zip(&inv_mult) {
                *a *= *im;
            }
            acc
        })
        .collect();
    let mut out = assemble(g, l_max, cols);
    let (rho_edge, s_edge) = diagnostics_physical(f);
    out.diagnostics = TailDiagnostics {
        rho_edge,
        s_edge,
        ell_tail: ell_tail(&out),
    };
    out
}

/// `forward`, failing when a truncation diagnostic exceeds `tolerance`.
pub fn forward_checked(f: &RadialField, l_max: usize, tolerance: f64) -> Result<SpectralField, TransformError> {
    let out = forward(f, l_max);
    let (estimate, what) = out.diagnostics.worst();
    if estimate > tolerance {
        return Err(TransformError::Truncation {
            estimate,
            tolerance,
            source_of: what.into(),
        });
    }
    Ok(out)
}

/// Inverse transform onto the spectrum's grid.
pub fn inverse(theta: &SpectralField) -> RadialField {
    let g = &theta.grid;
    let (nr, ns, d) = (g.n_rho(), g.n_s(), g.d);
    let l_max = theta.l_max;
    let z = g.s.zero_index();
    // sfft::inverse_rows supplies 1/(2S) = dlambda/(2 pi); the radial
    // inversion contributes (2/pi)^d |lambda|^d.
    let c = (2.0 / PI).powi(d as i32);
    let cols: Vec<Vec<Complex64>> = (0..ns)
        .into_par_iter()
        .map(|m| {
            let mut col = vec![Complex64::new(0.0, 0.0); nr];
            if m == z {
                return col;
            }
            let lambda = g.s.lambda(m);
            let scale = c * lambda.abs().powi(d as i32);
            let mut w = vec![0.0; l_max + 1];
            for (i, v) in col.iter_mut().enumerate() {
                wigner_radial_all(lambda, d, g.rho.nodes[i], &mut w);
                let mut acc = Complex64::new(0.0, 0.0);
                for (ell, wl) in w.iter().enumerate() {
                    acc += theta.values[ell * ns + m] * *wl;
                }
                *v = acc * scale;
            }
            col
        })
        .collect();
    let mut rows = vec![Complex64::new(0.0, 0.0); nr * ns];
    for (m, col) in cols.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            rows[i * ns + m] = v;
        }
    }
    RadialField {
        grid: g.clone(),
        values: sfft::inverse_rows(&rows, ns, g.s.half_width),
    }
}

/// Forward transform evaluated at an arbitrary `lambda`, all `ell <= l_max`.
///
/// The vertical integral is a direct trapezoid sum, so `lambda` need not lie
/// on the dual grid.
pub fn forward_at(f: &RadialField, lambda: f64, l_max: usize) -> Result<Vec<Complex64>, TransformError> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(TransformError::InvalidArgument(format!(
            "lambda must be finite and nonzero, got {lambda}"
        )));
    }
    let g = &f.grid;
    let yw = g.y_weights();
    let h = g.s.step();
    let step = Complex64::from_polar(1.0, -h * lambda);
    let start = Complex64::from_polar(1.0, g.s.half_width * lambda);
    let mut acc = vec![Complex64::new(0.0, 0.0); l_max + 1];
    let mut w = vec![0.0; l_max + 1];
    for i in 0..g.n_rho() {
        let mut ph = start;
        let mut fs = Complex64::new(0.0, 0.0);
        for v in f.row(i) {
            fs += v * ph;
            ph *= step;
        }
        wigner_radial_all(lambda, g.d, g.rho.nodes[i], &mut w);
        let c = fs * (h * yw[i]);
        for (a, wl) in acc.iter_mut().zip(&w) {
            *a += c * *wl;
        }
    }
    for (ell, a) in acc.iter_mut().enumerate() {
        *a /= multiplicity_f64(ell as u64, g.d).value;
    }
    Ok(acc)
}

/// Gauss–Laguerre rule for closure-mode transforms. With `decay = a` the
/// radial integral is exact for `e^{-a rho^2}` times a polynomial of degree
/// below `2 nodes - ell` in `rho^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureQuadrature {
    pub nodes: usize,
    pub decay: f64,
}

impl Default for ClosureQuadrature {
    fn default() -> Self {
        Self { nodes: 48, decay: 1.0 }
    }
}

/// Forward transform of an analytic field, integrating in `rho` on
/// lambda-adapted Gauss–Laguerre nodes `v = (decay + |lambda|) rho^2`.
pub fn forward_closure<F>(f: F, grid: &Grid, l_max: usize, quad: ClosureQuadrature) -> SpectralField
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    let (ns, d) = (grid.n_s(), grid.d);
    let (v, wv) = gauss_laguerre(quad.nodes, (d - 1) as f64);
    let s = grid.s.nodes();
    let h = grid.s.step();
    let area = sphere_area(d);
    let inv_mult = inv_multiplicities(l_max, d);
    let z = grid.s.zero_index();
    let cols: Vec<Vec<Complex64>> = (0..ns)
        .into_par_iter()
        .map(|m| {
            let mut acc = vec![Complex64::new(0.0, 0.0); l_max + 1];
            if m == z {
                return acc;
            }
            let lambda = grid.s.lambda(m);
            let kappa = quad.decay + lambda.abs();
            let mut w = vec![0.0; l_max + 1];
            let step = Complex64::from_polar(1.0, -h * lambda);
            for (vq, wq) in v.iter().zip(&wv) {
                let rho = (vq / kappa).sqrt();
                let mut ph = Complex64::from_polar(1.0, -s[0] * lambda);
                let mut fs = Complex64::new(0.0, 0.0);
                for &sj in &s {
                    fs += f(rho, sj) * ph;
                    ph *= step;
                }
                // The quadrature weight carries e^{-v}; undo it inside the kernel.
                laguerre_weighted((d - 1) as f64, 2.0 * lambda.abs() * rho * rho, *vq, &mut w);
                let c = fs * (h * wq);
                for (a, wl) in acc.iter_mut().zip(&w) {
                    *a += c * *wl;
                }
            }
            let radial = area / (2.0 * kappa.powi(d as i32));
            for (a, im) in acc.iter_mut().zip(&inv_mult) {
                *a *= radial * im;
            }
            acc
        })
        .collect();
    assemble(grid, l_max, cols)
}

/// Spectral over physical `L^2` mass; should equal `plancherel_constant(d)`.
pub fn plancherel_ratio(f: &RadialField, theta: &SpectralField) -> f64 {
    theta.weighted_mass(|_, _| 1.0) / f.inner(f).map(|v| v.re).unwrap_or(f64::NAN)
}

/// `inverse(window(mu) * forward(f))`.
pub fn localize(f: &RadialField, window: Localizer, l_max: usize) -> RadialField {
    let mut theta = forward(f, l_max);
    let d = f.grid.d;
    theta.multiply(|ell, l| Complex64::new(window.weight(eigenvalue(ell as u64, l, d)), 0.0));
    inverse(&theta)
}

/// Homogeneous Sobolev norm `||(-Delta)^{sigma/2} f||_2` from a spectrum.
///
/// Negative orders are refused when the two bins next to `lambda = 0` carry
/// spectral mass, since the multiplier is unbounded there.
pub fn sobolev_norm_spectral(theta: &SpectralField, sigma: f64) -> Result<f64, TransformError> {
    if sigma < 0.0 {
        let frac = theta.near_origin_fraction();
        if frac > 1e-12 {
            return Err(TransformError::Refused(format!(
                "negative Sobolev order {sigma} with spectral mass fraction {frac:e} next to lambda = 0"
            )));
        }
    }
    let d = theta.grid.d;
    let c = 1.0 / plancherel_constant(d);
    Ok((c * theta.weighted_mass(|ell, l| eigenvalue(ell as u64, l, d).powf(sigma))).sqrt())
}

pub fn sobolev_norm(f: &RadialField, sigma: f64, l_max: usize) -> Result<f64, TransformError> {
    sobolev_norm_spectral(&forward(f, l_max), sigma)
}

/// Group convolution of two radial fields through the product of spectra.
pub fn group_convolve_radial(f: &RadialField, g: &RadialField, l_max: usize) -> Result<RadialField, TransformError> {
    if f.grid != g.grid {
        return Err(FieldError::GridMismatch.into());
    }
    Ok(inverse(&convolve_spectral(&forward(f, l_max), &forward(g, l_max))?))
}

/// Pointwise product of two spectra: the transform of a convolution of radial functions.
pub fn convolve_spectral(a: &SpectralField, b: &SpectralField) -> Result<SpectralField, TransformError> {
    if a.grid != b.grid || a.l_max != b.l_max {
        return Err(FieldError::GridMismatch.into());
    }
    let mut out = a.clone();
    for (x, y) in out.values.iter_mut().zip(&b.values) {
        *x *= y;
    }
    Ok(out)
}

/// Spectral inner product of `forward(f)` and `forward(g)`; equals
/// `plancherel_constant(d) (f|g)`.
pub fn plancherel_pair(f: &RadialField, g: &RadialField, l_max: usize) -> Result<Complex64, TransformError> {
    if f.grid != g.grid {
        return Err(FieldError::GridMismatch.into());
    }
    forward(f, l_max).inner(&forward(g, l_max))
}

/// One Hausdorff–Young measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HausdorffYoung {
    pub p: f64,
    pub spectral_norm: f64,
    pub physical_norm: f64,
    /// `plancherel_constant^{1/p'}`: 1 at `p = 1`, the `L^2` isometry constant at `p = 2`.
    pub constant: f64,
    pub ratio: f64,
}

/// `||F f||_{L^{p'}} / (C_p ||f||_{L^p})` for `1 <= p <= 2`.
pub fn hausdorff_young_check(f: &RadialField, p: f64, l_max: usize) -> Result<HausdorffYoung, TransformError> {
    if !(1.0..=2.0).contains(&p) {
        return Err(TransformError::InvalidArgument(format!(
            "Hausdorff-Young needs 1 <= p <= 2, got {p}"
        )));
    }
    let q = if p == 1.0 { f64::INFINITY } else { p / (p - 1.0) };
    let theta = forward(f, l_max);
    let spectral_norm = theta.lp_norm(q);
    let physical_norm = f.lp_norm(p)?;
    let constant = plancherel_constant(f.grid.d).powf(if q.is_infinite() { 0.0 } else { 1.0 / q });
    Ok(HausdorffYoung {
        p,
        spectral_norm,
        physical_norm,
        constant,
        ratio: spectral_norm / (constant * physical_norm),
    })
}

/// Scaling of `||f_L||_q / ||f_L||_p` along the dilation family `f_L = f o delta_L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinReport {
    pub scales: Vec<f64>,
    pub ratios: Vec<f64>,
    pub fitted_exponent: f64,
    pub expected_exponent: f64,
    /// Share of the base spectrum outside the ball it is claimed to live in.
    pub leakage: f64,
}

/// Measures the Bernstein exponent `Q (1/p - 1/q)` on the family
/// `f o delta_L`, each member represented exactly on the dilated grid.
pub fn bernstein_check(
    f: &RadialField,
    ball: Localizer,
    p: f64,
    q: f64,
    scales: &[f64],
    l_max: usize,
) -> Result<BernsteinReport, TransformError> {
    let theta = forward(f, l_max);
    let d = f.grid.d;
    let total = theta.weighted_mass(|_, _| 1.0);
    let outside = theta.weighted_mass(|ell, l| {
        if ball.weight(eigenvalue(ell as u64, l, d)) > 0.0 {
            0.0
        } else {
            1.0
        }
    });
    let mut ratios = Vec::with_capacity(scales.len());
    for &a in scales {
        let fa = f.dilated_exact(a);
        ratios.push(fa.lp_norm(q)? / fa.lp_norm(p)?);
    }
    let qdim = f.grid.homogeneous_dim();
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    Ok(BernsteinReport {
        scales: scales.to_vec(),
        fitted_exponent: crate::quad::loglog_slope(scales, &ratios),
        ratios,
        expected_exponent: qdim * (inv(p) - inv(q)),
        leakage: if total > 0.0 { outside / total } else { 0.0 },
    })
}

/// Spectrum on `R x H^d`: `values[k]` is the `H^d` spectrum at `alpha_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFieldD {
    pub alphas: Vec<f64>,
    pub alpha_step: f64,
    pub slices: Vec<SpectralField>,
}

impl SpectralFieldD {
    pub fn mass(&self) -> f64 {
        let terms: Vec<f64> = self
            .slices
            .iter()
            .map(|s| self.alpha_step * s.weighted_mass(|_, _| 1.0))
            .collect();
        pairwise_sum(&terms)
    }
}

/// Transform on `R x H^d`: the `H^d` transform of every time slice followed
/// by a DFT in `t`. Needs a uniform time grid.
pub fn transform_d(u: &SpaceTimeField, l_max: usize) -> Result<SpectralFieldD, TransformError> {
    let t = &u.times.nodes;
    let nt = t.len();
    if nt < 2 {
        return Err(TransformError::InvalidArgument(
            "time grid needs at least two nodes".into(),
        ));
    }
    let dt = t[1] - t[0];
    if t.windows(2)
        .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-12 * dt.abs().max(1.0))
    {
        return Err(TransformError::InvalidArgument("time grid must be uniform".into()));
    }
    let spectra: Vec<SpectralField> = (0..nt).map(|n| forward(&u.slice(n), l_max)).collect();
    let alpha_step = 2.0 * PI / (nt as f64 * dt);
    let half = (nt / 2) as i64;
    let alphas: Vec<f64> = (0..nt).map(|k| (k as i64 - half) as f64 * alpha_step).collect();
    let len = spectra[0].values.len();
    let fft = FftPlanner::new().plan_fft_forward(nt);
    let mut out: Vec<SpectralField> = vec![spectra[0].clone(); nt];
    let mut buf = vec![Complex64::new(0.0, 0.0); nt];
    for idx in 0..len {
        for (n, sp) in spectra.iter().enumerate() {
            buf[n] = sp.values[idx];
        }
        fft.process(&mut buf);
        for (k, o) in out.iter_mut().enumerate() {
            let kk = k as i64 - half;
            // e^{-i t_n alpha} = e^{-i t_0 alpha} e^{-2 pi i n k / N}
            let ph = Complex64::from_polar(dt, -t[0] * alphas[k]);
            o.values[idx] = buf[kk.rem_euclid(nt as i64) as usize] * ph;
        }
    }
    Ok(SpectralFieldD {
        alphas,
        alpha_step,
        slices: out,
    })
}

/// Rectangle-rule `L^2` mass of a space-time field, the physical side of the
/// discrete Plancherel identity on `R x H^d`.
pub fn spacetime_mass(u: &SpaceTimeField) -> f64 {
    let t = &u.times.nodes;
    let dt = t[1] - t[0];
    let terms: Vec<f64> = (0..t.len())
        .map(|n| dt * u.slice(n).inner(&u.slice(n)).map(|v| v.re).unwrap_or(f64::NAN))
        .collect();
    pairwise_sum(&terms)
}

/// Space-time field `u(t) = e^{i omega t} f` on a uniform time grid; a
/// convenience for probing `transform_d`.
pub fn modulated_in_time(f: &RadialField, omega: f64, times: TimeGrid) -> SpaceTimeField {
    let slices = times
        .nodes
        .iter()
        .map(|&t| f.scale(Complex64::from_polar(1.0, omega * t)))
        .collect();
    SpaceTimeField::from_slices(times, slices).expect("slices share one grid")
}

/// Both sides of the translation identity for the radial transform,
/// `sum_{|n| = ell} F(f o tau_w)(n, n, lambda) = F f(ell, lambda) e^{i s0 lambda} W(ell, lambda, Y0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranslateIdentity {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub relative_error: f64,
}

/// Evaluates the translation identity at `d = 1` for an analytic radial `f`.
///
/// The left side is computed from the definition: the translated function is
/// integrated against the Wigner kernel obtained by quadrature of Hermite
/// functions, on a tensor Gauss–Legendre grid in `Y`.
pub fn translate_identity_check<F>(
    f: F,
    grid: &Grid,
    y0: [f64; 2],
    s0: f64,
    ell: u32,
    lambda: f64,
) -> Result<TranslateIdentity, TransformError>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    if grid.d != 1 {
        return Err(TransformError::InvalidArgument(
            "translation identity check is implemented for d = 1".into(),
        ));
    }
    KernelPoint::new(ell as u64, lambda, 0.0, 1)?;
    let s = grid.s.nodes();
    let h = grid.s.step();
    let fs = |rho: f64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &sj in &s {
            acc += f(rho, sj) * Complex64::from_polar(h, -sj * lambda);
        }
        acc
    };
    let reach = 8.0 / lambda.abs().sqrt() + (2.0 * ell as f64 + 1.0).sqrt() / lambda.abs().sqrt();
    let (x, w) = crate::quad::gauss_legendre(96, -reach, reach);
    let rows: Vec<Complex64> = x
        .par_iter()
        .zip(&w)
        .map(|(&yp, &wy)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (&ep, &we) in x.iter().zip(&w) {
                let kernel = wigner_bruteforce(&[ell], &[ell], lambda, &[yp], &[ep], 1e-12)
                    .map(|e| e.value)
                    .unwrap_or(Complex64::new(f64::NAN, 0.0));
                // sigma(Y0, Y') = <eta0, y'> - <eta', y0>
                let sigma = y0[1] * yp - ep * y0[0];
                let r = ((y0[0] + yp).powi(2) + (y0[1] + ep).powi(2)).sqrt();
                acc += kernel * fs(r) * Complex64::from_polar(wy * we, lambda * (s0 + 2.0 * sigma));
            }
            acc
        })
        .collect();
    let lhs = rows.iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b);
    let sampled = RadialField::from_fn(grid.clone(), &f);
    let theta = forward_at(&sampled, lambda, ell as usize)?[ell as usize];
    let rho0 = (y0[0] * y0[0] + y0[1] * y0[1]).sqrt();
    let mut wk = vec![0.0; ell as usize + 1];
    wigner_radial_all(lambda, 1, rho0, &mut wk);
    let rhs = theta * Complex64::from_polar(wk[ell as usize], s0 * lambda);
    Ok(TranslateIdentity {
        lhs,
        rhs,
        relative_error: (lhs - rhs).norm() / rhs.norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{dilate, RhoInterp};
    use crate::window::Bump;
    use proptest::prelude::*;

    /// `e^{-a rho^2} e^{-(s/sigma)^2} e^{i kappa s}`.
    #[derive(Clone, Copy)]
    struct Packet {
        a: f64,
        sigma: f64,
        kappa: f64,
    }

    impl Packet {
        fn eval(&self, r: f64, s: f64) -> Complex64 {
            Complex64::from_polar((-self.a * r * r - (s / self.sigma).powi(2)).exp(), self.kappa * s)
        }

        /// Closed form: Laguerre–Laplace integral in `rho` times the Gaussian's
        /// Fourier transform in `s`. The `Gamma(ell + d)/ell!` of the Laplace
        /// integral cancels the multiplicity.
        fn spectrum(&self, ell: usize, lambda: f64, d: usize) -> Complex64 {
            let la = lambda.abs();
            let p = (self.a + la) / (2.0 * la);
            let mut gamma_d = 1.0;
            for k in 1..d {
                gamma_d *= k as f64;
            }
            let radial = sphere_area(d) / (2f64.powi(d as i32 + 1) * la.powi(d as i32))
                * gamma_d
                * (p - 1.0).powi(ell as i32)
                * p.powi(-(ell as i32) - d as i32);
            let dl = lambda - self.kappa;
            let vertical = self.sigma * PI.sqrt() * (-(self.sigma * dl).powi(2) / 4.0).exp();
            Complex64::new(radial * vertical, 0.0)
        }

        fn field(&self, grid: &Grid) -> RadialField {
            let p = *self;
            RadialField::from_fn(grid.clone(), move |r, s| p.eval(r, s))
        }
    }

    fn default_grid(d: usize) -> Grid {
        Grid::new(d, 256, 12.0, 512, 40.0)
    }

    fn suite() -> Vec<Packet> {
        vec![
            Packet {
                a: 1.0,
                sigma: 4.0,
                kappa: 2.0,
            },
            Packet {
                a: 0.5,
                sigma: 4.0,
                kappa: 3.0,
            },
            Packet {
                a: 2.0,
                sigma: 5.0,
                kappa: -2.5,
            },
        ]
    }

    #[test]
    fn plancherel_ratio_both_dimensions() {
        for d in [1, 2] {
            let g = default_grid(d);
            for p in suite() {
                let f = p.field(&g);
                let theta = forward(&f, 64);
                let r = plancherel_ratio(&f, &theta) / plancherel_constant(d);
                assert!((r - 1.0).abs() < 1e-6, "d={d}: {r}");
            }
        }
        assert!((plancherel_constant(1) - PI * PI).abs() < 1e-14);
        assert!((plancherel_constant(2) - PI.powi(3) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn plancherel_pair_parity_and_constant() {
        let g = default_grid(1);
        let even = RadialField::from_fn(g.clone(), |r, s| Complex64::new((-r * r - s * s / 4.0).exp(), 0.0));
        let odd = RadialField::from_fn(g.clone(), |r, s| Complex64::new(s * (-r * r - s * s / 4.0).exp(), 0.0));
        assert!(plancherel_pair(&even, &odd, 32).unwrap().norm() < 1e-10);
        let (f, h) = (suite()[0].field(&g), suite()[1].field(&g));
        let lhs = plancherel_pair(&f, &h, 64).unwrap();
        let rhs = f.inner(&h).unwrap() * plancherel_constant(1);
        assert!((lhs - rhs).norm() < 1e-6 * rhs.norm().max(1e-3 * f.l2_norm() * h.l2_norm()));
    }

    #[test]
    fn grid_transform_matches_closed_form() {
        for d in [1, 2] {
            let g = default_grid(d);
            let p = suite()[0];
            let theta = forward(&p.field(&g), 64);
            let mut worst: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for ell in 0..=16 {
                for m in 0..g.n_s() {
                    let l = g.s.lambda(m);
                    if l == 0.0 {
                        continue;
                    }
                    let e = p.spectrum(ell, l, d);
                    worst = worst.max((theta.at(ell, m) - e).norm());
                    scale = scale.max(e.norm());
                }
            }
            assert!(worst < 1e-8 * scale, "d={d}: {worst:e} vs {scale:e}");
        }
    }

    #[test]
    fn closure_mode_matches_closed_form() {
        for d in [1, 2] {
            let g = default_grid(d);
            let p = Packet {
                a: 1.0,
                sigma: 3.0,
                kappa: 1.5,
            };
            let theta = forward_closure(|r, s| p.eval(r, s), &g, 16, ClosureQuadrature::default());
            let mut worst: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for ell in 0..=16 {
                for m in 0..g.n_s() {
                    let l = g.s.lambda(m);
                    if l == 0.0 {
                        continue;
                    }
                    let e = p.spectrum(ell, l, d);
                    worst = worst.max((theta.at(ell, m) - e).norm());
                    scale = scale.max(e.norm());
                }
            }
            assert!(worst < 1e-8 * scale, "d={d}: {worst:e} vs {scale:e}");
        }
    }

    #[test]
    fn round_trip_on_localized_fields() {
        for d in [1, 2] {
            let g = default_grid(d);
            for p in suite() {
                let f = localize(&p.field(&g), Localizer::Ball { scale: 6.0 }, 64);
                let back = inverse(&forward(&f, 64));
                let e = back.relative_l2_error(&f).unwrap();
                assert!(e < 1e-6, "d={d}: {e:e}");
            }
        }
    }

    #[test]
    fn spectrum_survives_inverse_then_forward() {
        let g = default_grid(1);
        let bump = Bump::default();
        let theta = SpectralField::from_fn(g.clone(), 8, |ell, l| {
            Complex64::new(
                bump.eval(l.abs()) / (1.0 + ell as f64),
                0.2 * ell as f64 * bump.eval(l.abs()),
            )
        });
        let again = forward(&inverse(&theta), 8);
        let e = again.sub(&theta).unwrap().lp_norm(2.0) / theta.lp_norm(2.0);
        assert!(e < 1e-10, "{e:e}");
    }

    #[test]
    fn forward_at_agrees_on_grid() {
        let g = default_grid(2);
        let f = suite()[1].field(&g);
        let theta = forward(&f, 10);
        let m = g.s.zero_index() + 70;
        let direct = forward_at(&f, g.s.lambda(m), 10).unwrap();
        for ell in 0..=10 {
            assert!((direct[ell] - theta.at(ell, m)).norm() < 1e-12 * theta.lp_norm(f64::INFINITY));
        }
        assert!(forward_at(&f, 0.0, 3).is_err());
    }

    #[test]
    fn dilation_covariance() {
        let g = default_grid(1);
        let p = Packet {
            a: 1.0,
            sigma: 4.0,
            kappa: 1.0,
        };
        let a = 2.0;
        let f = p.field(&g);
        let fa = RadialField::from_fn(g.clone(), |r, s| p.eval(a * r, a * a * s));
        let (t, ta) = (forward(&f, 32), forward(&fa, 32));
        let z = g.s.zero_index() as i64;
        let q = g.homogeneous_dim();
        let mut worst: f64 = 0.0;
        for ell in 0..=32 {
            for k in (-60i64..=60).filter(|k| k % 4 == 0 && *k != 0) {
                let lhs = ta.at(ell, (z + k) as usize);
                let rhs = t.at(ell, (z + k / 4) as usize) * a.powf(-q);
                worst = worst.max((lhs - rhs).norm());
            }
        }
        assert!(worst < 1e-8 * t.lp_norm(f64::INFINITY) * a.powf(-q), "{worst:e}");
        // The interpolating dilation reproduces the sampled closure.
        let fi = dilate(&f, a, RhoInterp::Spectral).unwrap();
        assert!(fi.relative_l2_error(&fa).unwrap() < 1e-8);
    }

    #[test]
    fn sobolev_orders() {
        let g = default_grid(1);
        let p = suite()[0];
        let f = p.field(&g);
        let theta = forward(&f, 64);
        let h0 = sobolev_norm_spectral(&theta, 0.0).unwrap();
        assert!((h0 / f.l2_norm() - 1.0).abs() < 1e-8);
        // |grad_H f|^2 = |d_rho f|^2 + 4 rho^2 |d_s f|^2 for radial f.
        let grad = RadialField::from_fn(g.clone(), |r, s| {
            let v = p.eval(r, s);
            let dr = v * (-2.0 * p.a * r);
            let ds = v * Complex64::new(-2.0 * s / (p.sigma * p.sigma), p.kappa);
            Complex64::new((dr.norm_sqr() + 4.0 * r * r * ds.norm_sqr()).sqrt(), 0.0)
        });
        let h1 = sobolev_norm_spectral(&theta, 1.0).unwrap();
        assert!((h1 / grad.l2_norm() - 1.0).abs() < 1e-8, "{h1} {}", grad.l2_norm());
    }

    #[test]
    fn negative_order_refused_near_origin() {
        let g = Grid::new(1, 64, 10.0, 128, 20.0);
        let f = RadialField::from_fn(g, |r, s| Complex64::new((-r * r - s * s).exp(), 0.0));
        let theta = forward(&f, 16);
        assert!(matches!(
            sobolev_norm_spectral(&theta, -1.0),
            Err(TransformError::Refused(_))
        ));
        assert!(sobolev_norm_spectral(&theta, 1.0).is_ok());
    }

    #[test]
    fn sublaplacian_eigenvalue_by_finite_differences() {
        let (lambda, ell) = (0.7f64, 1usize);
        let f = |y: f64, e: f64, s: f64| {
            let r2 = y * y + e * e;
            Complex64::from_polar(
                (-lambda.abs() * r2).exp() * crate::specfun::laguerre(ell, 0.0, 2.0 * lambda.abs() * r2),
                lambda * s,
            )
        };
        let (y, e, s) = (0.3, -0.4, 0.2);
        let h = 1e-3;
        let d2 = |g: &dyn Fn(f64) -> Complex64| {
            (-g(2.0 * h) + g(h) * 16.0 - g(0.0) * 30.0 + g(-h) * 16.0 - g(-2.0 * h)) / (12.0 * h * h)
        };
        let d1 = |g: &dyn Fn(f64) -> Complex64| (g(-2.0 * h) - g(-h) * 8.0 + g(h) * 8.0 - g(2.0 * h)) / (12.0 * h);
        let fyy = d2(&|t| f(y + t, e, s));
        let fee = d2(&|t| f(y, e + t, s));
        let fss = d2(&|t| f(y, e, s + t));
        let fys = d1(&|t| d1(&|u| f(y + t, e, s + u)));
        let fes = d1(&|t| d1(&|u| f(y, e + t, s + u)));
        let lap = fyy + fys * (4.0 * e) + fss * (4.0 * e * e) + fee - fes * (4.0 * y) + fss * (4.0 * y * y);
        let mu = eigenvalue(ell as u64, lambda, 1);
        let expect = -f(y, e, s) * mu;
        assert!((lap - expect).norm() < 1e-6 * expect.norm(), "{lap} {expect}");
    }

    #[test]
    fn convolution_matches_direct_quadrature() {
        let g = default_grid(1);
        let (p, q) = (
            Packet {
                a: 1.0,
                sigma: 3.0,
                kappa: 2.0,
            },
            Packet {
                a: 1.5,
                sigma: 2.5,
                kappa: 2.0,
            },
        );
        let conv = group_convolve_radial(&p.field(&g), &q.field(&g), 64).unwrap();
        let (yn, yw) = crate::quad::gauss_legendre(72, -7.0, 7.0);
        let (sn, sw) = crate::quad::gauss_legendre(200, -20.0, 20.0);
        for &(i, j) in &[(20usize, 256usize), (40, 259), (55, 250)] {
            let (r, s) = (g.rho.nodes[i], g.s.node(j));
            let mut acc = Complex64::new(0.0, 0.0);
            for (y1, w1) in yn.iter().zip(&yw) {
                for (e1, w2) in yn.iter().zip(&yw) {
                    let rr = ((r - y1).powi(2) + e1 * e1).sqrt();
                    let rv = (y1 * y1 + e1 * e1).sqrt();
                    // w v^{-1} with w = ((r, 0), s): vertical part s - s' + 2 eta' r
                    for (s1, w3) in sn.iter().zip(&sw) {
                        acc += p.eval(rr, s - s1 + 2.0 * e1 * r) * q.eval(rv, *s1) * (w1 * w2 * w3);
                    }
                }
            }
            let got = conv.at(i, j);
            assert!((got - acc).norm() < 1e-4 * acc.norm(), "{got} {acc}");
        }
        let young = conv.l2_norm() / (p.field(&g).lp_norm(1.0).unwrap() * q.field(&g).l2_norm());
        assert!(young <= 1.0);
    }

    #[test]
    fn hausdorff_young_family() {
        let g = default_grid(1);
        for p in suite() {
            let f = p.field(&g);
            for e in [1.0, 4.0 / 3.0, 2.0] {
                let hy = hausdorff_young_check(&f, e, 64).unwrap();
                assert!(hy.ratio <= 1.0 + 1e-9, "p={e}: {}", hy.ratio);
                if e == 2.0 {
                    assert!((hy.ratio - 1.0).abs() < 1e-6);
                }
            }
        }
        assert!(hausdorff_young_check(&suite()[0].field(&g), 3.0, 8).is_err());
    }

    #[test]
    fn bernstein_exponent_on_dilation_family() {
        let g = Grid::new(1, 128, 12.0, 256, 40.0);
        let base = localize(
            &Packet {
                a: 1.0,
                sigma: 4.0,
                kappa: 1.0,
            }
            .field(&g),
            Localizer::Ball { scale: 4.0 },
            48,
        );
        let r = bernstein_check(
            &base,
            Localizer::Ball { scale: 4.0 },
            2.0,
            f64::INFINITY,
            &[1.0, 2.0, 4.0, 8.0],
            48,
        )
        .unwrap();
        assert!((r.fitted_exponent - 2.0).abs() < 0.1, "{}", r.fitted_exponent);
        assert!(r.leakage < 1e-10);
    }

    #[test]
    fn spacetime_plancherel() {
        let g = Grid::new(1, 128, 12.0, 256, 40.0);
        let f = Packet {
            a: 1.0,
            sigma: 4.0,
            kappa: 2.0,
        }
        .field(&g);
        let times = TimeGrid::uniform(-6.0, 6.0, 64);
        let slices = times
            .nodes
            .iter()
            .map(|&t| f.scale(Complex64::new((-t * t).exp(), 0.0)))
            .collect();
        let u = SpaceTimeField::from_slices(times, slices).unwrap();
        let fd = transform_d(&u, 32).unwrap();
        let r = fd.mass() / spacetime_mass(&u);
        assert!((r / plancherel_constant_d(1) - 1.0).abs() < 1e-5, "{r}");
        assert!((plancherel_constant_d(1) - 2.0 * PI.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn pure_time_oscillation_concentrates() {
        let g = Grid::new(1, 32, 8.0, 64, 10.0);
        let f = Packet {
            a: 1.0,
            sigma: 2.0,
            kappa: 2.0,
        }
        .field(&g);
        let times = TimeGrid::uniform(0.0, 2.0 * PI * 31.0 / 32.0, 32);
        let omega = 5.0;
        let fd = transform_d(&modulated_in_time(&f, omega, times), 8).unwrap();
        let masses: Vec<f64> = fd.slices.iter().map(|s| s.weighted_mass(|_, _| 1.0)).collect();
        let k = masses.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!((fd.alphas[k] - omega).abs() <= 0.5 * fd.alpha_step);
        let total: f64 = masses.iter().sum();
        assert!(masses[k] / total > 1.0 - 1e-10);
    }

    #[test]
    fn checked_forward_flags_truncation() {
        let g = Grid::new(1, 64, 4.0, 128, 20.0);
        let wide = RadialField::from_fn(g, |r, s| Complex64::new((-0.1 * r * r - s * s).exp(), 0.0));
        assert!(matches!(
            forward_checked(&wide, 16, 1e-6),
            Err(TransformError::Truncation { .. })
        ));
    }

    #[test]
    fn translation_identity_vertical_and_horizontal() {
        let g = Grid::new(1, 96, 10.0, 256, 16.0);
        let p = Packet {
            a: 0.6,
            sigma: 2.0,
            kappa: 1.0,
        };
        for (y0, s0) in [([0.0, 0.0], 0.7), ([0.4, -0.3], 0.0), ([0.2, 0.5], -0.4)] {
            let t = translate_identity_check(|r, s| p.eval(r, s), &g, y0, s0, 1, 1.0).unwrap();
            assert!(t.relative_error < 1e-6, "{y0:?} {s0}: {} {}", t.lhs, t.rhs);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn transform_is_linear(c in -2.0f64..2.0, d in -2.0f64..2.0) {
            let g = Grid::new(1, 48, 10.0, 64, 12.0);
            let (p, q) = (suite()[0].field(&g), suite()[1].field(&g));
            let mix = p.scale(Complex64::new(c, 0.0)).add(&q.scale(Complex64::new(0.0, d))).unwrap();
            let (tp, tq, tm) = (forward(&p, 12), forward(&q, 12), forward(&mix, 12));
            for k in 0..tm.values.len() {
                let e = tp.values[k] * c + tq.values[k] * Complex64::new(0.0, d);
                prop_assert!((tm.values[k] - e).norm() < 1e-12 * (1.0 + e.norm()));
            }
        }

        #[test]
        fn vertical_translation_is_a_phase(s0 in -3.0f64..3.0) {
            let g = Grid::new(1, 48, 10.0, 128, 16.0);
            let f = suite()[0].field(&g);
            let t = forward(&crate::fields::s_translate(&f, s0), 8);
            let base = forward(&f, 8);
            for ell in 0..=8 {
                for m in 0..g.n_s() {
                    let e = base.at(ell, m) * Complex64::from_polar(1.0, g.s.lambda(m) * s0);
                    prop_assert!((t.at(ell, m) - e).norm() < 1e-11);
                }
            }
        }
    }
}
