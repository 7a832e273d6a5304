//! Frequency surfaces of the radial spectrum and the operators attached to them.
//!
//! The sphere is `(2 ell + d)|lambda| = R`. On `R x H^d` the localized
//! paraboloid is `alpha = 4|lambda|(2 ell + d)` and the cones are
//! `alpha^2 = 4|lambda|(2 ell + d)`, `+-alpha > 0`, each weighted by a window
//! `psi(alpha)`. All measures here count every `n` with `|n| = ell`
//! separately, so the `L^2` norms carry the multiplicity while the inverse
//! transforms, which only see the radial kernel, do not.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::{GaussianPacket, PacketFamily, SpaceTimePacket};
use crate::fields::{FieldError, NormOrder, RadialField, SpaceTimeField};
use crate::grid::{Grid, TimeGrid};
use crate::htransform::{
    diagnostics_physical, forward, inverse, plancherel_constant, sobolev_norm_spectral, SpectralField, TransformError,
};
use crate::propagators::{schrodinger_phase, wave_at, wave_branches, PropagatorError};
use crate::quad::{gauss_legendre, pairwise_sum, series_tail};
use crate::specfun::{eigenvalue, laguerre_weighted, multiplicity_f64};
use crate::window::{ball_cutoff, Localizer};

#[derive(Debug, Error)]
pub enum RestrictionError {
    #[error("{what}: estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    Truncation {
        what: String,
        estimate: f64,
        tolerance: f64,
    },
    #[error("quadrature did not converge: {0}")]
    NonConvergent(String),
    #[error("inadmissible pair (p, q) = ({p}, {q}): violates {constraint}")]
    Inadmissible { p: f64, q: f64, constraint: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
}

fn nu(ell: usize, d: usize) -> f64 {
    2.0 * ell as f64 + d as f64
}

fn mult(ell: usize, d: usize) -> f64 {
    multiplicity_f64(ell as u64, d).value
}

/// The multiplicity `binom(x + d - 1, d - 1)` continued to real `x`.
fn smooth_mult(x: f64, d: usize) -> f64 {
    (1..d).map(|k| (x + k as f64) / k as f64).product()
}

/// `sum_{ell > l_max} binom(ell + d - 1, d - 1) (2 ell + d)^{-(d+1)}`.
fn weight_tail(l_max: usize, d: usize) -> f64 {
    series_tail(
        |x| smooth_mult(x, d) * (2.0 * x + d as f64).powi(-(d as i32 + 1)),
        l_max + 1,
        64,
    )
}

/// Radial kernel `e^{-|lambda| rho^2} L_ell^{(d-1)}(2|lambda| rho^2)` at one `ell`.
fn kernel(ell: usize, lambda: f64, rho: f64, d: usize, buf: &mut Vec<f64>) -> f64 {
    buf.resize(ell + 1, 0.0);
    laguerre_weighted((d - 1) as f64, 2.0 * lambda.abs() * rho * rho, 0.0, &mut buf[..=ell]);
    buf[ell]
}

/// A truncated series with its extrapolated tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    /// Partial sum plus the tail estimate.
    pub value: Complex64,
    pub partial: Complex64,
    /// Bound on the omitted terms, assuming the normalized terms stay below
    /// their largest value over the second half of the summed range.
    pub tail_bound: f64,
    pub l_max: usize,
}

impl SeriesValue {
    pub fn checked(self, tolerance: f64) -> Result<Complex64, RestrictionError> {
        if self.tail_bound > tolerance {
            return Err(RestrictionError::Truncation {
                what: format!("series tail beyond ell = {}", self.l_max),
                estimate: self.tail_bound,
                tolerance,
            });
        }
        Ok(self.value)
    }
}

/// The sphere `(2 ell + d)|lambda| = R` with its measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereMeasure {
    r: f64,
}

impl SphereMeasure {
    pub fn new(r: f64) -> Result<Self, RestrictionError> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(RestrictionError::InvalidArgument(format!(
                "sphere parameter must be positive, got {r}"
            )));
        }
        Ok(Self { r })
    }

    pub fn unit() -> Self {
        Self { r: 1.0 }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `|lambda|` of the sphere on the line `ell`.
    pub fn lambda(&self, ell: usize, d: usize) -> f64 {
        self.r / nu(ell, d)
    }

    /// Mass of each of the two points on the line `ell`, per `n`.
    pub fn weight(&self, ell: usize, d: usize) -> f64 {
        self.r.powi(d as i32) * nu(ell, d).powi(-(d as i32 + 1))
    }

    pub fn points(&self, d: usize, l_max: usize) -> Vec<SurfacePoint> {
        (0..=l_max)
            .flat_map(|ell| {
                let (l, w) = (self.lambda(ell, d), self.weight(ell, d));
                [1.0, -1.0].map(|sg| SurfacePoint {
                    ell,
                    lambda: sg * l,
                    alpha: 0.0,
                    weight: w,
                })
            })
            .collect()
    }
}

/// `<d sigma_R, theta>`, summed to `l_max` and closed with a tail estimate.
pub fn sphere_pair<F: Fn(usize, f64) -> Complex64>(
    theta: F,
    mu: &SphereMeasure,
    d: usize,
    l_max: usize,
) -> SeriesValue {
    let q: Vec<Complex64> = (0..=l_max)
        .map(|ell| {
            let l = mu.lambda(ell, d);
            theta(ell, l) + theta(ell, -l)
        })
        .collect();
    let mut partial = Complex64::new(0.0, 0.0);
    for ell in (0..=l_max).rev() {
        partial += q[ell] * (mult(ell, d) * mu.weight(ell, d));
    }
    let wt = mu.r.powi(d as i32) * weight_tail(l_max, d);
    let qmax = q[l_max / 2..].iter().map(|v| v.norm()).fold(0.0, f64::max);
    SeriesValue {
        value: partial + q[l_max] * wt,
        partial,
        tail_bound: qmax * wt,
        l_max,
    }
}

/// `G_R(rho, s) = R^d (2^d / pi^{d+1}) sum_ell (2 ell + d)^{-(d+1)} cos(s lambda_ell) W(ell, lambda_ell, rho)`
/// with `lambda_ell = R/(2 ell + d)`: the inverse transform of `d sigma_R`.
pub fn g_r(rho: f64, s: f64, r: f64, d: usize, l_max: usize) -> SeriesValue {
    let c = r.powi(d as i32) * 2f64.powi(d as i32) / PI.powi(d as i32 + 1);
    let mut buf = Vec::new();
    let mut terms = Vec::with_capacity(l_max + 1);
    let mut q_last = 0.0;
    for ell in 0..=l_max {
        let lam = r / nu(ell, d);
        let k = (s * lam).cos() * kernel(ell, lam, rho, d, &mut buf);
        terms.push(nu(ell, d).powi(-(d as i32 + 1)) * k);
        if ell == l_max {
            q_last = k / mult(ell, d);
        }
    }
    let partial = c * pairwise_sum(&terms);
    // |W| <= multiplicity, so each normalized term is at most 1.
    let wt = c * weight_tail(l_max, d);
    SeriesValue {
        value: Complex64::new(partial + q_last * wt, 0.0),
        partial: Complex64::new(partial, 0.0),
        tail_bound: wt,
        l_max,
    }
}

/// `G = G_1`, the inverse transform of the unit sphere measure.
pub fn g_function(rho: f64, s: f64, d: usize, l_max: usize) -> SeriesValue {
    g_r(rho, s, 1.0, d, l_max)
}

/// A point of a frequency surface with its measure per `n` (no multiplicity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub ell: usize,
    pub lambda: f64,
    /// Time frequency; zero on the sphere.
    pub alpha: f64,
    pub weight: f64,
}

/// Values of a transform on a surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceValues {
    pub d: usize,
    pub l_max: usize,
    pub points: Vec<SurfacePoint>,
    pub values: Vec<Complex64>,
    /// Estimated squared norm beyond `l_max`.
    pub tail: f64,
}

impl SurfaceValues {
    fn new(d: usize, l_max: usize, points: Vec<SurfacePoint>, values: Vec<Complex64>) -> Self {
        let mut out = Self {
            d,
            l_max,
            points,
            values,
            tail: 0.0,
        };
        // Surface weights scale like (2 ell + d)^{-(d+1)} along a line of fixed alpha.
        let last: f64 = out
            .points
            .iter()
            .zip(&out.values)
            .filter(|(p, _)| p.ell == l_max)
            .map(|(p, v)| p.weight * v.norm_sqr())
            .sum();
        out.tail = last * nu(l_max, d).powi(d as i32 + 1) * weight_tail(l_max, d);
        out
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); self.values.len()],
            tail: 0.0,
            ..self.clone()
        }
    }

    pub fn norm_sqr_partial(&self) -> f64 {
        let terms: Vec<f64> = self
            .points
            .iter()
            .zip(&self.values)
            .map(|(p, v)| mult(p.ell, self.d) * p.weight * v.norm_sqr())
            .collect();
        pairwise_sum(&terms)
    }

    /// `L^2` norm on the surface, tail included.
    pub fn norm(&self) -> f64 {
        (self.norm_sqr_partial() + self.tail).sqrt()
    }

    /// `sum mult w a conj(b)` over the truncated surface.
    pub fn pair(&self, other: &Self) -> Result<Complex64, RestrictionError> {
        if self.points != other.points {
            return Err(RestrictionError::InvalidArgument("surface point sets differ".into()));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for ((p, a), b) in self.points.iter().zip(&self.values).zip(&other.values) {
            acc += a * b.conj() * (mult(p.ell, self.d) * p.weight);
        }
        Ok(acc)
    }
}

/// Truncation and edge tolerances for restriction operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestrictOptions {
    pub l_max: usize,
    /// Largest share of `||f||^2` allowed near the edge of the box; beyond
    /// it the vertical sums no longer approximate integrals over `R`.
    pub edge_tolerance: f64,
}

impl Default for RestrictOptions {
    fn default() -> Self {
        Self {
            l_max: 64,
            edge_tolerance: 1e-8,
        }
    }
}

fn check_edges(f: &RadialField, tol: f64) -> Result<(), RestrictionError> {
    let (rho_edge, s_edge) = diagnostics_physical(f);
    for (what, e) in [("radial edge mass", rho_edge), ("vertical edge mass", s_edge)] {
        if e > tol {
            return Err(RestrictionError::Truncation {
                what: what.into(),
                estimate: e,
                tolerance: tol,
            });
        }
    }
    Ok(())
}

/// `theta(ell, lambda)` at arbitrary points by direct sums in `s`.
fn transform_points(f: &RadialField, pts: &[SurfacePoint]) -> Vec<Complex64> {
    let g = &f.grid;
    let yw = g.y_weights();
    let h = g.s.step();
    pts.par_iter()
        .map(|p| {
            let step = Complex64::from_polar(1.0, -h * p.lambda);
            let start = Complex64::from_polar(1.0, g.s.half_width * p.lambda);
            let mut buf = Vec::new();
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..g.n_rho() {
                let mut ph = start;
                let mut fs = Complex64::new(0.0, 0.0);
                for v in f.row(i) {
                    fs += v * ph;
                    ph *= step;
                }
                acc += fs * (yw[i] * kernel(p.ell, p.lambda, g.rho.nodes[i], g.d, &mut buf));
            }
            acc * (h / mult(p.ell, g.d))
        })
        .collect()
}

/// `scale sum_p w_p v_p e^{i t alpha_p} e^{i s lambda_p} W(ell_p, lambda_p, rho)` at each time.
fn synthesize(values: &SurfaceValues, grid: &Grid, times: &[f64], scale: f64) -> Vec<RadialField> {
    let (nr, ns, d) = (grid.n_rho(), grid.n_s(), grid.d);
    let s = grid.s.nodes();
    let columns: Vec<(Vec<f64>, Vec<Complex64>)> = values
        .points
        .par_iter()
        .map(|p| {
            let mut buf = Vec::new();
            let k = grid
                .rho
                .nodes
                .iter()
                .map(|&r| kernel(p.ell, p.lambda, r, d, &mut buf))
                .collect();
            let e = s.iter().map(|&sj| Complex64::from_polar(1.0, sj * p.lambda)).collect();
            (k, e)
        })
        .collect();
    times
        .par_iter()
        .map(|&t| {
            let mut out = vec![Complex64::new(0.0, 0.0); nr * ns];
            for ((p, v), (k, e)) in values.points.iter().zip(&values.values).zip(&columns) {
                let c = v * Complex64::from_polar(scale * p.weight, t * p.alpha);
                for i in 0..nr {
                    let ci = c * k[i];
                    for (o, ej) in out[i * ns..(i + 1) * ns].iter_mut().zip(e) {
                        *o += ci * ej;
                    }
                }
            }
            RadialField {
                grid: grid.clone(),
                values: out,
            }
        })
        .collect()
}

/// Restriction of `forward(f)` to the sphere, with the `L^2(d sigma)` norm.
pub fn restrict_sphere(
    f: &RadialField,
    mu: &SphereMeasure,
    opts: &RestrictOptions,
) -> Result<SurfaceValues, RestrictionError> {
    check_edges(f, opts.edge_tolerance)?;
    let pts = mu.points(f.grid.d, opts.l_max);
    let vals = transform_points(f, &pts);
    Ok(SurfaceValues::new(f.grid.d, opts.l_max, pts, vals))
}

/// The inverse transform of `v d sigma`; adjoint of `restrict_sphere` up to
/// `plancherel_constant(d)`.
pub fn sphere_extension(values: &SurfaceValues, grid: &Grid) -> RadialField {
    let c = 1.0 / plancherel_constant(grid.d);
    synthesize(values, grid, &[0.0], c).pop().expect("one time")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaVariant {
    /// `alpha = 4|lambda|(2 ell + d)`.
    Schrodinger,
    /// `alpha^2 = 4|lambda|(2 ell + d)`, `alpha > 0`.
    WavePlus,
    /// `alpha^2 = 4|lambda|(2 ell + d)`, `alpha < 0`.
    WaveMinus,
}

/// A localized surface in `R x H^d` with window `psi(alpha) = ball_cutoff(|alpha| / window_scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaMeasure {
    pub variant: SigmaVariant,
    /// Support radius of the window; zero gives the zero measure.
    pub window_scale: f64,
    /// Gauss–Legendre nodes in `alpha` for off-grid restriction.
    pub alpha_nodes: usize,
}

impl SigmaMeasure {
    pub fn new(variant: SigmaVariant) -> Self {
        Self {
            variant,
            window_scale: 1.0,
            alpha_nodes: 32,
        }
    }

    pub fn with_window(self, window_scale: f64) -> Self {
        Self { window_scale, ..self }
    }

    /// `c_ell = 1 / (4 (2 ell + d))`.
    pub fn c(ell: usize, d: usize) -> f64 {
        0.25 / nu(ell, d)
    }

    pub fn window(&self, alpha: f64) -> f64 {
        if self.window_scale <= 0.0 {
            0.0
        } else {
            ball_cutoff(alpha.abs() / self.window_scale)
        }
    }

    pub fn lambda_abs(&self, alpha: f64, ell: usize, d: usize) -> f64 {
        let c = Self::c(ell, d);
        match self.variant {
            SigmaVariant::Schrodinger => alpha.abs() * c,
            _ => alpha * alpha * c,
        }
    }

    /// `|lambda|^d d|lambda| / d alpha`.
    pub fn density(&self, alpha: f64, ell: usize, d: usize) -> f64 {
        let c = Self::c(ell, d).powi(d as i32 + 1);
        let a = alpha.abs();
        match self.variant {
            SigmaVariant::Schrodinger => c * a.powi(d as i32),
            _ => 2.0 * c * a.powi(2 * d as i32 + 1),
        }
    }

    /// The time frequency sitting over the bin `(ell, lambda)`.
    pub fn alpha_of(&self, ell: usize, lambda: f64, d: usize) -> f64 {
        let mu = eigenvalue(ell as u64, lambda, d);
        match self.variant {
            SigmaVariant::Schrodinger => mu,
            SigmaVariant::WavePlus => mu.sqrt(),
            SigmaVariant::WaveMinus => -mu.sqrt(),
        }
    }

    pub fn alpha_range(&self) -> (f64, f64) {
        match self.variant {
            SigmaVariant::WaveMinus => (-self.window_scale, 0.0),
            _ => (0.0, self.window_scale),
        }
    }

    /// Off-grid quadrature points, `alpha`-major, then `ell`, then the sign of `lambda`.
    pub fn points(&self, d: usize, l_max: usize) -> Vec<SurfacePoint> {
        if self.window_scale <= 0.0 {
            return Vec::new();
        }
        let (a, b) = self.alpha_range();
        let (x, w) = gauss_legendre(self.alpha_nodes, a, b);
        let mut out = Vec::new();
        for (&alpha, &wa) in x.iter().zip(&w) {
            let psi = self.window(alpha);
            for ell in 0..=l_max {
                let l = self.lambda_abs(alpha, ell, d);
                let weight = wa * psi * self.density(alpha, ell, d);
                for sg in [1.0, -1.0] {
                    out.push(SurfacePoint {
                        ell,
                        lambda: sg * l,
                        alpha,
                        weight,
                    });
                }
            }
        }
        out
    }
}

fn check_spacetime_edges(u: &SpaceTimeField, tol: f64) -> Result<(), RestrictionError> {
    (0..u.times.len()).try_for_each(|n| check_edges(&u.slice(n), tol))
}

/// `F_D u` on the surface at the off-grid quadrature points of `mu`:
/// time integral first, then direct vertical sums at each `lambda`.
pub fn restrict_sigma(
    u: &SpaceTimeField,
    mu: &SigmaMeasure,
    opts: &RestrictOptions,
) -> Result<SurfaceValues, RestrictionError> {
    check_spacetime_edges(u, opts.edge_tolerance)?;
    let d = u.grid.d;
    let pts = mu.points(d, opts.l_max);
    let per_alpha = 2 * (opts.l_max + 1);
    let tw = u.times.trapezoid_weights();
    let vals: Vec<Complex64> = pts
        .par_chunks(per_alpha)
        .flat_map_iter(|chunk| {
            let alpha = chunk[0].alpha;
            let mut acc = RadialField::zeros(u.grid.clone());
            for (n, (&t, &w)) in u.times.nodes.iter().zip(&tw).enumerate() {
                let c = Complex64::from_polar(w, -t * alpha);
                let m = u.slice_len();
                for (a, v) in acc.values.iter_mut().zip(&u.values[n * m..(n + 1) * m]) {
                    *a += c * v;
                }
            }
            transform_points(&acc, chunk)
        })
        .collect();
    Ok(SurfaceValues::new(d, opts.l_max, pts, vals))
}

/// `F_D u` on the surface at the bins of the dual grid, `alpha` following from `lambda`.
///
/// The measure becomes `psi(alpha) |lambda|^d dlambda` on each line `ell`.
/// Values are exact for the periodic grid, so no edge check is made.
pub fn restrict_sigma_grid(
    u: &SpaceTimeField,
    mu: &SigmaMeasure,
    opts: &RestrictOptions,
) -> Result<SurfaceValues, RestrictionError> {
    let g = &u.grid;
    let d = g.d;
    let tw = u.times.trapezoid_weights();
    let spectra: Vec<SpectralField> = (0..u.times.len())
        .into_par_iter()
        .map(|n| forward(&u.slice(n), opts.l_max))
        .collect();
    let mut pts = Vec::new();
    let mut vals = Vec::new();
    for ell in 0..=opts.l_max {
        for m in 0..g.n_s() {
            let lambda = g.s.lambda(m);
            if lambda == 0.0 {
                continue;
            }
            let alpha = mu.alpha_of(ell, lambda, d);
            let psi = mu.window(alpha);
            if psi == 0.0 {
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for ((&t, &w), th) in u.times.nodes.iter().zip(&tw).zip(&spectra) {
                acc += th.at(ell, m) * Complex64::from_polar(w, -t * alpha);
            }
            pts.push(SurfacePoint {
                ell,
                lambda,
                alpha,
                weight: psi * lambda.abs().powi(d as i32) * g.s.lambda_step(),
            });
            vals.push(acc);
        }
    }
    Ok(SurfaceValues::new(d, opts.l_max, pts, vals))
}

/// `F_D^{-1}(v d Sigma)` on `times x grid`; adjoint of the restrictions up
/// to `plancherel_constant_d(d)`.
pub fn sigma_extension(
    values: &SurfaceValues,
    grid: &Grid,
    times: &TimeGrid,
) -> Result<SpaceTimeField, RestrictionError> {
    let c = 1.0 / (2.0 * PI * plancherel_constant(grid.d));
    let slices = synthesize(values, grid, &times.nodes, c);
    Ok(SpaceTimeField::from_slices(times.clone(), slices)?)
}

/// `int u conj(v)` over `times x H^d`, trapezoid in time.
pub fn spacetime_inner(u: &SpaceTimeField, v: &SpaceTimeField) -> Result<Complex64, RestrictionError> {
    if u.grid != v.grid || u.times != v.times {
        return Err(FieldError::GridMismatch.into());
    }
    let tw = u.times.trapezoid_weights();
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, w) in tw.iter().enumerate() {
        acc += u.slice(n).inner(&v.slice(n))? * *w;
    }
    Ok(acc)
}

/// `G_Sigma(t, rho, s) = F_D^{-1}(d Sigma)`: the paraboloid measure is a
/// superposition of spheres, `(1/(8 pi)) int G_{alpha/4} e^{i t alpha} psi(alpha) d alpha`.
///
/// The `alpha` integral uses composite Gauss–Legendre, doubling the panel
/// count until two successive values agree to `tol` relative.
pub fn g_sigma(
    t: f64,
    rho: f64,
    s: f64,
    d: usize,
    mu: &SigmaMeasure,
    l_max: usize,
    tol: f64,
) -> Result<Complex64, RestrictionError> {
    g_sigma_impl(t, rho, s, d, mu, l_max, tol, true)
}

#[allow(clippy::too_many_arguments)]
fn g_sigma_impl(
    t: f64,
    rho: f64,
    s: f64,
    d: usize,
    mu: &SigmaMeasure,
    l_max: usize,
    tol: f64,
    with_tail: bool,
) -> Result<Complex64, RestrictionError> {
    if mu.variant != SigmaVariant::Schrodinger {
        return Err(RestrictionError::InvalidArgument(
            "g_sigma is defined for the Schrodinger surface".into(),
        ));
    }
    if mu.window_scale <= 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (x, w) = gauss_legendre(16, -1.0, 1.0);
    let a = mu.window_scale;
    let integral = |panels: usize| -> Complex64 {
        let h = a / panels as f64;
        (0..panels)
            .into_par_iter()
            .map(|p| {
                let lo = p as f64 * h;
                let mut acc = Complex64::new(0.0, 0.0);
                for (xi, wi) in x.iter().zip(&w) {
                    let al = lo + 0.5 * h * (xi + 1.0);
                    let g = g_r(rho, s, al / 4.0, d, l_max);
                    let gv = if with_tail { g.value.re } else { g.partial.re };
                    acc += Complex64::from_polar(wi * gv * mu.window(al), t * al);
                }
                acc * (0.5 * h)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum::<Complex64>()
            / (8.0 * PI)
    };
    let mut panels = 2;
    let mut prev = integral(panels);
    while panels < 1024 {
        panels *= 2;
        let next = integral(panels);
        let diff = (next - prev).norm();
        if diff <= tol * next.norm() || diff < 1e-15 {
            return Ok(next);
        }
        prev = next;
    }
    Err(RestrictionError::NonConvergent(format!(
        "alpha quadrature at {panels} panels, t = {t}"
    )))
}

/// Box sizes for a ratio scan; `refined` doubles the resolution in every direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub n_rho: usize,
    pub r_max: f64,
    pub n_s: usize,
    pub s_half_width: f64,
    pub l_max: usize,
}

impl ScanGrid {
    pub fn grid(&self, d: usize) -> Grid {
        Grid::new(d, self.n_rho, self.r_max, self.n_s, self.s_half_width)
    }

    pub fn refined(&self) -> Self {
        Self {
            n_rho: 2 * self.n_rho,
            n_s: 2 * self.n_s,
            l_max: 2 * self.l_max,
            ..*self
        }
    }

    fn options(&self) -> RestrictOptions {
        RestrictOptions {
            l_max: self.l_max,
            ..RestrictOptions::default()
        }
    }
}

/// `||F_H f|_S||_{L^2(d sigma)} / ||f||_{L^2_Y L^1_s}`.
pub fn sphere_ratio(f: &RadialField, mu: &SphereMeasure, opts: &RestrictOptions) -> Result<f64, RestrictionError> {
    Ok(restrict_sphere(f, mu, opts)?.norm() / f.mixed_norm(2.0, 1.0, NormOrder::YOuter)?)
}

/// `||F_D u|_Sigma||_{L^2(d Sigma)} / ||u||_{L^1_s L^2_t L^2_Y}`.
pub fn sigma_ratio(u: &SpaceTimeField, mu: &SigmaMeasure, opts: &RestrictOptions) -> Result<f64, RestrictionError> {
    Ok(restrict_sigma(u, mu, opts)?.norm() / u.strichartz_norm(2.0, 2.0, 1.0)?)
}

/// Empirical ratios on a grid and on its refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioScan {
    pub seed: u64,
    pub coarse_grid: ScanGrid,
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    pub sup_coarse: f64,
    pub sup_fine: f64,
    /// `max |fine / coarse - 1|` over samples.
    pub max_relative_change: f64,
}

impl RatioScan {
    fn from_pairs(seed: u64, coarse_grid: ScanGrid, pairs: Vec<(f64, f64)>) -> Self {
        let (coarse, fine): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let sup = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        let max_relative_change = coarse
            .iter()
            .zip(&fine)
            .map(|(c, f)| (f / c - 1.0).abs())
            .fold(0.0, f64::max);
        Self {
            seed,
            coarse_grid,
            sup_coarse: sup(&coarse),
            sup_fine: sup(&fine),
            coarse,
            fine,
            max_relative_change,
        }
    }
}

pub fn sphere_ratio_scan(
    family: &PacketFamily,
    samples: usize,
    mu: &SphereMeasure,
    d: usize,
    coarse: ScanGrid,
) -> Result<RatioScan, RestrictionError> {
    let fine = coarse.refined();
    let (gc, gf) = (coarse.grid(d), fine.grid(d));
    let pairs = family
        .samples(samples)
        .iter()
        .map(|p: &GaussianPacket| {
            Ok((
                sphere_ratio(&p.field(&gc), mu, &coarse.options())?,
                sphere_ratio(&p.field(&gf), mu, &fine.options())?,
            ))
        })
        .collect::<Result<Vec<_>, RestrictionError>>()?;
    Ok(RatioScan::from_pairs(family.seed, coarse, pairs))
}

/// Ranges of the time envelopes in a space-time scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRanges {
    pub tc: (f64, f64),
    pub tau: (f64, f64),
    pub omega: (f64, f64),
    pub times: TimeGrid,
}

pub fn sigma_ratio_scan(
    family: &PacketFamily,
    samples: usize,
    envelope: &EnvelopeRanges,
    mu: &SigmaMeasure,
    d: usize,
    coarse: ScanGrid,
) -> Result<RatioScan, RestrictionError> {
    let fine = coarse.refined();
    let (gc, gf) = (coarse.grid(d), fine.grid(d));
    let t = &envelope.times;
    let pairs = family
        .spacetime_samples(samples, envelope.tc, envelope.tau, envelope.omega)
        .iter()
        .map(|p: &SpaceTimePacket| {
            Ok((
                sigma_ratio(&p.field(&gc, t), mu, &coarse.options())?,
                sigma_ratio(&p.field(&gf, t), mu, &fine.options())?,
            ))
        })
        .collect::<Result<Vec<_>, RestrictionError>>()?;
    Ok(RatioScan::from_pairs(family.seed, coarse, pairs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equation {
    Schrodinger,
    Wave,
}

/// Membership in the admissible set of Strichartz pairs, naming the first violated constraint.
pub fn admissible(eq: Equation, p: f64, q: f64, d: usize) -> Result<(), RestrictionError> {
    let fail = |c: &str| {
        Err(RestrictionError::Inadmissible {
            p,
            q,
            constraint: c.into(),
        })
    };
    if !(p >= 2.0) {
        return fail("2 <= p");
    }
    if !(q >= p) {
        return fail("p <= q");
    }
    let half_q = d as f64 + 1.0;
    let (lhs, rhs, name) = match eq {
        Equation::Schrodinger => (2.0 / q + 2.0 * d as f64 / p, half_q, "2/q + 2d/p <= Q/2"),
        Equation::Wave => (1.0 / q + 2.0 * d as f64 / p, half_q - 1.0, "1/q + 2d/p <= Q/2 - 1"),
    };
    if lhs > rhs + 1e-12 {
        return fail(name);
    }
    Ok(())
}

/// Sobolev order of `u_0` on the right of the Strichartz estimate.
pub fn sobolev_index(eq: Equation, p: f64, q: f64, d: usize) -> f64 {
    let half_q = d as f64 + 1.0;
    match eq {
        Equation::Schrodinger => half_q - 2.0 / q - 2.0 * d as f64 / p,
        Equation::Wave => half_q - 1.0 / q - 2.0 * d as f64 / p,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrichartzSpec {
    pub equation: Equation,
    pub p: f64,
    pub q: f64,
    pub ladder: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub grid: Grid,
    pub times: TimeGrid,
    pub l_max: usize,
    /// Data are localized to the ring `mu in [scale^2/4, scale^2]`.
    pub ring_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrichartzScan {
    pub equation: Equation,
    pub p: f64,
    pub q: f64,
    pub sobolev_index: f64,
    pub seed: u64,
    pub ladder: Vec<f64>,
    /// `ratios[sample][rung]`.
    pub ratios: Vec<Vec<f64>>,
    pub max_ratio: f64,
    /// `max |ratio(Lambda) / ratio(ladder[0]) - 1|`.
    pub flatness: f64,
}

/// Packet spectrum cut to the ring; the bins next to `lambda = 0` are
/// dropped so that the wave split is defined.
fn ring_datum(p: &GaussianPacket, grid: &Grid, l_max: usize, scale: f64) -> SpectralField {
    let w = Localizer::Ring { scale };
    let d = grid.d;
    let near = 1.5 * grid.s.lambda_step();
    SpectralField::from_fn(grid.clone(), l_max, |ell, l| {
        if l.abs() < near {
            Complex64::new(0.0, 0.0)
        } else {
            p.spectrum(ell, l, d) * w.weight(eigenvalue(ell as u64, l, d))
        }
    })
}

fn rescaled(theta: &SpectralField, a: f64, factor: f64) -> SpectralField {
    let mut out = theta.clone();
    out.grid = theta.grid.dilated(a);
    for v in &mut out.values {
        *v *= factor;
    }
    out
}

/// LHS/RHS of the Strichartz estimate over a seeded family of ring-localized
/// data and a dilation ladder.
///
/// Rung `Lambda` uses the data `u_0 o delta_Lambda` (and `Lambda u_1 o delta_Lambda`)
/// on the dilated grid and the time window shrunk by `Lambda^2` (Schrodinger)
/// or `Lambda` (wave), so the ratio is unchanged by scaling.
pub fn strichartz_scan(spec: &StrichartzSpec) -> Result<StrichartzScan, RestrictionError> {
    let d = spec.grid.d;
    admissible(spec.equation, spec.p, spec.q, d)?;
    let sigma = sobolev_index(spec.equation, spec.p, spec.q, d);
    let qd = spec.grid.homogeneous_dim();
    let family = PacketFamily {
        seed: spec.seed,
        a: (0.5, 2.0),
        sigma: (1.0, 3.0),
        kappa: (-3.0, 3.0),
        s0: (-1.0, 1.0),
    };
    let draws = family.samples(2 * spec.samples);
    let mut ratios = Vec::with_capacity(spec.samples);
    for k in 0..spec.samples {
        let theta0 = ring_datum(&draws[2 * k], &spec.grid, spec.l_max, spec.ring_scale);
        let theta1 = ring_datum(&draws[2 * k + 1], &spec.grid, spec.l_max, spec.ring_scale);
        let row = spec
            .ladder
            .iter()
            .map(|&lam| {
                let t0 = rescaled(&theta0, lam, lam.powf(-qd));
                let (u, rhs) = match spec.equation {
                    Equation::Schrodinger => {
                        let times = spec.times.scaled(lam.powi(-2));
                        let slices = times
                            .nodes
                            .par_iter()
                            .map(|&t| inverse(&schrodinger_phase(&t0, t)))
                            .collect();
                        (
                            SpaceTimeField::from_slices(times, slices)?,
                            sobolev_norm_spectral(&t0, sigma)?,
                        )
                    }
                    Equation::Wave => {
                        let t1 = rescaled(&theta1, lam, lam.powf(1.0 - qd));
                        let times = spec.times.scaled(1.0 / lam);
                        let b = wave_branches(&t0, &t1)?;
                        let slices = times.nodes.par_iter().map(|&t| inverse(&wave_at(&b, t).0)).collect();
                        let rhs = sobolev_norm_spectral(&t0, sigma)? + sobolev_norm_spectral(&t1, sigma - 1.0)?;
                        (SpaceTimeField::from_slices(times, slices)?, rhs)
                    }
                };
                Ok(u.strichartz_norm(spec.p, spec.q, f64::INFINITY)? / rhs)
            })
            .collect::<Result<Vec<f64>, RestrictionError>>()?;
        ratios.push(row);
    }
    let max_ratio = ratios.iter().flatten().copied().fold(0.0, f64::max);
    let flatness = ratios
        .iter()
        .flat_map(|r| r.iter().map(move |v| (v / r[0] - 1.0).abs()))
        .fold(0.0, f64::max);
    Ok(StrichartzScan {
        equation: spec.equation,
        p: spec.p,
        q: spec.q,
        sobolev_index: sigma,
        seed: spec.seed,
        ladder: spec.ladder.clone(),
        ratios,
        max_ratio,
        flatness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::s_translate;
    use crate::htransform::{forward_at, plancherel_constant_d};
    use crate::propagators::schrodinger_evolve;

    fn one(_: usize, _: f64) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn sphere_total_mass() {
        let v = sphere_pair(one, &SphereMeasure::unit(), 1, 10_000);
        assert!((v.value.re - PI * PI / 4.0).abs() < 1e-6, "{}", v.value);
        // without the tail the partial sum misses by about 1/(2 L)
        assert!((v.partial.re - PI * PI / 4.0).abs() > 1e-5);
        assert!(v.tail_bound > 0.0 && v.tail_bound < 1e-4);
        assert!(v.checked(1e-6).is_err());
    }

    #[test]
    fn sphere_odd_symbol_vanishes() {
        let v = sphere_pair(
            |ell, l| Complex64::new(l * (ell as f64 + 1.0), 0.0),
            &SphereMeasure::unit(),
            2,
            200,
        );
        assert!(v.value.norm() < 1e-15);
    }

    #[test]
    fn sphere_radius_scaling() {
        for d in [1, 2] {
            let a = sphere_pair(one, &SphereMeasure::new(4.0).unwrap(), d, 500).value.re;
            let b = sphere_pair(one, &SphereMeasure::unit(), d, 500).value.re;
            assert!((a / b - 4f64.powi(d as i32)).abs() < 1e-12 * a);
        }
        assert!(SphereMeasure::new(0.0).is_err());
    }

    #[test]
    fn sphere_pair_stable_under_doubling() {
        let p = GaussianPacket::new(1.0, 2.0, 0.5);
        for d in [1, 2] {
            let th = |ell: usize, l: f64| p.spectrum(ell, l, d);
            let a = sphere_pair(th, &SphereMeasure::unit(), d, 500).value;
            let b = sphere_pair(th, &SphereMeasure::unit(), d, 1000).value;
            assert!((a - b).norm() < 1e-6 * b.norm(), "d={d}: {a} {b}");
            let c = sphere_pair(one, &SphereMeasure::unit(), d, 500).value;
            let e = sphere_pair(one, &SphereMeasure::unit(), d, 1000).value;
            assert!((c - e).norm() < 1e-6 * e.norm());
        }
    }

    #[test]
    fn g_at_origin_and_bounded() {
        let g0 = g_function(0.0, 0.0, 1, 256);
        assert!((g0.value.re - 0.25).abs() < 1e-6, "{}", g0.value);
        for &r in &[0.0, 0.3, 1.0, 2.5, 6.0] {
            for &s in &[-20.0, -1.0, 0.0, 0.7, 5.0] {
                let g = g_function(r, s, 1, 256).value.re;
                assert!(g.is_finite() && g.abs() <= 0.25 + 1e-9, "{r} {s} {g}");
            }
        }
        let g0 = g_function(0.0, 0.0, 2, 256).value.re;
        let g1 = g_function(1.5, 3.0, 2, 256).value.re;
        assert!(g1.abs() <= g0);
    }

    #[test]
    fn g_scaling_identity() {
        for d in [1, 2] {
            for &r in &[0.5, 2.0, 4.0] {
                for &(rho, s) in &[(0.0, 0.0), (0.4, 1.3), (1.7, -2.2), (3.0, 6.0)] {
                    let a = g_r(rho, s, r, d, 128).value.re;
                    let b = r.powi(d as i32) * g_function(r.sqrt() * rho, r * s, d, 128).value.re;
                    assert!((a - b).abs() < 1e-10, "{d} {r} {rho} {s}: {a} {b}");
                }
            }
        }
    }

    #[test]
    fn g_pairs_against_sphere_measure() {
        // <d sigma, theta_f> = plancherel_constant(d) int f G for real radial f.
        let p = GaussianPacket::new(1.0, 2.0, 0.0);
        let g = Grid::new(1, 40, 7.0, 64, 16.0);
        let f = p.field(&g);
        let gf = RadialField::from_fn(g.clone(), |r, s| g_function(r, s, 1, 200).value);
        let lhs = sphere_pair(|ell, l| p.spectrum(ell, l, 1), &SphereMeasure::unit(), 1, 200).value;
        let rhs = f.inner(&gf).unwrap() * plancherel_constant(1);
        assert!((lhs - rhs).norm() < 1e-6 * lhs.norm(), "{lhs} {rhs}");
    }

    fn packet_grid(d: usize) -> Grid {
        Grid::new(d, 96, 10.0, 256, 32.0)
    }

    #[test]
    fn sphere_restriction_matches_closed_form() {
        let p = GaussianPacket {
            a: 1.0,
            sigma: 3.0,
            kappa: 0.4,
            s0: 0.5,
            phase: 0.3,
        };
        for d in [1, 2] {
            let f = p.field(&packet_grid(d));
            let r = restrict_sphere(
                &f,
                &SphereMeasure::new(2.0).unwrap(),
                &RestrictOptions {
                    l_max: 24,
                    ..Default::default()
                },
            )
            .unwrap();
            let scale = p.spectrum(0, 2.0 / d as f64, d).norm();
            for (pt, v) in r.points.iter().zip(&r.values) {
                let want = p.spectrum(pt.ell, pt.lambda, d);
                assert!((v - want).norm() < 1e-7 * scale, "d={d} {pt:?}: {v} {want}");
            }
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let g = Grid::new(1, 16, 6.0, 32, 8.0);
        let r = restrict_sphere(
            &RadialField::zeros(g.clone()),
            &SphereMeasure::unit(),
            &RestrictOptions::default(),
        )
        .unwrap();
        assert_eq!(r.norm(), 0.0);
        assert_eq!(sphere_extension(&r.zeros_like(), &g).max_abs(), 0.0);
        let u = SpaceTimeField::from_slices(TimeGrid::uniform(0.0, 1.0, 3), vec![RadialField::zeros(g); 3]).unwrap();
        let mu = SigmaMeasure::new(SigmaVariant::Schrodinger);
        assert_eq!(
            restrict_sigma(&u, &mu, &RestrictOptions::default()).unwrap().norm(),
            0.0
        );
    }

    #[test]
    fn restriction_refuses_edge_mass() {
        let g = Grid::new(1, 16, 6.0, 32, 4.0);
        let f = GaussianPacket::new(1.0, 4.0, 0.0).field(&g);
        assert!(matches!(
            restrict_sphere(&f, &SphereMeasure::unit(), &RestrictOptions::default()),
            Err(RestrictionError::Truncation { .. })
        ));
    }

    fn random_surface(r: &SurfaceValues, seed: u64) -> SurfaceValues {
        let mut v = r.clone();
        for (k, x) in v.values.iter_mut().enumerate() {
            let t = (k as f64 + 1.0) * (seed as f64 + 0.618);
            *x = Complex64::new(t.sin(), (1.7 * t).cos());
        }
        v
    }

    #[test]
    fn sphere_duality() {
        let g = Grid::new(1, 32, 7.0, 64, 16.0);
        let f = GaussianPacket {
            a: 0.8,
            sigma: 2.0,
            kappa: 0.7,
            s0: 0.3,
            phase: 1.0,
        }
        .field(&g);
        let r = restrict_sphere(
            &f,
            &SphereMeasure::new(1.5).unwrap(),
            &RestrictOptions {
                l_max: 12,
                ..Default::default()
            },
        )
        .unwrap();
        for seed in 0..3 {
            let v = random_surface(&r, seed);
            let lhs = r.pair(&v).unwrap();
            let rhs = f.inner(&sphere_extension(&v, &g)).unwrap() * plancherel_constant(1);
            assert!((lhs - rhs).norm() < 1e-8 * lhs.norm(), "{lhs} {rhs}");
        }
    }

    /// A datum built from its spectrum: low `ell`, `|lambda| >= 1/4`, so its
    /// kernels decay well inside the radial box and `forward` recovers `theta0`.
    fn localized_datum(g: &Grid) -> (RadialField, SpectralField) {
        let p = GaussianPacket {
            a: 1.0,
            sigma: 3.0,
            kappa: 0.8,
            s0: 0.0,
            phase: 0.0,
        };
        let theta0 = SpectralField::from_fn(g.clone(), 32, |ell, l| {
            if ell <= 4 && l.abs() >= 0.25 {
                p.spectrum(ell, l, 1) * ball_cutoff(eigenvalue(ell as u64, l, 1) / 16.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        (inverse(&theta0), theta0)
    }

    #[test]
    fn free_evolution_restricts_to_initial_spectrum() {
        let g = Grid::new(1, 64, 12.0, 128, 24.0);
        let (u0, theta0) = localized_datum(&g);
        let times = TimeGrid::uniform(0.0, 0.5, 21);
        let u = schrodinger_evolve(&u0, &times, 32);
        let mu = SigmaMeasure::new(SigmaVariant::Schrodinger).with_window(32.0);
        let r = restrict_sigma_grid(
            &u,
            &mu,
            &RestrictOptions {
                l_max: 32,
                edge_tolerance: 1e-4,
            },
        )
        .unwrap();
        let scale = theta0.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let m_of = |l: f64| ((l / g.s.lambda_step()).round() as i64 + (g.n_s() / 2) as i64) as usize;
        for (p, v) in r.points.iter().zip(&r.values) {
            let want = theta0.at(p.ell, m_of(p.lambda)) * 0.5;
            assert!((v - want).norm() < 1e-6 * scale, "{p:?}");
        }
    }

    #[test]
    fn extension_of_initial_spectrum_is_free_evolution() {
        let g = Grid::new(1, 64, 12.0, 128, 24.0);
        let (u0, theta0) = localized_datum(&g);
        let times = TimeGrid::uniform(0.0, 0.3, 4);
        let u = schrodinger_evolve(&u0, &times, 32);
        // window equal to one on the spectral support (mu <= 16)
        let mu = SigmaMeasure::new(SigmaVariant::Schrodinger).with_window(32.0);
        let mut r = restrict_sigma_grid(
            &u,
            &mu,
            &RestrictOptions {
                l_max: 32,
                edge_tolerance: 1e-4,
            },
        )
        .unwrap();
        let m_of = |l: f64| ((l / g.s.lambda_step()).round() as i64 + (g.n_s() / 2) as i64) as usize;
        for (p, v) in r.points.iter().zip(r.values.iter_mut()) {
            *v = theta0.at(p.ell, m_of(p.lambda));
        }
        let e = sigma_extension(&r, &g, &times).unwrap();
        for n in 0..times.len() {
            let want = u.slice(n).scale(Complex64::new(1.0 / (2.0 * PI), 0.0));
            let err = e.slice(n).relative_l2_error(&want).unwrap();
            assert!(err < 1e-5, "t={}: {err}", times.nodes[n]);
        }
    }

    fn small_spacetime(g: &Grid, times: &TimeGrid) -> SpaceTimeField {
        let p = SpaceTimePacket {
            space: GaussianPacket {
                a: 1.2,
                sigma: 2.0,
                kappa: 0.1,
                s0: 0.2,
                phase: 0.4,
            },
            tc: 1.0,
            tau: 0.8,
            omega: 0.3,
        };
        p.field(g, times)
    }

    #[test]
    fn sigma_duality_both_modes() {
        let g = Grid::new(1, 24, 7.0, 48, 14.0);
        let times = TimeGrid::uniform(0.0, 2.0, 9);
        let u = small_spacetime(&g, &times);
        let opts = RestrictOptions {
            l_max: 8,
            edge_tolerance: 1e-6,
        };
        for variant in [
            SigmaVariant::Schrodinger,
            SigmaVariant::WavePlus,
            SigmaVariant::WaveMinus,
        ] {
            let mu = SigmaMeasure {
                variant,
                window_scale: 1.5,
                alpha_nodes: 12,
            };
            for r in [
                restrict_sigma(&u, &mu, &opts).unwrap(),
                restrict_sigma_grid(&u, &mu, &opts).unwrap(),
            ] {
                let v = random_surface(&r, 5);
                let lhs = r.pair(&v).unwrap();
                let rhs =
                    spacetime_inner(&u, &sigma_extension(&v, &g, &times).unwrap()).unwrap() * plancherel_constant_d(1);
                assert!((lhs - rhs).norm() < 1e-8 * lhs.norm(), "{variant:?}: {lhs} {rhs}");
            }
        }
    }

    #[test]
    fn off_grid_agrees_with_direct_transform() {
        let g = Grid::new(1, 32, 7.0, 64, 14.0);
        let times = TimeGrid::uniform(0.0, 2.0, 9);
        let u = small_spacetime(&g, &times);
        let mu = SigmaMeasure {
            variant: SigmaVariant::Schrodinger,
            window_scale: 1.0,
            alpha_nodes: 6,
        };
        let r = restrict_sigma(
            &u,
            &mu,
            &RestrictOptions {
                l_max: 4,
                edge_tolerance: 1e-6,
            },
        )
        .unwrap();
        let tw = times.trapezoid_weights();
        for (p, v) in r.points.iter().zip(&r.values).step_by(7) {
            let mut want = Complex64::new(0.0, 0.0);
            for (n, (&t, &w)) in times.nodes.iter().zip(&tw).enumerate() {
                want += forward_at(&u.slice(n), p.lambda, 4).unwrap()[p.ell] * Complex64::from_polar(w, -t * p.alpha);
            }
            assert!((v - want).norm() < 1e-12 * want.norm().max(1e-3), "{p:?}");
        }
    }

    /// Direct double sum-integral of the paraboloid measure at `rho = 0`,
    /// where the radial kernel is the multiplicity.
    fn g_sigma_direct(t: f64, s: f64, d: usize, a: f64, l_max: usize) -> Complex64 {
        let (x, w) = gauss_legendre(200, 0.0, a);
        let mu = SigmaMeasure::new(SigmaVariant::Schrodinger).with_window(a);
        let base: Vec<Complex64> = x
            .iter()
            .zip(&w)
            .map(|(&al, &wa)| Complex64::from_polar(wa * al.powi(d as i32) * mu.window(al), t * al))
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for ell in (0..=l_max).rev() {
            let c = SigmaMeasure::c(ell, d);
            let k = mult(ell, d) * c.powi(d as i32 + 1);
            let mut line = Complex64::new(0.0, 0.0);
            for (&al, b) in x.iter().zip(&base) {
                line += b * (2.0 * (s * al * c).cos());
            }
            acc += line * k;
        }
        acc * (2f64.powi(d as i32 - 2) / PI.powi(d as i32 + 2))
    }

    #[test]
    fn g_sigma_matches_direct_measure() {
        let mu = SigmaMeasure::new(SigmaVariant::Schrodinger);
        for &(t, s, d) in &[(0.0, 0.0, 1), (1.5, 2.0, 1), (-0.7, 0.5, 2)] {
            let v = g_sigma(t, 0.0, s, d, &mu, 256, 1e-9).unwrap();
            let want = g_sigma_direct(t, s, d, 1.0, 200_000);
            assert!((v - want).norm() < 1e-5 * want.norm(), "{t} {s} {d}: {v} {want}");
        }
    }

    #[test]
    fn g_sigma_off_axis_against_partial_sums() {
        // away from rho = 0, compare the untailed value with the same truncated double sum
        let mu = SigmaMeasure::new(SigmaVariant::Schrodinger).with_window(2.0);
        let (t, rho, s, l_max) = (0.8, 1.3, -1.0, 40);
        let v = g_sigma_impl(t, rho, s, 1, &mu, l_max, 1e-10, false).unwrap();
        let mut want = Complex64::new(0.0, 0.0);
        let mut buf = Vec::new();
        for ell in 0..=l_max {
            let c = SigmaMeasure::c(ell, 1);
            let line = composite_complex(
                |al| {
                    let k = kernel(ell, al * c, rho, 1, &mut buf);
                    Complex64::from_polar(2.0 * (s * al * c).cos() * k * al * mu.window(al), t * al)
                },
                2.0,
            );
            want += line * c * c;
        }
        want *= 1.0 / (2.0 * PI.powi(3));
        assert!((v - want).norm() < 1e-8 * want.norm(), "{v} {want}");
    }

    fn composite_complex<F: FnMut(f64) -> Complex64>(mut f: F, b: f64) -> Complex64 {
        let (x, w) = gauss_legendre(24, 0.0, b / 40.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..40 {
            let off = p as f64 * b / 40.0;
            for (xi, wi) in x.iter().zip(&w) {
                acc += f(off + xi) * *wi;
            }
        }
        acc
    }

    #[test]
    fn g_sigma_trivial_cases() {
        let mu = SigmaMeasure::new(SigmaVariant::Schrodinger);
        assert_eq!(
            g_sigma(0.3, 0.2, 0.1, 1, &mu.with_window(0.0), 64, 1e-8).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        for &(t, rho, s) in &[(0.7, 0.5, 1.2), (2.0, 1.5, -3.0)] {
            let a = g_sigma(t, rho, s, 1, &mu, 64, 1e-10).unwrap();
            let b = g_sigma(-t, rho, -s, 1, &mu, 64, 1e-10).unwrap();
            assert!((a - b.conj()).norm() < 1e-14, "{a} {b}");
        }
        assert!(g_sigma(0.0, 0.0, 0.0, 1, &SigmaMeasure::new(SigmaVariant::WavePlus), 8, 1e-8).is_err());
    }

    #[test]
    fn ratios_invariant_under_vertical_translation() {
        let g = Grid::new(1, 32, 7.0, 64, 16.0);
        let f = GaussianPacket {
            a: 0.8,
            sigma: 2.0,
            kappa: 0.7,
            s0: 0.0,
            phase: 1.0,
        }
        .field(&g);
        let shifted = s_translate(&f, 3.0 * g.s.step());
        let opts = RestrictOptions {
            l_max: 16,
            edge_tolerance: 1e-6,
        };
        let mu = SphereMeasure::unit();
        let (a, b) = (
            sphere_ratio(&f, &mu, &opts).unwrap(),
            sphere_ratio(&shifted, &mu, &opts).unwrap(),
        );
        assert!((a / b - 1.0).abs() < 1e-10, "{a} {b}");

        let times = TimeGrid::uniform(0.0, 2.0, 9);
        let u = small_spacetime(&g, &times);
        let slices = (0..times.len())
            .map(|n| s_translate(&u.slice(n), -5.0 * g.s.step()))
            .collect();
        let v = SpaceTimeField::from_slices(times, slices).unwrap();
        let mu = SigmaMeasure::new(SigmaVariant::Schrodinger);
        let (a, b) = (
            sigma_ratio(&u, &mu, &opts).unwrap(),
            sigma_ratio(&v, &mu, &opts).unwrap(),
        );
        assert!((a / b - 1.0).abs() < 1e-10, "{a} {b}");
    }

    #[test]
    fn sphere_ratio_bounded_across_horizontal_dilations() {
        let mut ratios = Vec::new();
        for k in 0..=8 {
            let a = 10f64.powf(-2.0 + 0.5 * k as f64);
            let width = 1.0 / a.sqrt();
            let g = Grid::new(1, 96, 8.0 * width, 128, 20.0);
            let f = GaussianPacket {
                a,
                sigma: 2.0,
                kappa: 0.5,
                s0: 0.0,
                phase: 0.0,
            }
            .field(&g);
            ratios.push(
                sphere_ratio(
                    &f,
                    &SphereMeasure::unit(),
                    &RestrictOptions {
                        l_max: 256,
                        edge_tolerance: 1e-6,
                    },
                )
                .unwrap(),
            );
        }
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        assert!(hi.is_finite() && hi < 10.0, "{ratios:?}");
    }

    #[test]
    fn ratio_scan_refinement_small() {
        let family = PacketFamily {
            seed: 3,
            a: (0.5, 2.0),
            sigma: (1.0, 3.0),
            kappa: (-1.5, 1.5),
            s0: (-1.0, 1.0),
        };
        let coarse = ScanGrid {
            n_rho: 32,
            r_max: 8.0,
            n_s: 64,
            s_half_width: 16.0,
            l_max: 16,
        };
        let scan = sphere_ratio_scan(&family, 6, &SphereMeasure::unit(), 1, coarse).unwrap();
        assert!(scan.max_relative_change < 0.05, "{scan:?}");
    }

    #[test]
    fn admissibility_table() {
        use Equation::*;
        let table = [
            (Schrodinger, 1, 2.0, 2.0, true),
            (Schrodinger, 1, 2.0, f64::INFINITY, true),
            (Schrodinger, 1, 4.0, 4.0, true),
            (Schrodinger, 1, 3.0, 2.0, false),
            (Schrodinger, 1, 1.5, f64::INFINITY, false),
            (Schrodinger, 2, 2.0, 2.0, true),
            (Wave, 1, 2.0, 2.0, false),
            (Wave, 1, 2.0, f64::INFINITY, true),
            (Wave, 1, 3.0, 3.0, true),
            (Wave, 1, 2.0, 8.0, false),
            (Wave, 2, 2.0, 2.0, false),
            (Wave, 2, 2.0, f64::INFINITY, true),
            (Wave, 2, 4.0, 4.0, true),
        ];
        for (eq, d, p, q, ok) in table {
            assert_eq!(admissible(eq, p, q, d).is_ok(), ok, "{eq:?} d={d} ({p},{q})");
        }
        match admissible(Wave, 2.0, 2.0, 1) {
            Err(RestrictionError::Inadmissible { constraint, .. }) => assert!(constraint.contains("1/q")),
            other => panic!("{other:?}"),
        }
        assert_eq!(sobolev_index(Schrodinger, 2.0, 2.0, 1), 0.0);
        assert_eq!(sobolev_index(Wave, 2.0, f64::INFINITY, 1), 1.0);
    }

    fn strichartz_spec(equation: Equation, p: f64, q: f64) -> StrichartzSpec {
        StrichartzSpec {
            equation,
            p,
            q,
            ladder: vec![1.0, 2.0, 4.0],
            samples: 3,
            seed: 11,
            grid: Grid::new(1, 32, 8.0, 64, 16.0),
            times: TimeGrid::uniform(0.0, 1.0, 9),
            l_max: 16,
            ring_scale: 3.0,
        }
    }

    #[test]
    fn strichartz_ratio_scale_invariant() {
        for (eq, p, q) in [
            (Equation::Schrodinger, 2.0, 2.0),
            (Equation::Schrodinger, 2.0, f64::INFINITY),
            (Equation::Wave, 2.0, f64::INFINITY),
        ] {
            let scan = strichartz_scan(&strichartz_spec(eq, p, q)).unwrap();
            assert!(scan.flatness < 1e-6, "{eq:?} ({p},{q}): {}", scan.flatness);
            assert!(scan.max_ratio.is_finite() && scan.max_ratio > 0.0);
        }
        assert!(strichartz_scan(&strichartz_spec(Equation::Wave, 2.0, 2.0)).is_err());
    }

    #[test]
    fn extension_sup_norm_finite_for_unit_data() {
        let g = Grid::new(1, 24, 7.0, 48, 14.0);
        let times = TimeGrid::uniform(0.0, 2.0, 5);
        let mu = SigmaMeasure {
            variant: SigmaVariant::Schrodinger,
            window_scale: 1.0,
            alpha_nodes: 8,
        };
        let u = small_spacetime(&g, &times);
        let r = restrict_sigma(
            &u,
            &mu,
            &RestrictOptions {
                l_max: 8,
                edge_tolerance: 1e-6,
            },
        )
        .unwrap();
        let mut v = random_surface(&r, 2);
        let n = v.norm_sqr_partial().sqrt();
        v.values.iter_mut().for_each(|x| *x /= n);
        v.tail = 0.0;
        let e = sigma_extension(&v, &g, &times).unwrap();
        let sup = e.strichartz_norm(f64::INFINITY, f64::INFINITY, f64::INFINITY).unwrap();
        assert!(sup.is_finite() && sup > 0.0);
    }
}
