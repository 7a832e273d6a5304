//! Sampled radial and space-time fields, their mixed Lebesgue norms, and the
//! two exact symmetries (dilation, vertical translation) that the transforms
//! are checked against.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Grid, TimeGrid};
use crate::quad::pairwise_sum;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grids differ")]
    GridMismatch,
    #[error("expected {expected} samples, got {got}")]
    Shape { expected: usize, got: usize },
}

/// Which variable carries the outer norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormOrder {
    /// `L^p_Y L^r_s`: `s`-norm inside, `Y`-norm outside.
    YOuter,
    /// `L^r_s L^p_Y`: `Y`-norm inside, `s`-norm outside.
    SOuter,
}

fn check_exponent(p: f64) -> Result<(), FieldError> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(FieldError::InvalidArgument(format!(
            "exponent must lie in [1, inf], got {p}"
        )))
    }
}

/// `(sum w |v|^p)^{1/p}`, or `max |v|` when `p` is infinite.
fn weighted_lp(w: impl Iterator<Item = f64>, v: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p.is_infinite() {
        return v.fold(0.0, f64::max);
    }
    let terms: Vec<f64> = w.zip(v).map(|(w, v)| w * v.powf(p)).collect();
    pairwise_sum(&terms).powf(1.0 / p)
}

/// A radial function on `H^d` sampled on `Grid`, stored row-major as
/// `values[i * n_s + j] = f(rho_i, s_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl RadialField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self, FieldError> {
        let expected = grid.n_rho() * grid.n_s();
        if values.len() != expected {
            return Err(FieldError::Shape {
                expected,
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.n_rho() * grid.n_s();
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_fn<F: Fn(f64, f64) -> Complex64 + Sync>(grid: Grid, f: F) -> Self {
        let s = grid.s.nodes();
        let values = grid
            .rho
            .nodes
            .par_iter()
            .flat_map_iter(|&r| s.iter().map(|&sj| f(r, sj)).collect::<Vec<_>>())
            .collect();
        Self { grid, values }
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.n_s() + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        let n = self.grid.n_s();
        &self.values[i * n..(i + 1) * n]
    }

    /// `L^p_Y L^r_s` or `L^r_s L^p_Y` norm with Haar (Lebesgue) measure.
    pub fn mixed_norm(&self, p_y: f64, r_s: f64, order: NormOrder) -> Result<f64, FieldError> {
        check_exponent(p_y)?;
        check_exponent(r_s)?;
        let yw = self.grid.y_weights();
        let h = self.grid.s.step();
        let (nr, ns) = (self.grid.n_rho(), self.grid.n_s());
        Ok(match order {
            NormOrder::YOuter => {
                let inner: Vec<f64> = (0..nr)
                    .map(|i| weighted_lp(std::iter::repeat(h), self.row(i).iter().map(|v| v.norm()), r_s))
                    .collect();
                weighted_lp(yw.iter().copied(), inner.into_iter(), p_y)
            }
            NormOrder::SOuter => {
                let inner: Vec<f64> = (0..ns)
                    .map(|j| weighted_lp(yw.iter().copied(), (0..nr).map(|i| self.at(i, j).norm()), p_y))
                    .collect();
                weighted_lp(std::iter::repeat(h), inner.into_iter(), r_s)
            }
        })
    }

    /// `L^p(H^d)` norm.
    pub fn lp_norm(&self, p: f64) -> Result<f64, FieldError> {
        self.mixed_norm(p, p, NormOrder::YOuter)
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).map(|v| v.re.sqrt()).unwrap_or(f64::NAN)
    }

    /// `(f | g) = int f conj(g)`.
    pub fn inner(&self, other: &Self) -> Result<Complex64, FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        let yw = self.grid.y_weights();
        let h = self.grid.s.step();
        let ns = self.grid.n_s();
        let mut re = Vec::with_capacity(self.values.len());
        let mut im = Vec::with_capacity(self.values.len());
        for (k, (a, b)) in self.values.iter().zip(&other.values).enumerate() {
            let v = a * b.conj() * (yw[k / ns] * h);
            re.push(v.re);
            im.push(v.im);
        }
        Ok(Complex64::new(pairwise_sum(&re), pairwise_sum(&im)))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self {
            grid: self.grid.clone(),
            values,
        })
    }

    /// `||f - g||_2 / ||g||_2`.
    pub fn relative_l2_error(&self, reference: &Self) -> Result<f64, FieldError> {
        Ok(self.sub(reference)?.l2_norm() / reference.l2_norm())
    }

    /// `f o delta_a` without interpolation: the same samples on the dilated grid.
    pub fn dilated_exact(&self, a: f64) -> Self {
        Self {
            grid: self.grid.dilated(a),
            values: self.values.clone(),
        }
    }
}

/// FFT in `s` with the centered spectral layout used throughout.
pub(crate) mod sfft {
    use super::*;

    fn sign(k: i64) -> f64 {
        if k.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `F[m] = h sum_j e^{-i s_j lambda_m} f_j` for every row of `data` (length `n` each).
    pub fn forward_rows(data: &[Complex64], n: usize, h: f64) -> Vec<Complex64> {
        let fft = FftPlanner::new().plan_fft_forward(n);
        let half = (n / 2) as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
        out.par_chunks_mut(n).zip(data.par_chunks(n)).for_each(|(o, row)| {
            let mut buf = row.to_vec();
            fft.process(&mut buf);
            for (m, om) in o.iter_mut().enumerate() {
                let k = m as i64 - half;
                *om = buf[k.rem_euclid(n as i64) as usize] * (h * sign(k));
            }
        });
        out
    }

    /// Inverse of `forward_rows`: `f_j = (1/2S) sum_m e^{i s_j lambda_m} F[m]`.
    pub fn inverse_rows(data: &[Complex64], n: usize, half_width: f64) -> Vec<Complex64> {
        let fft = FftPlanner::new().plan_fft_inverse(n);
        let half = (n / 2) as i64;
        let c = 1.0 / (2.0 * half_width);
        let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
        out.par_chunks_mut(n).zip(data.par_chunks(n)).for_each(|(o, row)| {
            for (m, v) in row.iter().enumerate() {
                let k = m as i64 - half;
                o[k.rem_euclid(n as i64) as usize] = v * (c * sign(k));
            }
            fft.process(o);
        });
        out
    }
}

/// Vertical translation `(Y, s) -> f(Y, s + s0)`, applied as a spectral phase.
pub fn s_translate(f: &RadialField, s0: f64) -> RadialField {
    let g = &f.grid;
    let n = g.n_s();
    let lambdas = g.s.lambdas();
    let mut spec = sfft::forward_rows(&f.values, n, g.s.step());
    spec.par_chunks_mut(n).for_each(|row| {
        for (v, l) in row.iter_mut().zip(&lambdas) {
            *v *= Complex64::from_polar(1.0, l * s0);
        }
    });
    RadialField {
        grid: g.clone(),
        values: sfft::inverse_rows(&spec, n, g.s.half_width),
    }
}

/// Interpolation used in `rho` by `dilate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RhoInterp {
    /// Barycentric Lagrange interpolation through all Gauss–Legendre nodes.
    #[default]
    Spectral,
    /// Fritsch–Carlson monotone cubic, applied to real and imaginary parts.
    MonotoneCubic,
}

fn barycentric_matrix(nodes: &[f64], weights: &[f64], r_max: f64, targets: &[f64]) -> Vec<Vec<(usize, f64)>> {
    // Barycentric weights of Legendre points from the quadrature weights.
    let x: Vec<f64> = nodes.iter().map(|r| 2.0 * r / r_max - 1.0).collect();
    let v: Vec<f64> = x
        .iter()
        .zip(weights)
        .enumerate()
        .map(|(j, (xj, wj))| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            s * ((1.0 - xj * xj) * 2.0 * wj / r_max).sqrt()
        })
        .collect();
    targets
        .iter()
        .map(|&t| {
            if !(0.0..=r_max).contains(&t) {
                return Vec::new();
            }
            let xt = 2.0 * t / r_max - 1.0;
            if let Some(j) = x.iter().position(|&xj| xj == xt) {
                return vec![(j, 1.0)];
            }
            let c: Vec<f64> = x.iter().zip(&v).map(|(xj, vj)| vj / (xt - xj)).collect();
            let total: f64 = c.iter().sum();
            c.into_iter().enumerate().map(|(j, cj)| (j, cj / total)).collect()
        })
        .collect()
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    m
}

fn pchip_eval(x: &[f64], y: &[f64], m: &[f64], t: f64) -> f64 {
    let n = x.len();
    if t <= x[0] {
        return y[0] + m[0] * (t - x[0]);
    }
    let i = match x.binary_search_by(|v| v.total_cmp(&t)) {
        Ok(i) => return y[i],
        Err(i) => (i - 1).min(n - 2),
    };
    let h = x[i + 1] - x[i];
    let u = (t - x[i]) / h;
    let (h00, h10, h01, h11) = (
        (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u),
        u * (1.0 - u) * (1.0 - u),
        u * u * (3.0 - 2.0 * u),
        u * u * (u - 1.0),
    );
    h00 * y[i] + h10 * h * m[i] + h01 * y[i + 1] + h11 * h * m[i + 1]
}

/// `f o delta_a` on the same grid: trigonometric interpolation in `s`, the
/// chosen interpolant in `rho`. Points mapped outside the stored box read 0.
pub fn dilate(f: &RadialField, a: f64, interp: RhoInterp) -> Result<RadialField, FieldError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(FieldError::InvalidArgument(format!(
            "dilation factor must be positive, got {a}"
        )));
    }
    let g = &f.grid;
    let (nr, ns) = (g.n_rho(), g.n_s());
    let big_s = g.s.half_width;
    let lost = mapped_out_fraction(f, a);
    if lost > 0.01 {
        log::warn!(
            "dilation by {a} drops {:.2}% of the L2 mass outside the stored box",
            100.0 * lost
        );
    }

    // Stage 1: each stored row evaluated at a^2 s_j.
    let spec = sfft::forward_rows(&f.values, ns, g.s.step());
    let lambdas = g.s.lambdas();
    let targets: Vec<f64> = g.s.nodes().iter().map(|s| a * a * s).collect();
    let mut stage = vec![Complex64::new(0.0, 0.0); nr * ns];
    stage
        .par_chunks_mut(ns)
        .zip(spec.par_chunks(ns))
        .for_each(|(out, row)| {
            for (o, &t) in out.iter_mut().zip(&targets) {
                if t < -big_s || t >= big_s {
                    continue;
                }
                let mut acc = row[0] * (t * lambdas[0]).cos();
                let step = Complex64::from_polar(1.0, t * g.s.lambda_step());
                let mut ph = Complex64::from_polar(1.0, t * lambdas[1]);
                for v in &row[1..] {
                    acc += v * ph;
                    ph *= step;
                }
                *o = acc / (2.0 * big_s);
            }
        });

    // Stage 2: each column evaluated at a rho_i.
    let rt: Vec<f64> = g.rho.nodes.iter().map(|r| a * r).collect();
    let mut values = vec![Complex64::new(0.0, 0.0); nr * ns];
    match interp {
        RhoInterp::Spectral => {
            let mat = barycentric_matrix(&g.rho.nodes, &g.rho.weights, g.rho.r_max, &rt);
            values.par_chunks_mut(ns).zip(mat.par_iter()).for_each(|(out, coeffs)| {
                for &(k, c) in coeffs {
                    for (o, v) in out.iter_mut().zip(&stage[k * ns..(k + 1) * ns]) {
                        *o += v * c;
                    }
                }
            });
        }
        RhoInterp::MonotoneCubic => {
            let x = &g.rho.nodes;
            let cols: Vec<Vec<Complex64>> = (0..ns)
                .into_par_iter()
                .map(|j| {
                    let re: Vec<f64> = (0..nr).map(|i| stage[i * ns + j].re).collect();
                    let im: Vec<f64> = (0..nr).map(|i| stage[i * ns + j].im).collect();
                    let (mr, mi) = (pchip_slopes(x, &re), pchip_slopes(x, &im));
                    rt.iter()
                        .map(|&t| {
                            if t > g.rho.r_max {
                                Complex64::new(0.0, 0.0)
                            } else {
                                Complex64::new(pchip_eval(x, &re, &mr, t), pchip_eval(x, &im, &mi, t))
                            }
                        })
                        .collect()
                })
                .collect();
            for (j, col) in cols.iter().enumerate() {
                for (i, v) in col.iter().enumerate() {
                    values[i * ns + j] = *v;
                }
            }
        }
    }
    Ok(RadialField {
        grid: g.clone(),
        values,
    })
}

/// Fraction of `||f||_2^2` lying outside `delta_a` of the stored box, i.e. the
/// part of `f` that `dilate(f, a)` cannot represent.
pub fn mapped_out_fraction(f: &RadialField, a: f64) -> f64 {
    let g = &f.grid;
    let (rmax, smax) = (a * g.rho.r_max, a * a * g.s.half_width);
    let yw = g.y_weights();
    let s = g.s.nodes();
    let (mut out, mut total) = (0.0, 0.0);
    for (i, r) in g.rho.nodes.iter().enumerate() {
        for (j, sj) in s.iter().enumerate() {
            let m = yw[i] * f.at(i, j).norm_sqr();
            total += m;
            if *r > rmax || sj.abs() >= smax {
                out += m;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        out / total
    }
}

/// A radial space-time field, `values[(n * n_rho + i) * n_s + j] = u(t_n, rho_i, s_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub grid: Grid,
    pub times: TimeGrid,
    pub values: Vec<Complex64>,
}

impl SpaceTimeField {
    pub fn from_slices(times: TimeGrid, slices: Vec<RadialField>) -> Result<Self, FieldError> {
        if slices.len() != times.len() || slices.is_empty() {
            return Err(FieldError::Shape {
                expected: times.len(),
                got: slices.len(),
            });
        }
        let grid = slices[0].grid.clone();
        if slices.iter().any(|s| s.grid != grid) {
            return Err(FieldError::GridMismatch);
        }
        let values = slices.into_iter().flat_map(|s| s.values).collect();
        Ok(Self { grid, times, values })
    }

    pub fn slice_len(&self) -> usize {
        self.grid.n_rho() * self.grid.n_s()
    }

    pub fn slice(&self, n: usize) -> RadialField {
        let m = self.slice_len();
        RadialField {
            grid: self.grid.clone(),
            values: self.values[n * m..(n + 1) * m].to_vec(),
        }
    }

    /// `L^r_s L^q_t L^p_Y` norm, time integrals by the trapezoid rule.
    pub fn strichartz_norm(&self, p_y: f64, q_t: f64, r_s: f64) -> Result<f64, FieldError> {
        check_exponent(p_y)?;
        check_exponent(q_t)?;
        check_exponent(r_s)?;
        let yw = self.grid.y_weights();
        let tw = self.times.trapezoid_weights();
        let (nr, ns, nt) = (self.grid.n_rho(), self.grid.n_s(), self.times.len());
        let m = self.slice_len();
        let per_s: Vec<f64> = (0..ns)
            .into_par_iter()
            .map(|j| {
                let over_t: Vec<f64> = (0..nt)
                    .map(|n| {
                        weighted_lp(
                            yw.iter().copied(),
                            (0..nr).map(|i| self.values[n * m + i * ns + j].norm()),
                            p_y,
                        )
                    })
                    .collect();
                weighted_lp(tw.iter().copied(), over_t.into_iter(), q_t)
            })
            .collect();
        Ok(weighted_lp(
            std::iter::repeat(self.grid.s.step()),
            per_s.into_iter(),
            r_s,
        ))
    }

    pub fn l2_norm(&self) -> f64 {
        self.strichartz_norm(2.0, 2.0, 2.0).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn gaussian(grid: Grid) -> RadialField {
        RadialField::from_fn(grid, |r, s| Complex64::new((-r * r - s * s).exp(), 0.0))
    }

    #[test]
    fn mixed_norm_closed_forms() {
        let f = gaussian(Grid::new(1, 128, 10.0, 256, 16.0));
        // int e^{-|Y|^2} dY = pi, (int e^{-2 s^2} ds)^{1/2} = (pi/2)^{1/4}
        let a = f.mixed_norm(2.0, 1.0, NormOrder::YOuter).unwrap();
        assert!((a - PI / 2f64.sqrt()).abs() < 1e-12);
        let l2 = f.lp_norm(2.0).unwrap();
        assert!((l2 - (PI / 2.0).powf(0.75)).abs() < 1e-12);
        assert!((f.l2_norm() - l2).abs() < 1e-13);
        assert_eq!(f.lp_norm(f64::INFINITY).unwrap(), f.max_abs());
        assert!(f.lp_norm(0.5).is_err());
    }

    #[test]
    fn translate_round_trip_and_period() {
        let g = Grid::new(1, 32, 8.0, 128, 16.0);
        let f = RadialField::from_fn(g, |r, s| {
            Complex64::new((-r * r - s * s).exp(), 0.3 * s * (-s * s).exp())
        });
        let back = s_translate(&s_translate(&f, 1.3), -1.3);
        assert!(back.relative_l2_error(&f).unwrap() < 1e-13);
        let wrap = s_translate(&f, 32.0);
        assert!(wrap.relative_l2_error(&f).unwrap() < 1e-12);
    }

    #[test]
    fn translate_matches_closure() {
        let g = Grid::new(1, 16, 6.0, 256, 20.0);
        let f = RadialField::from_fn(g.clone(), |r, s| Complex64::new((-r * r - s * s).exp(), 0.0));
        let expect = RadialField::from_fn(g, |r, s| Complex64::new((-r * r - (s + 0.77) * (s + 0.77)).exp(), 0.0));
        assert!(s_translate(&f, 0.77).relative_l2_error(&expect).unwrap() < 1e-12);
    }

    #[test]
    fn translate_preserves_norms_on_commensurate_shift() {
        let g = Grid::new(1, 32, 8.0, 512, 32.0);
        let f = gaussian(g);
        let t = s_translate(&f, 1.0);
        for p in [1.0, 2.0, f64::INFINITY] {
            let (a, b) = (f.lp_norm(p).unwrap(), t.lp_norm(p).unwrap());
            assert!((a - b).abs() <= 1e-10 * a, "p={p}: {a} {b}");
        }
    }

    #[test]
    fn dilation_scales_l2_norm() {
        let f = gaussian(Grid::new(1, 256, 12.0, 512, 40.0));
        let g = dilate(&f, 2.0, RhoInterp::Spectral).unwrap();
        let ratio = g.l2_norm() / f.l2_norm();
        assert!((ratio - 0.25).abs() < 1e-6, "{ratio}");
        let g = dilate(&f, 2.0, RhoInterp::MonotoneCubic).unwrap();
        let ratio = g.l2_norm() / f.l2_norm();
        assert!((ratio - 0.25).abs() < 1e-3, "{ratio}");
    }

    #[test]
    fn dilation_matches_closure_and_composes() {
        let grid = Grid::new(1, 128, 10.0, 256, 24.0);
        let f = RadialField::from_fn(grid.clone(), |r, s| {
            Complex64::new((-r * r).exp() * (-s * s / 4.0).exp(), 0.0) * Complex64::from_polar(1.0, 0.5 * s)
        });
        let expect = RadialField::from_fn(grid, |r, s| {
            let (r, s) = (0.7 * r, 0.49 * s);
            Complex64::new((-r * r).exp() * (-s * s / 4.0).exp(), 0.0) * Complex64::from_polar(1.0, 0.5 * s)
        });
        let g = dilate(&f, 0.7, RhoInterp::Spectral).unwrap();
        assert!(g.relative_l2_error(&expect).unwrap() < 1e-9);
        let gh = dilate(&dilate(&f, 0.8, RhoInterp::Spectral).unwrap(), 1.1, RhoInterp::Spectral).unwrap();
        let direct = dilate(&f, 0.88, RhoInterp::Spectral).unwrap();
        assert!(gh.relative_l2_error(&direct).unwrap() < 1e-8);
    }

    #[test]
    fn dilation_rejects_bad_factor() {
        let f = gaussian(Grid::new(1, 8, 4.0, 16, 4.0));
        assert!(dilate(&f, 0.0, RhoInterp::Spectral).is_err());
        assert!(dilate(&f, f64::NAN, RhoInterp::Spectral).is_err());
    }

    #[test]
    fn exact_dilation_scales_norms() {
        let f = gaussian(Grid::new(2, 64, 8.0, 64, 8.0));
        let a = 3.0;
        let g = f.dilated_exact(a);
        let q = 2.0 * 2.0 + 2.0;
        for p in [1.0, 2.0, 4.0] {
            let r = g.lp_norm(p).unwrap() / f.lp_norm(p).unwrap();
            assert!((r - a.powf(-q / p)).abs() < 1e-12 * r);
        }
    }

    #[test]
    fn spacetime_norm_of_product() {
        let g = Grid::new(1, 64, 8.0, 128, 16.0);
        let times = TimeGrid::uniform(0.0, 1.0, 11);
        let slices: Vec<RadialField> = times
            .nodes
            .iter()
            .map(|&t| gaussian(g.clone()).scale(Complex64::new(1.0 + t, 0.0)))
            .collect();
        let u = SpaceTimeField::from_slices(times, slices).unwrap();
        let base = gaussian(g);
        // L^inf_t picks t = 1, so the value doubles.
        let a = u.strichartz_norm(2.0, f64::INFINITY, 2.0).unwrap();
        assert!((a - 2.0 * base.l2_norm()).abs() < 1e-12);
        // Trapezoid is exact on the linear-in-t integrand (1+t)^1.
        let b = u.strichartz_norm(1.0, 1.0, 1.0).unwrap();
        assert!((b - 1.5 * base.lp_norm(1.0).unwrap()).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn minkowski_ordering(p in 1.0f64..4.0, extra in 0.0f64..4.0, w in 0.3f64..2.0, c in -3.0f64..3.0) {
            let q = p + extra;
            let g = Grid::new(1, 48, 8.0, 64, 10.0);
            let f = RadialField::from_fn(g, |r, s| {
                Complex64::new((-r * r / w - (s - c * r).powi(2)).exp(), 0.0)
            });
            let inner_y = f.mixed_norm(p, q, NormOrder::SOuter).unwrap();
            let inner_s = f.mixed_norm(p, q, NormOrder::YOuter).unwrap();
            prop_assert!(inner_y <= inner_s * (1.0 + 1e-12));
        }

        #[test]
        fn translations_compose(a in -5.0f64..5.0, b in -5.0f64..5.0) {
            let g = Grid::new(1, 8, 6.0, 128, 16.0);
            let f = RadialField::from_fn(g, |r, s| Complex64::new((-r * r - s * s).exp(), 0.0));
            let lhs = s_translate(&s_translate(&f, a), b);
            let rhs = s_translate(&f, a + b);
            prop_assert!(lhs.relative_l2_error(&rhs).unwrap() < 1e-12);
        }

        #[test]
        fn translation_is_unitary(a in -30.0f64..30.0) {
            let g = Grid::new(1, 8, 6.0, 128, 16.0);
            let f = RadialField::from_fn(g, |r, s| Complex64::new((-r * r - s * s).exp(), s.sin()));
            let t = s_translate(&f, a);
            prop_assert!((t.l2_norm() - f.l2_norm()).abs() < 1e-12 * f.l2_norm());
        }
    }
}
