//! Twisted convolution on `T*R^1` by direct quadrature, the operators `T_n`,
//! and the scalar estimates behind the restriction proofs: the `est2`
//! scaling, kernel orthogonality and the discrete Hardy inequality.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{gauss_legendre, loglog_slope, pairwise_sum};
use crate::specfun::{normalized_kernel, sphere_area, wigner_radial, KernelPoint};

#[derive(Debug, Error, PartialEq)]
pub enum TwistedError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("planar grids differ")]
    GridMismatch,
}

/// `sigma(Y, W) = <eta, w_y> - <w_eta, y>` for `Y = (y, eta)`, `W = (w_y, w_eta)`.
///
/// Panics if the lengths differ or are odd.
pub fn symplectic(y: &[f64], w: &[f64]) -> f64 {
    assert!(
        y.len() == w.len() && y.len() % 2 == 0,
        "points must both lie in R^{{2d}}"
    );
    let d = y.len() / 2;
    (0..d).map(|k| y[d + k] * w[k] - w[d + k] * y[k]).sum()
}

/// Square lattice `x_i = (i - n/2) h`, `h = 2 half_width / n`, on both axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarGrid {
    pub n: usize,
    pub half_width: f64,
}

impl Default for PlanarGrid {
    fn default() -> Self {
        Self { n: 96, half_width: 8.0 }
    }
}

impl PlanarGrid {
    pub fn step(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.step()
    }
}

/// `values[i * n + j] = f(y_i, eta_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarField {
    pub grid: PlanarGrid,
    pub values: Vec<Complex64>,
}

impl PlanarField {
    pub fn zeros(grid: PlanarGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.n * grid.n],
        }
    }

    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(grid: PlanarGrid, f: F) -> Self {
        let n = grid.n;
        let values = (0..n * n).map(|k| f(grid.node(k / n), grid.node(k % n))).collect();
        Self { grid, values }
    }

    /// `W(ell, lambda, |Y|)`, the radial Laguerre function.
    pub fn laguerre(grid: PlanarGrid, ell: usize, lambda: f64) -> Self {
        Self::from_fn(grid, |y, e| {
            let p = KernelPoint::new(ell as u64, lambda, y.hypot(e), 1).expect("lambda nonzero");
            Complex64::new(wigner_radial(&p), 0.0)
        })
    }

    /// `f(sqrt(a) Y)` sampled on the same grid.
    pub fn rescaled<F: Fn(f64, f64) -> Complex64>(grid: PlanarGrid, a: f64, f: F) -> Self {
        let r = a.sqrt();
        Self::from_fn(grid, |y, e| f(r * y, r * e))
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_abs();
        }
        let h2 = self.grid.step().powi(2);
        let terms: Vec<f64> = self.values.iter().map(|v| v.norm().powf(p) * h2).collect();
        pairwise_sum(&terms).powf(1.0 / p)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, TwistedError> {
        if self.grid != other.grid {
            return Err(TwistedError::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Share of `||f||_2^2` with `|y|` or `|eta|` beyond 90% of the half width.
    pub fn edge_fraction(&self) -> f64 {
        let (n, cut) = (self.grid.n, 0.9 * self.grid.half_width);
        let (mut edge, mut total) = (0.0, 0.0);
        for (k, v) in self.values.iter().enumerate() {
            let m = v.norm_sqr();
            total += m;
            if self.grid.node(k / n).abs() > cut || self.grid.node(k % n).abs() > cut {
                edge += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            edge / total
        }
    }
}

/// Edge mass above which twisted quadrature is flagged as aliased.
pub const ALIASING_THRESHOLD: f64 = 1e-8;

/// `(f *_lambda g)(Y) = int f(Y - w) g(w) e^{2 i lambda sigma(Y, w)} dw` on the
/// lattice, values outside the box taken as zero. Cost `O(n^4)`.
pub fn twisted_convolve(f: &PlanarField, g: &PlanarField, lambda: f64) -> Result<PlanarField, TwistedError> {
    if f.grid != g.grid {
        return Err(TwistedError::GridMismatch);
    }
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(TwistedError::InvalidArgument(format!(
            "lambda must be finite and nonzero, got {lambda}"
        )));
    }
    for (name, x) in [("f", f), ("g", g)] {
        let e = x.edge_fraction();
        if e > ALIASING_THRESHOLD {
            log::warn!("twisted convolution: {name} has edge mass fraction {e:e}; box may alias");
        }
    }
    Ok(twisted_raw(f, g, lambda))
}

fn twisted_raw(f: &PlanarField, g: &PlanarField, lambda: f64) -> PlanarField {
    let grid = f.grid;
    let n = grid.n;
    let half = (n / 2) as isize;
    let h2 = grid.step().powi(2);
    // sigma(Y, w) = eta_Y y_w - eta_w y_Y factors through e^{2 i lambda x_a x_b}.
    let phase: Vec<Complex64> = (0..n * n)
        .map(|k| Complex64::from_polar(1.0, 2.0 * lambda * grid.node(k / n) * grid.node(k % n)))
        .collect();
    let values: Vec<Complex64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                // f(Y - w) has y-index i - k + n/2
                let fi = i as isize - k as isize + half;
                if fi < 0 || fi >= n as isize {
                    continue;
                }
                let frow = &f.values[fi as usize * n..(fi as usize + 1) * n];
                let grow = &g.values[k * n..(k + 1) * n];
                let mut inner = Complex64::new(0.0, 0.0);
                for l in 0..n {
                    let fj = j as isize - l as isize + half;
                    if fj < 0 || fj >= n as isize {
                        continue;
                    }
                    inner += frow[fj as usize] * grow[l] * phase[l * n + i].conj();
                }
                acc += inner * phase[j * n + k];
            }
            acc * h2
        })
        .collect();
    PlanarField { grid, values }
}

/// `T_n f = f *_lambda W(n, lambda, .)`.
pub fn tn_apply(f: &PlanarField, n: usize, lambda: f64) -> Result<PlanarField, TwistedError> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(TwistedError::InvalidArgument(format!(
            "lambda must be finite and nonzero, got {lambda}"
        )));
    }
    twisted_convolve(f, &PlanarField::laguerre(f.grid, n, lambda), lambda)
}

/// Seeded sums of three modulated Gaussian bumps of width near 1.
pub fn random_inputs(grid: PlanarGrid, count: usize, seed: u64) -> Vec<PlanarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let bumps: Vec<[f64; 7]> = (0..3)
                .map(|_| {
                    [
                        rng.random_range(-2.0..2.0),
                        rng.random_range(-2.0..2.0),
                        rng.random_range(0.5f64.ln()..1.5f64.ln()).exp(),
                        rng.random_range(-2.0..2.0),
                        rng.random_range(-2.0..2.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    ]
                })
                .collect();
            PlanarField::from_fn(grid, |y, e| {
                bumps
                    .iter()
                    .map(|b| {
                        let r2 = ((y - b[0]).powi(2) + (e - b[1]).powi(2)) / (b[2] * b[2]);
                        Complex64::new(b[5], b[6]) * Complex64::from_polar((-r2).exp(), b[3] * y + b[4] * e)
                    })
                    .sum()
            })
        })
        .collect()
}

/// Largest Rayleigh quotient `||A f||_2 / ||f||_2` over the inputs: a lower
/// bound for the operator norm, reported as a measured proxy only.
pub fn norm_proxy<A>(op: A, inputs: &[PlanarField]) -> Result<f64, TwistedError>
where
    A: Fn(&PlanarField) -> Result<PlanarField, TwistedError>,
{
    let mut best: f64 = 0.0;
    for f in inputs {
        best = best.max(op(f)?.lp_norm(2.0) / f.lp_norm(2.0));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Est2Report {
    pub p: f64,
    pub seed: u64,
    pub grid: PlanarGrid,
    pub ells: Vec<usize>,
    pub lambdas: Vec<f64>,
    /// `ratios[k][j]` at `ells[k]`, `lambdas[j]`.
    pub ratios: Vec<Vec<f64>>,
    pub lambda_exponent: f64,
    pub lambda_target: f64,
    pub ell_exponent: f64,
    pub ell_target: f64,
}

/// `||f_lambda *_lambda W(ell, lambda)||_{p'} / ||f_lambda||_p` over an `(ell, lambda)`
/// ladder, with `f_lambda = f(sqrt(lambda) .)` for one seeded `f`.
///
/// Exponents are the mean per-row log-log slopes.
pub fn est2_scan(
    p: f64,
    ells: &[usize],
    lambdas: &[f64],
    grid: PlanarGrid,
    seed: u64,
) -> Result<Est2Report, TwistedError> {
    if !(1.0..=2.0).contains(&p) {
        return Err(TwistedError::InvalidArgument(format!(
            "est2 needs p in [1, 2], got {p}"
        )));
    }
    if lambdas.iter().any(|l| *l <= 0.0) {
        return Err(TwistedError::InvalidArgument("lambdas must be positive".into()));
    }
    let pp = if p == 1.0 { f64::INFINITY } else { p / (p - 1.0) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cy, ce, kx, ke) = (
        rng.random_range(-0.5..0.5),
        rng.random_range(-0.5..0.5),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    let profile =
        move |y: f64, e: f64| Complex64::from_polar((-(y - cy).powi(2) - (e - ce).powi(2)).exp(), kx * y + ke * e);
    let mut ratios = Vec::with_capacity(ells.len());
    for &ell in ells {
        let row = lambdas
            .iter()
            .map(|&lam| {
                let f = PlanarField::rescaled(grid, lam, profile);
                Ok(tn_apply(&f, ell, lam)?.lp_norm(pp) / f.lp_norm(p))
            })
            .collect::<Result<Vec<f64>, TwistedError>>()?;
        ratios.push(row);
    }
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let lambda_exponent = mean(ratios.iter().map(|r| loglog_slope(lambdas, r)).collect());
    let ell_exponent = if ells.len() > 1 && ells.iter().all(|&l| l > 0) {
        let x: Vec<f64> = ells.iter().map(|&l| l as f64).collect();
        mean(
            (0..lambdas.len())
                .map(|j| loglog_slope(&x, &ratios.iter().map(|r| r[j]).collect::<Vec<_>>()))
                .collect(),
        )
    } else {
        f64::NAN
    };
    let d = 1.0;
    let inv = if pp.is_infinite() { 0.0 } else { 1.0 / pp };
    Ok(Est2Report {
        p,
        seed,
        grid,
        ells: ells.to_vec(),
        lambdas: lambdas.to_vec(),
        ratios,
        lambda_exponent,
        lambda_target: -2.0 * d * inv,
        ell_exponent,
        ell_target: (d - 1.0) * (1.0 - 2.0 * inv),
    })
}

/// `||f_lambda *_lambda g_lambda||_2 / (||f_lambda||_2 ||g_lambda||_2)` and its
/// fitted slope in `lambda` (expected `-d/2`).
pub fn l2_algebra_slope(lambdas: &[f64], grid: PlanarGrid, seed: u64) -> Result<(Vec<f64>, f64), TwistedError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<f64> = (0..4).map(|_| rng.random_range(-0.5..0.5)).collect();
    let f = move |y: f64, e: f64| Complex64::new((-(y - c[0]).powi(2) - (e - c[1]).powi(2)).exp(), 0.0);
    let g = move |y: f64, e: f64| Complex64::from_polar((-(y * y + e * e) / 2.0).exp(), y - e);
    let ratios = lambdas
        .iter()
        .map(|&lam| {
            let (a, b) = (
                PlanarField::rescaled(grid, lam, &f),
                PlanarField::rescaled(grid, lam, g),
            );
            Ok(twisted_convolve(&a, &b, lam)?.lp_norm(2.0) / (a.lp_norm(2.0) * b.lp_norm(2.0)))
        })
        .collect::<Result<Vec<f64>, TwistedError>>()?;
    let slope = loglog_slope(lambdas, &ratios);
    Ok((ratios, slope))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthReport {
    pub d: usize,
    pub diagonal_ells: Vec<usize>,
    /// `I(ell, 2 ell)` at `diagonal_ells`.
    pub off_diagonal: Vec<f64>,
    pub slope: f64,
    /// Doubling levels `2^k` and the sup of `max(ell, m) I(ell, m)` over pairs with `max(ell, m) = 2^k`.
    pub levels: Vec<usize>,
    pub level_sup: Vec<f64>,
    /// Log-log slope of `level_sup` over the upper half of the levels, where
    /// the sup has settled; no growth means at most a small positive value.
    pub level_trend: f64,
    pub sup_scaled: f64,
}

/// `I(ell, m) = int_{R^{2d}} |K(ell, Y)| |K(m, Y)| dY` by composite
/// Gauss–Legendre in `rho` with panels fine enough to resolve the kernel zeros.
pub fn orth_integral(ell: usize, m: usize, d: usize) -> f64 {
    let top = ell.max(m);
    let nu = 2.0 * top as f64 + d as f64;
    // past x = 2 rho^2 / nu = 4 nu + 100 the larger kernel is below e^{-40}
    let r_max = ((4.0 * nu + 100.0) * nu / 2.0).sqrt();
    let panels = 40 * (top + 1) + 100;
    let (x, w) = gauss_legendre(8, -1.0, 1.0);
    let hp = r_max / panels as f64;
    let terms: Vec<f64> = (0..panels)
        .into_par_iter()
        .map(|p| {
            let lo = p as f64 * hp;
            let mut acc = 0.0;
            for (xi, wi) in x.iter().zip(&w) {
                let r = lo + 0.5 * hp * (xi + 1.0);
                let a = normalized_kernel(ell as u64, d, r).expect("valid kernel point");
                let b = normalized_kernel(m as u64, d, r).expect("valid kernel point");
                acc += wi * (a * b).abs() * r.powi(2 * d as i32 - 1);
            }
            acc * 0.5 * hp
        })
        .collect();
    sphere_area(d) * pairwise_sum(&terms)
}

/// Slope of `I(ell, 2 ell)` over `ells` and the doubling-ladder sup of `max(ell, m) I(ell, m)`.
pub fn orth_check(ells: &[usize], levels: usize, d: usize) -> OrthReport {
    let off_diagonal: Vec<f64> = ells.iter().map(|&l| orth_integral(l, 2 * l, d)).collect();
    let x: Vec<f64> = ells.iter().map(|&l| l as f64).collect();
    let slope = loglog_slope(&x, &off_diagonal);
    let lv: Vec<usize> = (0..levels).map(|k| 1usize << k).collect();
    let level_sup: Vec<f64> = lv
        .iter()
        .map(|&top| {
            let mut s: f64 = 0.0;
            let mut other = 1;
            while other <= top {
                s = s.max(top as f64 * orth_integral(other, top, d));
                other *= 2;
            }
            s
        })
        .collect();
    let upper = levels / 2;
    let level_trend = loglog_slope(
        &lv[upper..].iter().map(|&v| v as f64).collect::<Vec<_>>(),
        &level_sup[upper..],
    );
    OrthReport {
        d,
        diagonal_ells: ells.to_vec(),
        off_diagonal,
        slope,
        levels: lv,
        sup_scaled: level_sup.iter().copied().fold(0.0, f64::max),
        level_sup,
        level_trend,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyReport {
    pub p: f64,
    pub ratio: f64,
    pub bound: f64,
}

/// `||b||_p / ||a||_p` with `b_m = (1/m) sum_{ell <= m} |a_ell|`, against `p/(p-1)`.
pub fn hardy_check(a: &[f64], p: f64) -> Result<HardyReport, TwistedError> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(TwistedError::InvalidArgument(format!(
            "the Hardy inequality needs 1 < p < inf, got {p}"
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(TwistedError::InvalidArgument("sequence entries must be finite".into()));
    }
    let mut run = 0.0;
    let b: Vec<f64> = a
        .iter()
        .enumerate()
        .map(|(k, v)| {
            run += v.abs();
            (run / (k + 1) as f64).powf(p)
        })
        .collect();
    let na = pairwise_sum(&a.iter().map(|v| v.abs().powf(p)).collect::<Vec<_>>());
    let ratio = if na == 0.0 {
        0.0
    } else {
        (pairwise_sum(&b) / na).powf(1.0 / p)
    };
    Ok(HardyReport {
        p,
        ratio,
        bound: p / (p - 1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyScan {
    pub p: f64,
    pub seed: u64,
    pub count: usize,
    pub max_ratio: f64,
    pub bound: f64,
    pub violations: usize,
}

/// Seeded nonnegative sequences of length up to `max_len`: uniform entries,
/// sparse spikes, and power laws `ell^{-1/p}` cut at a random length, which
/// approach the sharp constant.
pub fn hardy_scan(p: f64, count: usize, max_len: usize, seed: u64) -> Result<HardyScan, TwistedError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = p / (p - 1.0);
    let mut max_ratio: f64 = 0.0;
    let mut violations = 0;
    for k in 0..count {
        let len = rng.random_range(1..=max_len);
        let a: Vec<f64> = match k % 3 {
            0 => (0..len).map(|_| rng.random_range(0.0..1.0)).collect(),
            1 => (0..len)
                .map(|_| {
                    if rng.random_range(0.0..1.0) < 0.1 {
                        rng.random_range(0.0..10.0)
                    } else {
                        0.0
                    }
                })
                .collect(),
            _ => {
                let e = 1.0 / p + rng.random_range(0.0..0.2);
                (1..=len)
                    .map(|l| (l as f64).powf(-e) * rng.random_range(0.9..1.0))
                    .collect()
            }
        };
        let r = hardy_check(&a, p)?.ratio;
        max_ratio = max_ratio.max(r);
        if r > bound + 1e-9 {
            violations += 1;
        }
    }
    Ok(HardyScan {
        p,
        seed,
        count,
        max_ratio,
        bound,
        violations,
    })
}

/// `pi / (2|lambda|)`: the eigenvalue of `T_n` on its range at `d = 1`.
pub fn tn_norm_exact(lambda: f64) -> f64 {
    PI / (2.0 * lambda.abs())
}
