//! Special functions: Laguerre and Hermite families, the diagonal Wigner
//! kernel in closed form and by brute-force quadrature, multiplicities and
//! the sublaplacian eigenvalues.

use num_complex::Complex64;
use thiserror::Error;

use crate::quad::{adaptive_gk, Estimate};

#[derive(Debug, Error, PartialEq)]
pub enum SpecFunError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("binomial multiplicity overflows u128 at ell={ell}, d={d}")]
    Overflow { ell: u64, d: usize },
    #[error("quadrature did not reach tolerance {tol:e} for (n={n:?}, m={m:?})")]
    Quadrature { n: Vec<u32>, m: Vec<u32>, tol: f64 },
}

/// Rescale threshold for the three-term recurrences.
const BIG: f64 = 1e150;

/// Generalized Laguerre polynomial `L_ell^{(alpha)}(x)` by forward recurrence.
pub fn laguerre(ell: usize, alpha: f64, x: f64) -> f64 {
    let mut p0 = 1.0;
    if ell == 0 {
        return p0;
    }
    let mut p1 = 1.0 + alpha - x;
    for k in 1..ell {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0 + alpha - x) * p1 - (kf + alpha) * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Fills `out[k] = exp(shift - x/2) * L_k^{(alpha)}(x)` for `k < out.len()`.
///
/// The recurrence carries a separate log-scale so that large degrees at large
/// `x` neither overflow the polynomial nor underflow the exponential early.
pub fn laguerre_weighted(alpha: f64, x: f64, shift: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let mut log_scale = shift - 0.5 * x;
    let mut fac = log_scale.exp();
    let mut p0 = 1.0;
    out[0] = fac;
    if out.len() == 1 {
        return;
    }
    let mut p1 = 1.0 + alpha - x;
    out[1] = p1 * fac;
    for k in 1..out.len() - 1 {
        let kf = k as f64;
        let mut p2 = ((2.0 * kf + 1.0 + alpha - x) * p1 - (kf + alpha) * p0) / (kf + 1.0);
        if p2.abs() > BIG {
            p2 /= BIG;
            p1 /= BIG;
            log_scale += BIG.ln();
            fac = log_scale.exp();
        }
        out[k + 1] = p2 * fac;
        p0 = p1;
        p1 = p2;
    }
}

/// `binom(ell + d - 1, ell)`, the number of multi-indices in `N^d` of length `ell`.
pub fn multiplicity(ell: u64, d: usize) -> Result<u128, SpecFunError> {
    if d == 0 {
        return Err(SpecFunError::InvalidArgument("dimension d must be >= 1".into()));
    }
    let mut r: u128 = 1;
    for i in 1..d as u128 {
        // r * (ell + i) / i stays integral: it is binom(ell + i, i).
        r = r
            .checked_mul(ell as u128 + i)
            .ok_or(SpecFunError::Overflow { ell, d })?
            / i;
    }
    Ok(r)
}

/// Multiplicity as a float, with a flag telling whether the integer path was exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multiplicity {
    pub value: f64,
    pub exact: bool,
}

pub fn multiplicity_f64(ell: u64, d: usize) -> Multiplicity {
    match multiplicity(ell, d) {
        Ok(v) => Multiplicity {
            value: v as f64,
            exact: true,
        },
        Err(_) => {
            let mut v = 1.0;
            for i in 1..d {
                v *= (ell as f64 + i as f64) / i as f64;
            }
            Multiplicity { value: v, exact: false }
        }
    }
}

/// Area of the unit sphere `S^{2d-1}` in `R^{2d}`.
pub fn sphere_area(d: usize) -> f64 {
    let mut fact = 1.0;
    for k in 1..d {
        fact *= k as f64;
    }
    2.0 * std::f64::consts::PI.powi(d as i32) / fact
}

/// Sublaplacian eigenvalue `4|lambda|(2 ell + d)`.
pub fn eigenvalue(ell: u64, lambda: f64, d: usize) -> f64 {
    4.0 * lambda.abs() * (2.0 * ell as f64 + d as f64)
}

/// A validated evaluation point for the radial kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    ell: u64,
    lambda: f64,
    rho: f64,
    d: usize,
}

impl KernelPoint {
    pub fn new(ell: u64, lambda: f64, rho: f64, d: usize) -> Result<Self, SpecFunError> {
        if d == 0 {
            return Err(SpecFunError::InvalidArgument("dimension d must be >= 1".into()));
        }
        if !lambda.is_finite() || lambda == 0.0 {
            return Err(SpecFunError::InvalidArgument(format!(
                "lambda must be finite and nonzero, got {lambda}"
            )));
        }
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(SpecFunError::InvalidArgument(format!(
                "rho must be finite and >= 0, got {rho}"
            )));
        }
        Ok(Self { ell, lambda, rho, d })
    }
    pub fn ell(&self) -> u64 {
        self.ell
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn d(&self) -> usize {
        self.d
    }
}

/// Radial kernel `e^{-|lambda| rho^2} L_ell^{(d-1)}(2|lambda| rho^2)`, the sum of the
/// diagonal Wigner transforms over `|n| = ell`.
pub fn wigner_radial(p: &KernelPoint) -> f64 {
    let x = 2.0 * p.lambda.abs() * p.rho * p.rho;
    if p.ell < 64 {
        (-0.5 * x).exp() * laguerre(p.ell as usize, (p.d - 1) as f64, x)
    } else {
        let mut out = vec![0.0; p.ell as usize + 1];
        laguerre_weighted((p.d - 1) as f64, x, 0.0, &mut out);
        out[p.ell as usize]
    }
}

/// `wigner_radial` for all `ell <= out.len() - 1` at one `(lambda, rho)`.
pub fn wigner_radial_all(lambda: f64, d: usize, rho: f64, out: &mut [f64]) {
    let x = 2.0 * lambda.abs() * rho * rho;
    laguerre_weighted((d - 1) as f64, x, 0.0, out);
}

/// Kernel `K(ell, Y)` normalized so that its `L^2` mass decays like `1/ell`:
/// `[binom^{-1} (2 ell + d)^{-(d+1)}]^{1/2}` times the radial kernel at
/// `lambda = 1/(2 ell + d)`.
pub fn normalized_kernel(ell: u64, d: usize, rho: f64) -> Result<f64, SpecFunError> {
    let m = multiplicity_f64(ell, d).value;
    let nu = 2.0 * ell as f64 + d as f64;
    let c = (1.0 / (m * nu.powi(d as i32 + 1))).sqrt();
    Ok(c * wigner_radial(&KernelPoint::new(ell, 1.0 / nu, rho, d)?))
}

/// Fills `out[k]` with the `L^2`-normalized Hermite function `h_k(x)`.
pub fn hermite_functions(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let mut log_scale = -0.5 * x * x - 0.25 * std::f64::consts::PI.ln();
    let mut fac = log_scale.exp();
    let mut p0 = 1.0;
    out[0] = fac;
    if out.len() == 1 {
        return;
    }
    let mut p1 = std::f64::consts::SQRT_2 * x;
    out[1] = p1 * fac;
    for k in 1..out.len() - 1 {
        let kf = k as f64;
        let mut p2 = (2.0 / (kf + 1.0)).sqrt() * x * p1 - (kf / (kf + 1.0)).sqrt() * p0;
        if p2.abs() > BIG {
            p2 /= BIG;
            p1 /= BIG;
            log_scale += BIG.ln();
            fac = log_scale.exp();
        }
        out[k + 1] = p2 * fac;
        p0 = p1;
        p1 = p2;
    }
}

/// Single Hermite function `h_m(x)`.
pub fn hermite_function(m: usize, x: f64) -> f64 {
    let mut out = vec![0.0; m + 1];
    hermite_functions(x, &mut out);
    out[m]
}

/// Wigner transform `W(n, m, lambda, Y)` by direct quadrature of its defining
/// integral, one coordinate at a time. `y` and `eta` are the two halves of `Y`.
pub fn wigner_bruteforce(
    n: &[u32],
    m: &[u32],
    lambda: f64,
    y: &[f64],
    eta: &[f64],
    tol: f64,
) -> Result<Estimate, SpecFunError> {
    let d = n.len();
    if d == 0 || m.len() != d || y.len() != d || eta.len() != d {
        return Err(SpecFunError::InvalidArgument(
            "multi-index and point dimensions differ".into(),
        ));
    }
    if !lambda.is_finite() || lambda == 0.0 {
        return Err(SpecFunError::InvalidArgument(
            "lambda must be finite and nonzero".into(),
        ));
    }
    let sl = lambda.abs().sqrt();
    let mut value = Complex64::new(1.0, 0.0);
    let mut error = 0.0;
    let mut evals = 0;
    let per = tol / d as f64;
    for j in 0..d {
        let (nj, mj) = (n[j] as usize, m[j] as usize);
        let top = nj.max(mj);
        let reach = 10.0 + (2.0 * top as f64 + 1.0).sqrt();
        let z_max = reach / sl + y[j].abs();
        let mut hn = vec![0.0; nj + 1];
        let mut hm = vec![0.0; mj + 1];
        let (yj, ej) = (y[j], eta[j]);
        let est = adaptive_gk(
            |z| {
                hermite_functions(sl * (yj + z), &mut hn);
                hermite_functions(sl * (-yj + z), &mut hm);
                let amp = sl * hn[nj] * hm[mj];
                Complex64::from_polar(amp, 2.0 * lambda * ej * z)
            },
            -z_max,
            z_max,
            per,
            4000,
        )
        .ok_or_else(|| SpecFunError::Quadrature {
            n: n.to_vec(),
            m: m.to_vec(),
            tol,
        })?;
        error += est.error * value.norm() + est.value.norm() * error;
        value *= est.value;
        evals += est.evals;
    }
    Ok(Estimate { value, error, evals })
}

/// A point of the frequency set: multi-indices `n`, `m` and a nonzero `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyPoint {
    pub n: Vec<u32>,
    pub m: Vec<u32>,
    pub lambda: f64,
}

/// Distance on the frequency set: `|lambda(n+m) - lambda'(n'+m')|_1 +
/// |(n-m) - (n'-m')|_1 + d |lambda - lambda'|`.
pub fn frequency_distance(a: &FrequencyPoint, b: &FrequencyPoint) -> Result<f64, SpecFunError> {
    let d = a.n.len();
    if a.m.len() != d || b.n.len() != d || b.m.len() != d {
        return Err(SpecFunError::InvalidArgument(
            "frequency points have different dimensions".into(),
        ));
    }
    let mut s = 0.0;
    for j in 0..d {
        let (an, am, bn, bm) = (a.n[j] as f64, a.m[j] as f64, b.n[j] as f64, b.m[j] as f64);
        s += (a.lambda * (an + am) - b.lambda * (bn + bm)).abs();
        s += ((an - am) - (bn - bm)).abs();
    }
    Ok(s + d as f64 * (a.lambda - b.lambda).abs())
}
