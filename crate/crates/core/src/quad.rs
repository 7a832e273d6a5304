//! Quadrature rules and small numerical helpers shared by the transforms.

use std::num::NonZeroUsize;

use gauss_quad::laguerre::GaussLaguerre;
use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

/// Gauss–Legendre nodes and weights on `[a, b]`, nodes ascending.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let n = NonZeroUsize::new(n).expect("quadrature order must be positive");
    let rule = GaussLegendre::new(n);
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    pairs.into_iter().map(|(x, w)| (mid + half * x, half * w)).unzip()
}

/// Generalized Gauss–Laguerre rule for the weight `u^alpha e^{-u}` on `[0, inf)`.
pub fn gauss_laguerre(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let n = NonZeroUsize::new(n).expect("quadrature order must be positive");
    let alpha = alpha.try_into().expect("alpha must exceed -1");
    let rule = GaussLaguerre::new(n, alpha);
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let alpha: f64 = alpha.into();
    let n = n.get();
    // The library weights only carry absolute accuracy, so the tail ones are
    // noise near 1e-33. Callers undo e^{-u}, which needs relative accuracy:
    // polish the nodes and rebuild the weights in log space.
    let nodes: Vec<f64> = pairs.iter().map(|&(x, _)| polish_laguerre_root(n, alpha, x)).collect();
    let log_w: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let (next, _, scale) = laguerre_pair(n + 1, alpha, x);
            x.ln() - 2.0 * (next.abs().ln() + scale)
        })
        .collect();
    // normalize against the library's total mass, which the large weights fix accurately
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_norm = total.ln() - top - log_w.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
    let weights = log_w.iter().map(|l| (l + log_norm).exp()).collect();
    (nodes, weights)
}

/// `L_n^alpha(x)` and `L_{n-1}^alpha(x)` as `(p_n, p_{n-1}, ln scale)`.
fn laguerre_pair(n: usize, alpha: f64, x: f64) -> (f64, f64, f64) {
    let (mut p0, mut p1, mut scale) = (0.0, 1.0, 0.0);
    for k in 0..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0 + alpha - x) * p1 - (kf + alpha) * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
        if p1.abs() > 1e150 {
            p0 /= 1e150;
            p1 /= 1e150;
            scale += 1e150f64.ln();
        }
    }
    (p1, p0, scale)
}

fn polish_laguerre_root(n: usize, alpha: f64, mut x: f64) -> f64 {
    for _ in 0..3 {
        let (p, q, _) = laguerre_pair(n, alpha, x);
        // x L_n' = n L_n - (n + alpha) L_{n-1}
        let dp = (n as f64 * p - (n as f64 + alpha) * q) / x;
        if dp == 0.0 || !dp.is_finite() {
            break;
        }
        let step = p / dp;
        x -= step;
        if step.abs() <= 1e-15 * x.abs() {
            break;
        }
    }
    x
}

/// Composite Gauss–Legendre over `panels` equal panels of `[a, b]`.
pub fn composite_gl<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order, -1.0, 1.0);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mut acc = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            acc += wi * f(lo + 0.5 * h * (xi + 1.0));
        }
        total += 0.5 * h * acc;
    }
    total
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
    pub evals: usize,
}

const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_WK[7];
    let mut g = fc * GK_WG[3];
    for j in 0..7 {
        let dx = h * GK_X[j];
        let s = f(c - dx) + f(c + dx);
        k += s * GK_WK[j];
        if j % 2 == 1 {
            g += s * GK_WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Adaptive Gauss–Kronrod (7/15) integration of a complex integrand.
///
/// Returns `None` if the requested absolute tolerance is not met within
/// `max_intervals` subdivisions.
pub fn adaptive_gk<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_intervals: usize,
) -> Option<Estimate> {
    let (v, e) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let mut evals = 15;
    loop {
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= tol {
            let value = parts.iter().fold(Complex64::new(0.0, 0.0), |s, p| s + p.2);
            return Some(Estimate {
                value,
                error: err,
                evals,
            });
        }
        if parts.len() >= max_intervals {
            return None;
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evals += 30;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// `sum_{k >= start} w(k)` for a smooth, eventually monotone weight.
///
/// Sums `explicit` terms directly and closes with the midpoint-rule integral
/// of the remainder plus its first Euler–Maclaurin correction.
pub fn series_tail<W: Fn(f64) -> f64>(w: W, start: usize, explicit: usize) -> f64 {
    let mut acc = 0.0;
    for k in start..start + explicit {
        acc += w(k as f64);
    }
    let a = (start + explicit) as f64 - 0.5;
    // x = a / (1 - t) maps [0, 1) onto [a, inf) and flattens algebraic decay.
    let (t, wt) = gauss_legendre(64, 0.0, 1.0);
    let mut tail = 0.0;
    for (ti, wi) in t.iter().zip(&wt) {
        let one_minus = 1.0 - ti;
        tail += wi * w(a / one_minus) * a / (one_minus * one_minus);
    }
    let h = 1e-3 * a.max(1.0);
    let slope = (w(a + h) - w(a - h)) / (2.0 * h);
    acc + tail + slope / 24.0
}

/// Pairwise summation; the fixed association order keeps results reproducible.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        num += (a - mx) * (b - my);
        den += (a - mx) * (a - mx);
    }
    num / den
}
