//! Smooth cutoffs used for frequency localization and for building data.

use serde::{Deserialize, Serialize};

fn h(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// C-infinity cutoff: 1 on `[0, 1/2]`, 0 on `[1, inf)`.
pub fn ball_cutoff(x: f64) -> f64 {
    let a = h(1.0 - x);
    let b = h(x - 0.5);
    if a + b == 0.0 {
        return 0.0;
    }
    a / (a + b)
}

/// Dyadic ring profile `psi(x) - psi(2x)`, supported in `[1/4, 1]`.
pub fn ring_profile(x: f64) -> f64 {
    ball_cutoff(x) - ball_cutoff(2.0 * x)
}

/// Compactly supported bump with peak 1 at the midpoint of `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub lo: f64,
    pub hi: f64,
}

impl Bump {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo < hi);
        Self { lo, hi }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let tau = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        if tau.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - tau * tau)).exp()
        }
    }
}

impl Default for Bump {
    /// The default transport profile, supported on `[1/2, 2]`.
    fn default() -> Self {
        Self { lo: 0.5, hi: 2.0 }
    }
}

/// Frequency window in the eigenvalue variable `x = Lambda^{-2} 4|lambda|(2 ell + d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Localizer {
    Ball { scale: f64 },
    Ring { scale: f64 },
}

impl Localizer {
    pub fn scale(&self) -> f64 {
        match *self {
            Localizer::Ball { scale } | Localizer::Ring { scale } => scale,
        }
    }

    /// Window value at eigenvalue `mu = 4|lambda|(2 ell + d)`.
    pub fn weight(&self, mu: f64) -> f64 {
        let x = mu / (self.scale() * self.scale());
        match self {
            Localizer::Ball { .. } => ball_cutoff(x),
            Localizer::Ring { .. } => ring_profile(x),
        }
    }
}
