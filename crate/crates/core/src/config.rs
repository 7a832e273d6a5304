//! Run configuration shared by the verification suites and the CLI.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Grid, TimeGrid};
use crate::window::Localizer;

pub const CONFIG_SCHEMA: &str = "hh-config/1";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config is not valid JSON for schema {CONFIG_SCHEMA}: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported config schema {0:?}, expected {CONFIG_SCHEMA:?}")]
    Schema(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureMode {
    Grid,
    Closure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowName {
    Ball,
    Ring,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub name: WindowName,
    pub scale: f64,
}

impl WindowConfig {
    pub fn localizer(&self) -> Localizer {
        match self.name {
            WindowName::Ball => Localizer::Ball { scale: self.scale },
            WindowName::Ring => Localizer::Ring { scale: self.scale },
        }
    }
}

/// Per-check tolerances. Relative unless the name says otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub plancherel: f64,
    pub round_trip: f64,
    pub closed_form: f64,
    pub transport: f64,
    pub transport_norms: f64,
    pub eigenvalue: f64,
    pub unitarity: f64,
    pub energy: f64,
    pub duhamel_order: f64,
    pub g_origin: f64,
    pub g_scaling: f64,
    pub sphere_total: f64,
    pub duality: f64,
    pub translation: f64,
    pub refinement: f64,
    pub flatness: f64,
    pub exponent: f64,
    pub hardy_slack: f64,
    pub wave_decay: f64,
    pub schrodinger_decay: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            plancherel: 1e-6,
            round_trip: 1e-6,
            closed_form: 1e-8,
            transport: 1e-8,
            transport_norms: 1e-4,
            eigenvalue: 1e-3,
            unitarity: 1e-10,
            energy: 1e-10,
            duhamel_order: 1.9,
            g_origin: 1e-6,
            g_scaling: 1e-10,
            sphere_total: 1e-6,
            duality: 1e-8,
            translation: 1e-10,
            refinement: 0.05,
            flatness: 1e-6,
            exponent: 0.1,
            hardy_slack: 1e-9,
            wave_decay: -0.4,
            schrodinger_decay: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub d: usize,
    pub l_max: usize,
    pub n_rho: usize,
    pub r_max: f64,
    pub n_s: usize,
    pub s_half_width: f64,
    pub n_t: usize,
    pub t_max: f64,
    pub quadrature_mode: QuadratureMode,
    pub seed: u64,
    pub window: WindowConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema: CONFIG_SCHEMA.into(),
            d: 1,
            l_max: 64,
            n_rho: 256,
            r_max: 12.0,
            n_s: 512,
            s_half_width: 40.0,
            n_t: 64,
            t_max: 1.0,
            quadrature_mode: QuadratureMode::Grid,
            seed: 42,
            window: WindowConfig {
                name: WindowName::Ball,
                scale: 6.0,
            },
            tolerances: Tolerances::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != CONFIG_SCHEMA {
            return Err(ConfigError::Schema(self.schema.clone()));
        }
        let bad = |m: String| Err(ConfigError::Invalid(m));
        for (name, v) in [
            ("d", self.d),
            ("l_max", self.l_max),
            ("n_rho", self.n_rho),
            ("n_t", self.n_t),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.n_s < 2 || !self.n_s.is_power_of_two() {
            return bad(format!("n_s must be a power of two, got {}", self.n_s));
        }
        for (name, v) in [
            ("r_max", self.r_max),
            ("s_half_width", self.s_half_width),
            ("t_max", self.t_max),
            ("window.scale", self.window.scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        let t = &self.tolerances;
        let positive = [
            ("plancherel", t.plancherel),
            ("round_trip", t.round_trip),
            ("closed_form", t.closed_form),
            ("transport", t.transport),
            ("transport_norms", t.transport_norms),
            ("eigenvalue", t.eigenvalue),
            ("unitarity", t.unitarity),
            ("energy", t.energy),
            ("duhamel_order", t.duhamel_order),
            ("g_origin", t.g_origin),
            ("g_scaling", t.g_scaling),
            ("sphere_total", t.sphere_total),
            ("duality", t.duality),
            ("translation", t.translation),
            ("refinement", t.refinement),
            ("flatness", t.flatness),
            ("exponent", t.exponent),
            ("hardy_slack", t.hardy_slack),
            ("schrodinger_decay", t.schrodinger_decay),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("tolerances.{name} must be positive, got {v}"));
            }
        }
        if !(t.wave_decay < 0.0) {
            return bad(format!(
                "tolerances.wave_decay is a decay exponent and must be negative, got {}",
                t.wave_decay
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.d, self.n_rho, self.r_max, self.n_s, self.s_half_width)
    }

    pub fn grid_in(&self, d: usize) -> Grid {
        Grid::new(d, self.n_rho, self.r_max, self.n_s, self.s_half_width)
    }

    pub fn times(&self) -> TimeGrid {
        TimeGrid::uniform(0.0, self.t_max, self.n_t)
    }
}
