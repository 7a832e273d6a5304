//! The verification suites behind `hh verify`.
//!
//! Each suite fixes its own setups (grids, data, ladders) and reads the
//! window, seed, `L_max` and tolerances from the [`RunConfig`]. Suites that
//! test dimension-free identities run at `d = 1` and `d = 2`; scans run at `config.d`.

use std::f64::consts::PI;
use std::fmt::Display;

use num_complex::Complex64;
use thiserror::Error;

use crate::config::{QuadratureMode, RunConfig};
use crate::container::{decode, encode, Stored};
use crate::family::{GaussianPacket, PacketFamily, SpaceTimePacket};
use crate::fields::{s_translate, RadialField, SpaceTimeField};
use crate::grid::{Grid, TimeGrid};
use crate::htransform::{
    bernstein_check, forward, forward_at, forward_closure, hausdorff_young_check, inverse, localize,
    plancherel_constant, plancherel_constant_d, plancherel_ratio, sobolev_norm_spectral, translate_identity_check,
    ClosureQuadrature, SpectralField,
};
use crate::propagators::{
    duhamel, schrodinger_decay_probe, schrodinger_evolve, schrodinger_phase, transport_reference, wave_at,
    wave_branches, wave_decay_probe, wave_energy, wave_evolve, PropagatorError, TransportDatum,
};
use crate::report::{Basis, Check, Expected, Series, SuiteReport, VerificationReport};
use crate::restriction::{
    admissible, g_function, g_r, g_sigma, restrict_sigma, restrict_sigma_grid, restrict_sphere, sigma_extension,
    sigma_ratio_scan, spacetime_inner, sphere_extension, sphere_pair, sphere_ratio, sphere_ratio_scan, strichartz_scan,
    EnvelopeRanges, Equation, RestrictOptions, ScanGrid, SigmaMeasure, SigmaVariant, SphereMeasure, StrichartzSpec,
    SurfaceValues,
};
use crate::specfun::eigenvalue;
use crate::twisted::{est2_scan, hardy_scan, l2_algebra_slope, orth_check, PlanarGrid};
use crate::window::{ball_cutoff, Bump, Localizer};

pub const SUITES: [&str; 15] = [
    "plancherel",
    "roundtrip",
    "transport",
    "bernstein",
    "hausdorff-young",
    "gfun",
    "sphere",
    "sigma",
    "est2",
    "orth",
    "hardy",
    "strichartz-scaling",
    "wave-energy",
    "decay-probe",
    "translate-identity",
];

/// Samples per refinement scan.
pub const SCAN_SAMPLES: usize = 200;

#[derive(Debug, Error, PartialEq)]
pub enum SuiteError {
    #[error("unknown suite {0:?}; expected one of {list} or all", list = SUITES.join(", "))]
    Unknown(String),
}

pub fn run_suite(name: &str, cfg: &RunConfig) -> Result<SuiteReport, SuiteError> {
    let (checks, series) = match name {
        "plancherel" => (plancherel(cfg), vec![]),
        "roundtrip" => (roundtrip(cfg), vec![]),
        "transport" => (transport(cfg), vec![]),
        "bernstein" => bernstein(cfg),
        "hausdorff-young" => (hausdorff_young(cfg), vec![]),
        "gfun" => (gfun(cfg), vec![]),
        "sphere" => sphere(cfg),
        "sigma" => sigma(cfg),
        "est2" => est2(cfg),
        "orth" => orth(cfg),
        "hardy" => (hardy(cfg), vec![]),
        "strichartz-scaling" => (strichartz(cfg), vec![]),
        "wave-energy" => (wave_energy_suite(cfg), vec![]),
        "decay-probe" => decay(cfg),
        "translate-identity" => (translate(cfg), vec![]),
        other => return Err(SuiteError::Unknown(other.into())),
    };
    Ok(SuiteReport::new(name, checks, series))
}

/// Runs one suite, or every suite for `"all"`.
pub fn run(name: &str, cfg: &RunConfig) -> Result<VerificationReport, SuiteError> {
    let suites = if name == "all" {
        SUITES
            .iter()
            .map(|s| run_suite(s, cfg))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        vec![run_suite(name, cfg)?]
    };
    Ok(VerificationReport::new(cfg.clone(), suites))
}

/// Evaluates a fallible measurement; errors become failing checks.
fn attempt<T, E: Display>(
    name: impl Into<String>,
    expected: Expected,
    basis: Basis,
    r: Result<T, E>,
    f: impl FnOnce(T) -> Check,
) -> Check {
    match r {
        Ok(v) => f(v),
        Err(e) => Check::failed(name, expected, basis, e.to_string()),
    }
}

fn rel_value(value: f64, tolerance: f64) -> Expected {
    Expected::Value {
        value,
        tolerance,
        relative: true,
    }
}

fn at_most(bound: f64) -> Expected {
    Expected::AtMost { bound }
}

fn flag(ok: bool) -> f64 {
    if ok {
        1.0
    } else {
        0.0
    }
}

fn gaussian_suite() -> [GaussianPacket; 3] {
    [
        GaussianPacket::new(1.0, 4.0, 2.0),
        GaussianPacket::new(0.5, 4.0, 3.0),
        GaussianPacket::new(2.0, 5.0, -2.5),
    ]
}

/// Largest deviation of `theta` from the closed form over `ell <= 16`, relative to its peak.
fn closed_form_error(theta: &SpectralField, p: &GaussianPacket) -> f64 {
    let g = &theta.grid;
    let (mut worst, mut scale): (f64, f64) = (0.0, 0.0);
    for ell in 0..=16.min(theta.l_max) {
        for m in 0..g.n_s() {
            let l = g.s.lambda(m);
            if l == 0.0 {
                continue;
            }
            let e = p.spectrum(ell, l, g.d);
            worst = worst.max((theta.at(ell, m) - e).norm());
            scale = scale.max(e.norm());
        }
    }
    worst / scale
}

fn plancherel(cfg: &RunConfig) -> Vec<Check> {
    let tol = &cfg.tolerances;
    let mut out = Vec::new();
    for d in [1, 2] {
        let g = cfg.grid_in(d);
        let c = plancherel_constant(d);
        // the ratio farthest from the constant over the suite
        let ratios: Vec<f64> = gaussian_suite()
            .iter()
            .map(|p| {
                let f = p.field(&g);
                let theta = match cfg.quadrature_mode {
                    QuadratureMode::Grid => forward(&f, cfg.l_max),
                    QuadratureMode::Closure => forward_closure(
                        |r, s| p.eval(r, s),
                        &g,
                        cfg.l_max,
                        ClosureQuadrature {
                            nodes: (cfg.l_max + 16).max(48),
                            decay: p.a,
                        },
                    ),
                };
                plancherel_ratio(&f, &theta)
            })
            .collect();
        let worst = ratios
            .iter()
            .copied()
            .fold(c, |a, r| if (r - c).abs() > (a - c).abs() { r } else { a });
        out.push(Check::value(
            format!("plancherel-ratio-d{d}"),
            worst,
            c,
            tol.plancherel,
            Basis::Analytic,
        ));
    }
    let p = GaussianPacket::new(1.0, 3.0, 1.5);
    for d in [1, 2] {
        let g = cfg.grid_in(d);
        let theta = forward_closure(|r, s| p.eval(r, s), &g, 16, ClosureQuadrature::default());
        out.push(Check::at_most(
            format!("closed-form-closure-d{d}"),
            closed_form_error(&theta, &p),
            tol.closed_form,
            Basis::Oracle,
        ));
        let q = gaussian_suite()[0];
        let theta = forward(&q.field(&g), cfg.l_max.max(16));
        out.push(Check::at_most(
            format!("closed-form-grid-d{d}"),
            closed_form_error(&theta, &q),
            tol.closed_form,
            Basis::Oracle,
        ));
    }
    out
}

fn roundtrip(cfg: &RunConfig) -> Vec<Check> {
    let tol = cfg.tolerances.round_trip;
    let mut out = Vec::new();
    for d in [1, 2] {
        let g = cfg.grid_in(d);
        let worst = gaussian_suite()
            .iter()
            .map(|p| {
                let f = localize(&p.field(&g), cfg.window.localizer(), cfg.l_max);
                inverse(&forward(&f, cfg.l_max))
                    .relative_l2_error(&f)
                    .unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max);
        out.push(Check::at_most(
            format!("inverse-forward-d{d}"),
            worst,
            tol,
            Basis::Identity,
        ));
    }
    let g = cfg.grid_in(1);
    let bump = Bump::default();
    let theta = SpectralField::from_fn(g.clone(), 8, |ell, l| {
        Complex64::new(
            bump.eval(l.abs()) / (1.0 + ell as f64),
            0.2 * ell as f64 * bump.eval(l.abs()),
        )
    });
    let again = forward(&inverse(&theta), 8);
    let e = again
        .sub(&theta)
        .map(|x| x.lp_norm(2.0) / theta.lp_norm(2.0))
        .unwrap_or(f64::INFINITY);
    out.push(Check::at_most("forward-inverse-d1", e, tol, Basis::Identity));

    let f = gaussian_suite()[0].field(&g);
    let bytes = encode(&Stored::Radial(f.clone()));
    let same = matches!(decode(&bytes), Ok(Stored::Radial(h)) if h == f);
    out.push(Check::value(
        "container-bit-exact",
        flag(same),
        1.0,
        0.0,
        Basis::Identity,
    ));
    out
}

fn transport_grid(d: usize) -> Grid {
    Grid::new(d, 96, 10.0, 256, 40.0)
}

fn transport(cfg: &RunConfig) -> Vec<Check> {
    let tol = &cfg.tolerances;
    let mut out = Vec::new();
    let (mut shift_err, mut direct_err, mut norm_drift): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for d in [1, 2] {
        let g = transport_grid(d);
        for ell in 0..=2 {
            let datum = TransportDatum::new(ell);
            let u0 = match datum.spectrum(&g, 8) {
                Ok(theta) => inverse(&theta),
                Err(e) => {
                    out.push(Check::failed(
                        "transport-datum",
                        at_most(0.0),
                        Basis::Identity,
                        e.to_string(),
                    ));
                    continue;
                }
            };
            let v = datum.velocity(d);
            // t = 0.3 is off the lattice; the norm check uses a shift of four grid steps
            let t_norms = 4.0 * g.s.step() / v;
            let u = schrodinger_evolve(
                &u0,
                &TimeGrid {
                    nodes: vec![0.3, t_norms],
                },
                8,
            );
            let u1 = u.slice(0);
            shift_err = shift_err.max(
                u1.relative_l2_error(&s_translate(&u0, v * 0.3))
                    .unwrap_or(f64::INFINITY),
            );
            direct_err = direct_err.max(
                u1.relative_l2_error(&transport_reference(&datum, &g, 0.3))
                    .unwrap_or(f64::INFINITY),
            );
            let u2 = u.slice(1);
            for p in [1.0, 2.0, f64::INFINITY] {
                let (a, b) = (u0.lp_norm(p).unwrap_or(f64::NAN), u2.lp_norm(p).unwrap_or(f64::NAN));
                norm_drift = norm_drift.max((b / a - 1.0).abs());
            }
        }
    }
    out.push(Check::at_most(
        "shift-by-4t(2l+d)",
        shift_err,
        tol.transport,
        Basis::Analytic,
    ));
    out.push(Check::at_most(
        "shift-vs-direct-sum",
        direct_err,
        tol.transport,
        Basis::Oracle,
    ));
    out.push(Check::at_most(
        "lp-norms-invariant",
        norm_drift,
        tol.transport_norms,
        Basis::Analytic,
    ));
    out.push(Check::value(
        "shift-at-t0.3-d1-l0",
        TransportDatum::new(0).velocity(1) * 0.3,
        1.2,
        1e-15,
        Basis::Analytic,
    ));

    // unitarity over 64 steps on the spectral side
    let g = transport_grid(1);
    let drift = match TransportDatum::new(1).spectrum(&g, 8) {
        Ok(theta) => {
            let m0 = theta.weighted_mass(|_, _| 1.0);
            (1..=64)
                .map(|k| (schrodinger_phase(&theta, 0.37 * k as f64).weighted_mass(|_, _| 1.0) / m0 - 1.0).abs())
                .fold(0.0, f64::max)
        }
        Err(_) => f64::NAN,
    };
    out.push(Check::at_most(
        "schrodinger-unitarity",
        drift,
        tol.unitarity,
        Basis::Identity,
    ));

    let order = duhamel_order();
    out.push(attempt(
        "duhamel-order",
        Expected::AtLeast {
            bound: tol.duhamel_order,
        },
        Basis::Oracle,
        order,
        |o| Check::at_least("duhamel-order", o, tol.duhamel_order, Basis::Oracle),
    ));
    out
}

/// Observed order of the Duhamel integral on a manufactured solution
/// `u(t) = a(t) v` with `a = sin t + t^2`.
fn duhamel_order() -> Result<f64, PropagatorError> {
    let g = Grid::new(1, 48, 10.0, 128, 40.0);
    let bump = Bump::new(0.5, 1.0);
    let base = SpectralField::from_fn(g.clone(), 2, |ell, l| {
        Complex64::new(bump.eval(l) / (1.0 + ell as f64), 0.0)
    });
    let a = |t: f64| t.sin() + t * t;
    let da = |t: f64| t.cos() + 2.0 * t;
    let ns = g.n_s();
    let error = |n: usize| -> Result<f64, PropagatorError> {
        let times = TimeGrid::uniform(0.0, 1.0, n + 1);
        let slices = times
            .nodes
            .iter()
            .map(|&t| {
                let mut f = base.clone();
                for ell in 0..=2 {
                    for m in 0..ns {
                        let mu = base.mu(ell, m);
                        f.values[ell * ns + m] *= Complex64::new(mu * a(t), da(t));
                    }
                }
                inverse(&f)
            })
            .collect();
        let src = SpaceTimeField::from_slices(times, slices)?;
        let u = duhamel(&RadialField::zeros(g.clone()), &src, 2)?;
        let exact = inverse(&base).scale(Complex64::new(a(1.0), 0.0));
        Ok(u.slice(n).relative_l2_error(&exact)?)
    };
    let (e1, e2, e3) = (error(32)?, error(64)?, error(128)?);
    Ok(((e1 / e2).log2() + (e2 / e3).log2()) / 2.0)
}

fn bernstein(cfg: &RunConfig) -> (Vec<Check>, Vec<Series>) {
    let tol = &cfg.tolerances;
    let mut out = Vec::new();
    let mut series = Vec::new();
    let g = Grid::new(1, 128, 12.0, 256, 40.0);
    let window = Localizer::Ball { scale: 4.0 };
    let base = localize(&GaussianPacket::new(1.0, 4.0, 1.0).field(&g), window, 48);
    let ladder = [1.0, 2.0, 4.0, 8.0];
    match bernstein_check(&base, window, 2.0, f64::INFINITY, &ladder, 48) {
        Ok(r) => {
            out.push(Check::value(
                "bernstein-exponent-2-inf",
                r.fitted_exponent,
                r.expected_exponent,
                tol.exponent,
                Basis::Property,
            ));
            out.push(Check::at_most("bernstein-leakage", r.leakage, 1e-10, Basis::Identity));
            series.push(Series {
                name: "bernstein-ratio".into(),
                x: r.scales,
                y: r.ratios,
            });
        }
        Err(e) => out.push(Check::failed(
            "bernstein-exponent-2-inf",
            at_most(0.0),
            Basis::Property,
            e.to_string(),
        )),
    }

    // a single (ell = 0, lambda = 1) mode; S = 16 pi puts lambda = 1 on the grid
    let g = Grid::new(1, 64, 10.0, 256, 16.0 * PI);
    let m = g.s.zero_index() + 16;
    let l = g.s.lambda(m);
    let theta = SpectralField::from_fn(g, 2, |ell, x| {
        Complex64::new(if ell == 0 && x == l { 1.0 } else { 0.0 }, 0.0)
    });
    for (sigma, want) in [(1.0, 2.0), (2.0, 4.0)] {
        let name = format!("eigenvalue-factor-sigma{sigma}");
        let r = sobolev_norm_spectral(&theta, sigma).and_then(|a| sobolev_norm_spectral(&theta, 0.0).map(|b| a / b));
        out.push(attempt(
            name.clone(),
            rel_value(want, tol.eigenvalue),
            Basis::Analytic,
            r,
            |x| Check::value(name, x, want, tol.eigenvalue, Basis::Analytic),
        ));
    }
    (out, series)
}

fn hausdorff_young(cfg: &RunConfig) -> Vec<Check> {
    let g = cfg.grid_in(1);
    let mut out = Vec::new();
    for e in [1.0, 4.0 / 3.0, 2.0] {
        let mut worst: f64 = 0.0;
        let mut failure = None;
        for p in gaussian_suite() {
            match hausdorff_young_check(&p.field(&g), e, cfg.l_max) {
                Ok(h) => worst = worst.max(if e == 2.0 { (h.ratio - 1.0).abs() } else { h.ratio }),
                Err(err) => failure = Some(err.to_string()),
            }
        }
        let (name, expected, basis) = if e == 2.0 {
            (
                "hausdorff-young-p2-equality".to_string(),
                at_most(cfg.tolerances.plancherel),
                Basis::Identity,
            )
        } else {
            (format!("hausdorff-young-p{e:.4}"), at_most(1.0 + 1e-9), Basis::Property)
        };
        out.push(match failure {
            Some(reason) => Check::failed(name, expected, basis, reason),
            None => Check::new(name, worst, expected, basis),
        });
    }
    let refused = hausdorff_young_check(&gaussian_suite()[0].field(&g), 3.0, 8).is_err();
    out.push(Check::value(
        "p-above-2-refused",
        flag(refused),
        1.0,
        0.0,
        Basis::Identity,
    ));
    out
}

fn gfun(cfg: &RunConfig) -> Vec<Check> {
    let tol = &cfg.tolerances;
    let l_max = 4 * cfg.l_max;
    let mut out = Vec::new();
    let g0 = g_function(0.0, 0.0, 1, l_max);
    out.push(Check::value("g-origin-d1", g0.value.re, 0.25, tol.g_origin, Basis::Oracle).with_error(g0.tail_bound));

    let mut sup: f64 = 0.0;
    for &r in &[0.0, 0.3, 1.0, 2.5, 6.0] {
        for &s in &[-20.0, -1.0, 0.0, 0.7, 5.0] {
            let v = g_function(r, s, 1, l_max).value;
            sup = sup.max(if v.re.is_finite() && v.im.is_finite() {
                v.norm()
            } else {
                f64::INFINITY
            });
        }
    }
    out.push(Check::at_most(
        "g-bounded-by-origin",
        sup / g0.value.re,
        1.0 + 1e-9,
        Basis::Property,
    ));

    let mut worst: f64 = 0.0;
    for d in [1, 2] {
        for &r in &[0.5, 2.0, 4.0] {
            for &(rho, s) in &[(0.0, 0.0), (0.4, 1.3), (1.7, -2.2), (3.0, 6.0)] {
                let a = g_r(rho, s, r, d, 128).value.re;
                let b = r.powi(d as i32) * g_function(r.sqrt() * rho, r * s, d, 128).value.re;
                worst = worst.max((a - b).abs());
            }
        }
    }
    out.push(Check::at_most("g-r-scaling", worst, tol.g_scaling, Basis::Analytic));

    // <d sigma, theta_f> = plancherel_constant(d) int f G for a real radial f
    let p = GaussianPacket::new(1.0, 2.0, 0.0);
    let g = Grid::new(1, 40, 7.0, 64, 16.0);
    let f = p.field(&g);
    let gf = RadialField::from_fn(g, |r, s| g_function(r, s, 1, 200).value);
    let lhs = sphere_pair(|ell, l| p.spectrum(ell, l, 1), &SphereMeasure::unit(), 1, 200).value;
    let e = f
        .inner(&gf)
        .map(|x| (lhs - x * plancherel_constant(1)).norm() / lhs.norm())
        .unwrap_or(f64::NAN);
    out.push(Check::at_most("g-pairs-with-sphere", e, 1e-6, Basis::Identity));
    out
}

fn one(_: usize, _: f64) -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Surface data with a fixed deterministic pattern.
fn pattern(r: &SurfaceValues, seed: u64) -> SurfaceValues {
    let mut v = r.clone();
    for (k, x) in v.values.iter_mut().enumerate() {
        let t = (k as f64 + 1.0) * (seed as f64 + 0.618);
        *x = Complex64::new(t.sin(), (1.7 * t).cos());
    }
    v
}

fn scan_family(seed: u64) -> PacketFamily {
    PacketFamily {
        seed,
        a: (0.5, 2.0),
        sigma: (1.0, 3.0),
        kappa: (-1.5, 1.5),
        s0: (-1.0, 1.0),
    }
}

fn sphere(cfg: &RunConfig) -> (Vec<Check>, Vec<Series>) {
    let tol = &cfg.tolerances;
    let mut out = Vec::new();
    let total = sphere_pair(one, &SphereMeasure::unit(), 1, 500);
    out.push(
        Check::value(
            "sphere-total-d1",
            total.value.re,
            PI * PI / 4.0,
            tol.sphere_total,
            Basis::Analytic,
        )
        .with_error(total.tail_bound),
    );
    let mut worst: f64 = 0.0;
    for d in [1, 2] {
        let b = sphere_pair(one, &SphereMeasure::unit(), d, 500).value.re;
        for r in [0.5, 4.0] {
            let a = sphere_pair(one, &SphereMeasure::new(r).expect("positive"), d, 500)
                .value
                .re;
            worst = worst.max((a / b / r.powi(d as i32) - 1.0).abs());
        }
    }
    out.push(Check::at_most("sphere-r-scaling", worst, 1e-12, Basis::Analytic));

    // restriction of a packet against its closed form
    let p = GaussianPacket {
        a: 1.0,
        sigma: 3.0,
        kappa: 0.4,
        s0: 0.5,
        phase: 0.3,
    };
    let mut worst: f64 = 0.0;
    for d in [1, 2] {
        let f = p.field(&Grid::new(d, 96, 10.0, 256, 32.0));
        let opts = RestrictOptions {
            l_max: 24,
            ..Default::default()
        };
        let scale = p.spectrum(0, 2.0 / d as f64, d).norm();
        match restrict_sphere(&f, &SphereMeasure::new(2.0).expect("positive"), &opts) {
            Ok(r) => {
                for (pt, v) in r.points.iter().zip(&r.values) {
                    worst = worst.max((v - p.spectrum(pt.ell, pt.lambda, d)).norm() / scale);
                }
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    out.push(Check::at_most("restriction-closed-form", worst, 1e-7, Basis::Oracle));

    let g = Grid::new(1, 32, 7.0, 64, 16.0);
    let f = GaussianPacket {
        a: 0.8,
        sigma: 2.0,
        kappa: 0.7,
        s0: 0.3,
        phase: 1.0,
    }
    .field(&g);
    let dual = restrict_sphere(
        &f,
        &SphereMeasure::new(1.5).expect("positive"),
        &RestrictOptions {
            l_max: 12,
            ..Default::default()
        },
    )
    .map(|r| {
        let v = pattern(&r, 0);
        let lhs = r.pair(&v).expect("same points");
        let rhs = f.inner(&sphere_extension(&v, &g)).expect("same grid") * plancherel_constant(1);
        (lhs - rhs).norm() / lhs.norm()
    });
    out.push(attempt(
        "sphere-duality",
        at_most(tol.duality),
        Basis::Identity,
        dual,
        |e| Check::at_most("sphere-duality", e, tol.duality, Basis::Identity),
    ));

    let opts = RestrictOptions {
        l_max: 16,
        edge_tolerance: 1e-6,
    };
    let shifted = s_translate(&f, 3.0 * g.s.step());
    let inv = sphere_ratio(&f, &SphereMeasure::unit(), &opts)
        .and_then(|a| sphere_ratio(&shifted, &SphereMeasure::unit(), &opts).map(|b| (a / b - 1.0).abs()));
    out.push(attempt(
        "sphere-translation-invariance",
        at_most(tol.translation),
        Basis::Identity,
        inv,
        |e| Check::at_most("sphere-translation-invariance", e, tol.translation, Basis::Identity),
    ));

    // Knapp direction: horizontal dilations over four decades stay bounded
    let mut knapp = Vec::new();
    let mut scales = Vec::new();
    for k in 0..=8 {
        let a = 10f64.powf(-2.0 + 0.5 * k as f64);
        let g = Grid::new(1, 96, 8.0 / a.sqrt(), 128, 20.0);
        let f = GaussianPacket {
            a,
            sigma: 2.0,
            kappa: 0.5,
            s0: 0.0,
            phase: 0.0,
        }
        .field(&g);
        let r = sphere_ratio(
            &f,
            &SphereMeasure::unit(),
            &RestrictOptions {
                l_max: 256,
                edge_tolerance: 1e-6,
            },
        );
        knapp.push(r.unwrap_or(f64::INFINITY));
        scales.push(a);
    }
    let hi = knapp.iter().copied().fold(0.0, f64::max);
    out.push(Check::at_most("knapp-ladder-sup", hi, 10.0, Basis::Property));

    let mut series = vec![Series {
        name: "knapp-ratio".into(),
        x: scales,
        y: knapp,
    }];
    let coarse = ScanGrid {
        n_rho: 32,
        r_max: 8.0,
        n_s: 64,
        s_half_width: 16.0,
        l_max: 16,
    };
    let scan = sphere_ratio_scan(
        &scan_family(cfg.seed),
        SCAN_SAMPLES,
        &SphereMeasure::unit(),
        cfg.d,
        coarse,
    );
    out.push(attempt(
        "sphere-ratio-refinement",
        at_most(tol.refinement),
        Basis::Property,
        scan,
        |s| {
            series.push(Series {
                name: "sphere-ratio-coarse-vs-fine".into(),
                x: s.coarse.clone(),
                y: s.fine.clone(),
            });
            Check::at_most(
                "sphere-ratio-refinement",
                s.max_relative_change,
                tol.refinement,
                Basis::Property,
            )
            .with_note(format!("sup ratio {:.6} coarse, {:.6} fine", s.sup_coarse, s.sup_fine))
        },
    ));
    (out, series)
}

/// A datum built from its spectrum (low `ell`, `|lambda| >= 1/4`, `mu <= 16`).
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

fn sigma(cfg: &RunConfig) -> (Vec<Check>, Vec<Series>) {
    let tol = &cfg.tolerances;
    let mut out = Vec::new();

    // free evolution restricts to half its initial spectrum and extends back to u / (2 pi)
    let g = Grid::new(1, 64, 12.0, 128, 24.0);
    let (u0, theta0) = localized_datum(&g);
    let times = TimeGrid::uniform(0.0, 0.5, 21);
    let u = schrodinger_evolve(&u0, &times, 32);
    let mu = SigmaMeasure::new(SigmaVariant::Schrodinger).with_window(32.0);
    let opts = RestrictOptions {
        l_max: 32,
        edge_tolerance: 1e-4,
    };
    let scale = theta0.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let m_of = |l: f64| ((l / g.s.lambda_step()).round() as i64 + (g.n_s() / 2) as i64) as usize;
    let matched = restrict_sigma_grid(&u, &mu, &opts).map(|r| {
        r.points
            .iter()
            .zip(&r.values)
            .map(|(p, v)| (v - theta0.at(p.ell, m_of(p.lambda)) * 0.5).norm() / scale)
            .fold(0.0, f64::max)
    });
    out.push(attempt(
        "free-flow-restriction",
        at_most(1e-6),
        Basis::Identity,
        matched,
        |e| Check::at_most("free-flow-restriction", e, 1e-6, Basis::Identity),
    ));

    let times = TimeGrid::uniform(0.0, 0.3, 4);
    let u = schrodinger_evolve(&u0, &times, 32);
    let ext = restrict_sigma_grid(&u, &mu, &opts)
        .map_err(|e| e.to_string())
        .and_then(|mut r| {
            for (p, v) in r.points.iter().zip(r.values.iter_mut()) {
                *v = theta0.at(p.ell, m_of(p.lambda));
            }
            let e = sigma_extension(&r, &g, &times).map_err(|e| e.to_string())?;
            let worst = (0..times.len())
                .map(|n| {
                    let want = u.slice(n).scale(Complex64::new(1.0 / (2.0 * PI), 0.0));
                    e.slice(n).relative_l2_error(&want).unwrap_or(f64::INFINITY)
                })
                .fold(0.0, f64::max);
            Ok::<f64, String>(worst)
        });
    out.push(attempt(
        "extension-is-free-flow",
        at_most(1e-5),
        Basis::Identity,
        ext,
        |e| Check::at_most("extension-is-free-flow", e, 1e-5, Basis::Identity),
    ));

    // duality in every variant, off-grid and on-grid
    let g = Grid::new(1, 24, 7.0, 48, 14.0);
    let times = TimeGrid::uniform(0.0, 2.0, 9);
    let st = SpaceTimePacket {
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
    let u = st.field(&g, &times);
    let opts = RestrictOptions {
        l_max: 8,
        edge_tolerance: 1e-6,
    };
    let mut worst: f64 = 0.0;
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
        for r in [restrict_sigma(&u, &mu, &opts), restrict_sigma_grid(&u, &mu, &opts)] {
            let e = r.map_err(|e| e.to_string()).and_then(|r| {
                let v = pattern(&r, 5);
                let lhs = r.pair(&v).map_err(|e| e.to_string())?;
                let ext = sigma_extension(&v, &g, &times).map_err(|e| e.to_string())?;
                let rhs = spacetime_inner(&u, &ext).map_err(|e| e.to_string())? * plancherel_constant_d(1);
                Ok::<f64, String>((lhs - rhs).norm() / lhs.norm())
            });
            worst = worst.max(e.unwrap_or(f64::INFINITY));
        }
    }
    out.push(Check::at_most("sigma-duality", worst, tol.duality, Basis::Identity));

    // off-grid values against a direct time quadrature of forward_at
    let mu = SigmaMeasure {
        variant: SigmaVariant::Schrodinger,
        window_scale: 1.0,
        alpha_nodes: 6,
    };
    let direct = restrict_sigma(
        &u,
        &mu,
        &RestrictOptions {
            l_max: 4,
            edge_tolerance: 1e-6,
        },
    )
    .map(|r| {
        let tw = times.trapezoid_weights();
        let mut worst: f64 = 0.0;
        for (p, v) in r.points.iter().zip(&r.values).step_by(7) {
            let mut want = Complex64::new(0.0, 0.0);
            for (n, (&t, &w)) in times.nodes.iter().zip(&tw).enumerate() {
                let line = forward_at(&u.slice(n), p.lambda, 4)
                    .map(|x| x[p.ell])
                    .unwrap_or(Complex64::new(f64::NAN, 0.0));
                want += line * Complex64::from_polar(w, -t * p.alpha);
            }
            worst = worst.max((v - want).norm() / want.norm().max(1e-3));
        }
        worst
    });
    out.push(attempt(
        "off-grid-vs-direct",
        at_most(1e-12),
        Basis::Oracle,
        direct,
        |e| Check::at_most("off-grid-vs-direct", e, 1e-12, Basis::Oracle),
    ));

    // G_Sigma on the axis against the direct measure sum
    let mu = SigmaMeasure::new(SigmaVariant::Schrodinger);
    let mut worst: f64 = 0.0;
    for &(t, s, d) in &[(0.0, 0.0, 1), (1.5, 2.0, 1), (-0.7, 0.5, 2)] {
        let e = g_sigma(t, 0.0, s, d, &mu, 256, 1e-9).map(|v| {
            let want = g_sigma_direct(t, s, d, 200_000);
            (v - want).norm() / want.norm()
        });
        worst = worst.max(e.unwrap_or(f64::INFINITY));
    }
    out.push(Check::at_most("g-sigma-vs-direct", worst, 1e-5, Basis::Oracle));

    // translation invariance
    let shifted = SpaceTimeField::from_slices(
        times.clone(),
        (0..times.len())
            .map(|n| s_translate(&u.slice(n), -5.0 * g.s.step()))
            .collect(),
    );
    let opts = RestrictOptions {
        l_max: 16,
        edge_tolerance: 1e-6,
    };
    let mu = SigmaMeasure::new(SigmaVariant::Schrodinger);
    let ratio = |v: &SpaceTimeField| crate::restriction::sigma_ratio(v, &mu, &opts);
    let inv = shifted.map_err(|e| e.to_string()).and_then(|v| {
        Ok::<f64, String>((ratio(&u).map_err(|e| e.to_string())? / ratio(&v).map_err(|e| e.to_string())? - 1.0).abs())
    });
    out.push(attempt(
        "sigma-translation-invariance",
        at_most(tol.translation),
        Basis::Identity,
        inv,
        |e| Check::at_most("sigma-translation-invariance", e, tol.translation, Basis::Identity),
    ));

    let mut series = Vec::new();
    let env = EnvelopeRanges {
        tc: (0.5, 1.5),
        tau: (0.5, 1.0),
        omega: (-1.0, 1.0),
        times: TimeGrid::uniform(0.0, 2.0, 9),
    };
    let coarse = ScanGrid {
        n_rho: 24,
        r_max: 7.0,
        n_s: 48,
        s_half_width: 14.0,
        l_max: 8,
    };
    let mu = SigmaMeasure {
        variant: SigmaVariant::Schrodinger,
        window_scale: 1.0,
        alpha_nodes: 8,
    };
    let scan = sigma_ratio_scan(
        &scan_family(cfg.seed.wrapping_add(1)),
        SCAN_SAMPLES,
        &env,
        &mu,
        cfg.d,
        coarse,
    );
    out.push(attempt(
        "sigma-ratio-refinement",
        at_most(tol.refinement),
        Basis::Property,
        scan,
        |s| {
            series.push(Series {
                name: "sigma-ratio-coarse-vs-fine".into(),
                x: s.coarse.clone(),
                y: s.fine.clone(),
            });
            Check::at_most(
                "sigma-ratio-refinement",
                s.max_relative_change,
                tol.refinement,
                Basis::Property,
            )
            .with_note(format!("sup ratio {:.6} coarse, {:.6} fine", s.sup_coarse, s.sup_fine))
        },
    ));
    (out, series)
}

/// `G_Sigma(t, 0, s)` as a direct sum over `ell` of Gauss–Legendre integrals
/// over the paraboloid, where the radial kernel equals the multiplicity.
fn g_sigma_direct(t: f64, s: f64, d: usize, l_max: usize) -> Complex64 {
    let (x, w) = crate::quad::gauss_legendre(200, 0.0, 1.0);
    let mu = SigmaMeasure::new(SigmaVariant::Schrodinger);
    let base: Vec<Complex64> = x
        .iter()
        .zip(&w)
        .map(|(&al, &wa)| Complex64::from_polar(wa * al.powi(d as i32) * mu.window(al), t * al))
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for ell in (0..=l_max).rev() {
        let c = SigmaMeasure::c(ell, d);
        let k = crate::specfun::multiplicity_f64(ell as u64, d).value * c.powi(d as i32 + 1);
        let line: Complex64 = x.iter().zip(&base).map(|(&al, b)| b * (2.0 * (s * al * c).cos())).sum();
        acc += line * k;
    }
    acc * (2f64.powi(d as i32 - 2) / PI.powi(d as i32 + 2))
}

fn est2(cfg: &RunConfig) -> (Vec<Check>, Vec<Series>) {
    let tol = cfg.tolerances.exponent;
    let g = PlanarGrid { n: 64, half_width: 8.0 };
    let lambdas = [0.5, 1.0, 2.0];
    let mut out = Vec::new();
    let mut series = Vec::new();
    for p in [1.0, 2.0] {
        let name = format!("est2-lambda-exponent-p{p}");
        let target = -2.0 / (p / (p - 1.0));
        out.push(attempt(
            name.clone(),
            rel_value(target, tol),
            Basis::Property,
            est2_scan(p, &[1, 2], &lambdas, g, cfg.seed),
            |r| {
                series.push(Series {
                    name: format!("est2-ratio-p{p}-ell1"),
                    x: lambdas.to_vec(),
                    y: r.ratios[0].clone(),
                });
                Check::new(
                    name,
                    r.lambda_exponent,
                    Expected::Value {
                        value: r.lambda_target,
                        tolerance: tol,
                        relative: false,
                    },
                    Basis::Property,
                )
            },
        ));
    }
    let small = PlanarGrid { n: 48, half_width: 6.0 };
    out.push(attempt(
        "l2-algebra-exponent",
        Expected::Value {
            value: -0.5,
            tolerance: tol,
            relative: false,
        },
        Basis::Property,
        l2_algebra_slope(&lambdas, small, cfg.seed),
        |(_, slope)| {
            Check::new(
                "l2-algebra-exponent",
                slope,
                Expected::Value {
                    value: -0.5,
                    tolerance: tol,
                    relative: false,
                },
                Basis::Property,
            )
        },
    ));
    (out, series)
}

fn orth(cfg: &RunConfig) -> (Vec<Check>, Vec<Series>) {
    let ells: Vec<usize> = (1..=64).collect();
    let r = orth_check(&ells, 7, cfg.d);
    let out = vec![
        Check::within("orth-off-diagonal-slope", r.slope, -1.3, -0.7, Basis::Property),
        Check::at_most("orth-level-trend", r.level_trend, 0.1, Basis::Property)
            .with_note(format!("sup of max(l,m) I(l,m) = {:.6}", r.sup_scaled)),
    ];
    let series = vec![
        Series {
            name: "orth-I(l,2l)".into(),
            x: ells.iter().map(|&l| l as f64).collect(),
            y: r.off_diagonal,
        },
        Series {
            name: "orth-level-sup".into(),
            x: r.levels.iter().map(|&l| l as f64).collect(),
            y: r.level_sup,
        },
    ];
    (out, series)
}

fn hardy(cfg: &RunConfig) -> Vec<Check> {
    let slack = cfg.tolerances.hardy_slack;
    [1.5, 2.0, 3.0]
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let name = format!("hardy-p{p}");
            let bound = p / (p - 1.0) + slack;
            attempt(
                name.clone(),
                at_most(bound),
                Basis::Analytic,
                hardy_scan(p, 1000, 2000, cfg.seed.wrapping_add(k as u64)),
                |s| {
                    Check::at_most(name, s.max_ratio, bound, Basis::Analytic)
                        .with_note(format!("{} of {} sequences", s.violations, s.count))
                },
            )
        })
        .collect()
}

fn strichartz(cfg: &RunConfig) -> Vec<Check> {
    let tol = cfg.tolerances.flatness;
    let mut out = Vec::new();
    for (eq, p, q) in [
        (Equation::Schrodinger, 2.0, 2.0),
        (Equation::Schrodinger, 2.0, f64::INFINITY),
        (Equation::Wave, 2.0, f64::INFINITY),
    ] {
        let name = format!(
            "flatness-{}-p{p}-q{q}",
            if eq == Equation::Wave { "wave" } else { "schrodinger" }
        );
        let spec = StrichartzSpec {
            equation: eq,
            p,
            q,
            ladder: vec![1.0, 2.0, 4.0],
            samples: 4,
            seed: cfg.seed,
            grid: Grid::new(cfg.d, 32, 8.0, 64, 16.0),
            times: TimeGrid::uniform(0.0, 1.0, 9),
            l_max: 16,
            ring_scale: 3.0,
        };
        out.push(attempt(
            name.clone(),
            at_most(tol),
            Basis::Analytic,
            strichartz_scan(&spec),
            |s| {
                Check::at_most(name, s.flatness, tol, Basis::Analytic)
                    .with_note(format!("max ratio {:.6}", s.max_ratio))
            },
        ));
    }
    let mismatches = admissibility_table()
        .iter()
        .filter(|&&(eq, d, p, q, ok)| admissible(eq, p, q, d).is_ok() != ok)
        .count();
    out.push(Check::value(
        "admissibility-table-mismatches",
        mismatches as f64,
        0.0,
        0.0,
        Basis::Analytic,
    ));
    out
}

/// `(equation, d, p, q, admissible)` worked out by hand from the two index conditions.
pub fn admissibility_table() -> Vec<(Equation, usize, f64, f64, bool)> {
    use Equation::*;
    let inf = f64::INFINITY;
    vec![
        (Schrodinger, 1, 2.0, 2.0, true),
        (Schrodinger, 1, 2.0, inf, true),
        (Schrodinger, 1, 4.0, 4.0, true),
        (Schrodinger, 1, 3.0, 2.0, false),
        (Schrodinger, 1, 1.5, inf, false),
        (Schrodinger, 2, 2.0, 2.0, true),
        (Schrodinger, 2, 2.0, inf, true),
        (Schrodinger, 2, 3.0, 2.0, false),
        (Wave, 1, 2.0, 2.0, false),
        (Wave, 1, 2.0, inf, true),
        (Wave, 1, 3.0, 3.0, true),
        (Wave, 1, 2.0, 8.0, false),
        (Wave, 2, 2.0, 2.0, false),
        (Wave, 2, 2.0, inf, true),
        (Wave, 2, 4.0, 4.0, true),
    ]
}

fn wave_energy_suite(cfg: &RunConfig) -> Vec<Check> {
    let tol = cfg.tolerances.energy;
    let g = transport_grid(1);
    let mut out = Vec::new();
    let data = TransportDatum::new(0)
        .spectrum(&g, 4)
        .and_then(|t0| TransportDatum::new(1).spectrum(&g, 4).map(|t1| (t0, t1)));
    let (theta0, mut theta1) = match data {
        Ok(x) => x,
        Err(e) => {
            return vec![Check::failed(
                "wave-energy-drift",
                at_most(tol),
                Basis::Identity,
                e.to_string(),
            )]
        }
    };
    theta1.multiply(|_, _| Complex64::new(0.0, 2.0));
    let drift = wave_branches(&theta0, &theta1).map(|b| {
        let (u, du) = wave_at(&b, 0.0);
        let e0 = wave_energy(&u, &du);
        (1..=64)
            .map(|k| {
                let (u, du) = wave_at(&b, 0.37 * k as f64);
                (wave_energy(&u, &du) / e0 - 1.0).abs()
            })
            .fold(0.0, f64::max)
    });
    out.push(attempt(
        "wave-energy-drift",
        at_most(tol),
        Basis::Identity,
        drift,
        |e| Check::at_most("wave-energy-drift", e, tol, Basis::Identity),
    ));

    let half = wave_branches(&theta0, &SpectralField::zeros(g.clone(), 4))
        .map(|b| b.plus.values.iter().zip(&theta0.values).all(|(p, t)| *p == t * 0.5) && b.plus == b.minus);
    out.push(attempt(
        "zero-velocity-even-split",
        rel_value(1.0, 0.0),
        Basis::Identity,
        half,
        |ok| Check::value("zero-velocity-even-split", flag(ok), 1.0, 0.0, Basis::Identity),
    ));

    let g = Grid::new(1, 32, 8.0, 64, 10.0);
    let f = RadialField::from_fn(g, |r, s| Complex64::new((-r * r - s * s).exp(), 0.0));
    let refused = matches!(
        wave_evolve(&f, &f, &TimeGrid { nodes: vec![1.0] }, 8),
        Err(PropagatorError::Refused { ref bins, .. }) if !bins.is_empty()
    );
    out.push(Check::value(
        "origin-mass-refused",
        flag(refused),
        1.0,
        0.0,
        Basis::Identity,
    ));
    out
}

fn decay(cfg: &RunConfig) -> (Vec<Check>, Vec<Series>) {
    let tol = &cfg.tolerances;
    let mut out = Vec::new();
    let mut series = Vec::new();
    let ladder: Vec<f64> = (0..=6).map(|k| 2f64.powi(k)).collect();

    // ring datum at lambda in [256, 1024]: equivalent by scaling to a unit ring over t in [64, 4096]
    let g = Grid::new(1, 32, 0.45, 8192, 8.0);
    let datum = TransportDatum {
        ell: 0,
        profile: Bump::new(256.0, 1024.0),
    };
    let wave = datum
        .spectrum(&g, 2)
        .and_then(|theta| wave_decay_probe(&inverse(&theta), &RadialField::zeros(g.clone()), &ladder, 2));
    out.push(attempt(
        "wave-decay-exponent",
        at_most(tol.wave_decay),
        Basis::Property,
        wave,
        |r| {
            series.push(Series {
                name: "wave-sup".into(),
                x: r.times.clone(),
                y: r.sup_norms.clone(),
            });
            Check::at_most(
                "wave-decay-exponent",
                r.fitted_exponent,
                tol.wave_decay,
                Basis::Property,
            )
        },
    ));

    let g = Grid::new(1, 32, 6.0, 1024, 128.0);
    let schr = TransportDatum::new(0)
        .spectrum(&g, 2)
        .and_then(|theta| schrodinger_decay_probe(&inverse(&theta), &ladder, 2));
    let expected = Expected::Value {
        value: 0.0,
        tolerance: tol.schrodinger_decay,
        relative: false,
    };
    out.push(attempt(
        "schrodinger-decay-exponent",
        expected,
        Basis::Property,
        schr,
        |r| {
            series.push(Series {
                name: "schrodinger-sup".into(),
                x: r.times.clone(),
                y: r.sup_norms.clone(),
            });
            Check::new(
                "schrodinger-decay-exponent",
                r.fitted_exponent,
                expected,
                Basis::Property,
            )
        },
    ));
    (out, series)
}

fn translate(cfg: &RunConfig) -> Vec<Check> {
    let g = Grid::new(1, 96, 10.0, 256, 16.0);
    let p = GaussianPacket::new(0.6, 2.0, 1.0);
    let tol = 1e-6;
    let _ = cfg;
    let mut worst: f64 = 0.0;
    for (y0, s0) in [([0.0, 0.0], 0.7), ([0.4, -0.3], 0.0), ([0.2, 0.5], -0.4)] {
        let e = translate_identity_check(|r, s| p.eval(r, s), &g, y0, s0, 1, 1.0).map(|t| t.relative_error);
        worst = worst.max(e.unwrap_or(f64::INFINITY));
    }
    vec![Check::at_most("translation-identity", worst, tol, Basis::Identity)]
}
