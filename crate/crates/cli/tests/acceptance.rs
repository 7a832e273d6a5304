//! Acceptance criteria 1–16. Thresholds are written out here rather than
//! read from the config, so loosening a default cannot loosen this target.
//!
//! One PASS/FAIL line per criterion goes straight to stdout, so it shows
//! up in a plain `cargo test` run.

use std::f64::consts::PI;
use std::io::Write;
use std::process::Command;
use std::time::Instant;

use hh_core::config::RunConfig;
use hh_core::htransform::{forward, plancherel_constant, plancherel_ratio};
use hh_core::report::SuiteReport;
use hh_core::suites::run_suite;
use hh_core::GaussianPacket;

struct Ledger {
    lines: Vec<(usize, bool, String)>,
}

impl Ledger {
    fn record(&mut self, n: usize, pass: bool, detail: String) {
        let line = format!("criterion {n:>2}: {} {detail}", if pass { "PASS" } else { "FAIL" });
        // bypasses the test harness capture
        let _ = writeln!(std::io::stdout().lock(), "{line}");
        self.lines.push((n, pass, line));
    }
}

fn suite(name: &str) -> SuiteReport {
    run_suite(name, &RunConfig::default()).expect("known suite")
}

fn measured(r: &SuiteReport, check: &str) -> f64 {
    r.check(check)
        .unwrap_or_else(|| panic!("{} has no check {check}", r.suite))
        .measured
}

fn c1_plancherel(l: &mut Ledger) {
    let cfg = RunConfig::default();
    let packets = [
        GaussianPacket::new(1.0, 4.0, 2.0),
        GaussianPacket::new(0.5, 4.0, 3.0),
        GaussianPacket::new(2.0, 5.0, -2.5),
    ];
    let mut ok = true;
    let mut detail = String::new();
    for d in [1, 2] {
        let start = Instant::now();
        let g = cfg.grid_in(d);
        let worst = packets
            .iter()
            .map(|p| {
                let f = p.field(&g);
                (plancherel_ratio(&f, &forward(&f, cfg.l_max)) / plancherel_constant(d) - 1.0).abs()
            })
            .fold(0.0, f64::max);
        let secs = start.elapsed().as_secs_f64();
        ok &= worst <= 1e-6 && secs < 10.0;
        detail += &format!("d={d}: rel err {worst:.2e} in {secs:.2} s; ");
    }
    assert!((plancherel_constant(1) - PI * PI).abs() < 1e-14);
    assert!((plancherel_constant(2) - PI.powi(3) / 2.0).abs() < 1e-14);
    l.record(1, ok, detail);
}

fn run_all(l: &mut Ledger) {
    c1_plancherel(l);

    let r = suite("roundtrip");
    let (a, b) = (measured(&r, "inverse-forward-d1"), measured(&r, "inverse-forward-d2"));
    l.record(
        2,
        a <= 1e-6 && b <= 1e-6,
        format!("round trip {a:.2e} (d=1), {b:.2e} (d=2)"),
    );

    let p = suite("plancherel");
    let (a, b) = (
        measured(&p, "closed-form-closure-d1"),
        measured(&p, "closed-form-closure-d2"),
    );
    l.record(
        3,
        a <= 1e-8 && b <= 1e-8,
        format!("closure vs closed form {a:.2e} (d=1), {b:.2e} (d=2)"),
    );

    let t = suite("transport");
    let (shift, direct, norms) = (
        measured(&t, "shift-by-4t(2l+d)"),
        measured(&t, "shift-vs-direct-sum"),
        measured(&t, "lp-norms-invariant"),
    );
    l.record(
        4,
        shift <= 1e-8 && direct <= 1e-8 && norms <= 1e-4,
        format!("shift {shift:.2e}, direct {direct:.2e}, L^p drift {norms:.2e}"),
    );

    let b = suite("bernstein");
    let e = measured(&b, "eigenvalue-factor-sigma2");
    l.record(5, (e - 4.0).abs() <= 1e-3 * 4.0, format!("factor at sigma=2: {e:.12}"));

    let w = suite("wave-energy");
    let (u, en) = (measured(&t, "schrodinger-unitarity"), measured(&w, "wave-energy-drift"));
    l.record(
        6,
        u <= 1e-10 && en <= 1e-10,
        format!("unitarity {u:.2e}, wave energy {en:.2e} over 64 steps"),
    );

    let o = measured(&t, "duhamel-order");
    l.record(7, o >= 1.9, format!("order {o:.4}"));

    let g = suite("gfun");
    let (g0, sup, sc) = (
        measured(&g, "g-origin-d1"),
        measured(&g, "g-bounded-by-origin"),
        measured(&g, "g-r-scaling"),
    );
    l.record(
        8,
        (g0 - 0.25).abs() <= 1e-6 && sup.is_finite() && sup <= 1.0 + 1e-9 && sc <= 1e-10,
        format!("G(0,0) = {g0:.10}, sup|G|/G(0,0) = {sup:.6}, G_R identity {sc:.2e}"),
    );

    let s = suite("sphere");
    let (tot, rs) = (measured(&s, "sphere-total-d1"), measured(&s, "sphere-r-scaling"));
    l.record(
        9,
        (tot - PI * PI / 4.0).abs() <= 1e-6 * PI * PI / 4.0 && rs <= 1e-12,
        format!("<dsigma,1> = {tot:.10}, R^d deviation {rs:.2e}"),
    );

    let or = suite("orth");
    let (slope, trend) = (
        measured(&or, "orth-off-diagonal-slope"),
        measured(&or, "orth-level-trend"),
    );
    l.record(
        10,
        (-1.3..=-0.7).contains(&slope) && trend <= 0.1,
        format!("slope {slope:.4}, growth trend of max(l,m) I {trend:.4}"),
    );

    let h = suite("hardy");
    let ok = [1.5, 2.0, 3.0]
        .iter()
        .all(|&p| measured(&h, &format!("hardy-p{p}")) <= p / (p - 1.0) + 1e-9);
    let detail = [1.5, 2.0, 3.0]
        .iter()
        .map(|&p| format!("p={p}: {:.6}", measured(&h, &format!("hardy-p{p}"))))
        .collect::<Vec<_>>();
    l.record(11, ok, format!("max ratios {}", detail.join(", ")));

    let e2 = suite("est2");
    let (x1, x2) = (
        measured(&e2, "est2-lambda-exponent-p1"),
        measured(&e2, "est2-lambda-exponent-p2"),
    );
    l.record(
        12,
        (x1 - 0.0).abs() <= 0.1 && (x2 + 1.0).abs() <= 0.1,
        format!("exponents {x1:.4} (p=1, target 0), {x2:.4} (p=2, target -1)"),
    );

    let sg = suite("sigma");
    let (a, b) = (
        measured(&s, "sphere-ratio-refinement"),
        measured(&sg, "sigma-ratio-refinement"),
    );
    l.record(
        13,
        a <= 0.05 && b <= 0.05,
        format!("200-sample refinement change: sphere {a:.2e}, sigma {b:.2e}"),
    );

    let st = suite("strichartz-scaling");
    let names = [
        "flatness-schrodinger-p2-q2",
        "flatness-schrodinger-p2-qinf",
        "flatness-wave-p2-qinf",
    ];
    let flat = names.iter().map(|n| measured(&st, n)).fold(0.0, f64::max);
    let mism = measured(&st, "admissibility-table-mismatches");
    l.record(
        14,
        flat <= 1e-6 && mism == 0.0,
        format!("max flatness {flat:.2e}, admissibility mismatches {mism}"),
    );

    let dp = suite("decay-probe");
    let (wv, sc) = (
        measured(&dp, "wave-decay-exponent"),
        measured(&dp, "schrodinger-decay-exponent"),
    );
    l.record(
        15,
        wv <= -0.4 && sc.abs() <= 0.05,
        format!("wave {wv:.4}, Schrodinger {sc:.4}"),
    );

    let bin = env!("CARGO_BIN_EXE_hh");
    let run = || {
        Command::new(bin)
            .args(["verify", "all", "--seed", "42"])
            .output()
            .expect("hh runs")
    };
    let (first, second) = (run(), run());
    let same = first.stdout == second.stdout && !first.stdout.is_empty();
    let ok = same && first.status.code() == Some(0) && second.status.code() == Some(0);
    l.record(
        16,
        ok,
        format!(
            "{} report bytes, identical: {same}, exit {:?}",
            first.stdout.len(),
            first.status.code()
        ),
    );
}

#[test]
fn acceptance() {
    let mut l = Ledger { lines: Vec::new() };
    run_all(&mut l);
    assert_eq!(
        l.lines.iter().map(|x| x.0).collect::<Vec<_>>(),
        (1..=16).collect::<Vec<_>>()
    );
    let failed: Vec<&str> = l.lines.iter().filter(|x| !x.1).map(|x| x.2.as_str()).collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
