//! One PASS/FAIL line per acceptance criterion.
//!
//! Criteria listed in `KNOWN_RED` are reported as FAIL when they fail but do not
//! fail the target; any other failure exits non-zero.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use balpha::control::{
    boundary_null_control, cutoff_control, large_alpha_control, large_time_control, nonlinear_null_control,
    ControlMode, Extension, FixedPointOptions,
};
use balpha::dynamics::{bound_m, solve_burgers_alpha, solve_linear, ForcingSpec};
use balpha::experiments::{controlled_limit_study, decay_study, uncontrolled_limit_study, SweepSpec};
use balpha::filter::apply_filter;
use balpha::{Alpha, Field, Grid, NormKind, SpaceTimeNorm, Window};
use common::*;
use rand::Rng;

const KNOWN_RED: &[usize] = &[6];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn default_grid() -> Grid {
    Grid::new(1.0, 1.0, 63, 200).unwrap()
}

fn default_datum(g: &Grid) -> Field {
    Field::from_fn(*g, |x| 0.1 * (PI * x).sin())
}

fn window() -> Window {
    Window::new(0.3, 0.7).unwrap()
}

fn c1_filter() -> Verdict {
    let start = Instant::now();
    let mut worst_order = f64::INFINITY;
    for alpha in [0.05, 0.1, 0.5] {
        let errs: Vec<f64> = [31, 63, 127]
            .iter()
            .map(|&nx| {
                let g = Grid::new(1.0, 1.0, nx, 1).unwrap();
                (1..=5)
                    .map(|k| {
                        let kk = k as f64 * PI;
                        let y = Field::from_fn(g, |x| (kk * x).sin());
                        let z = apply_filter(&y, Alpha::new(alpha).unwrap());
                        z.sub(&y.scaled(1.0 / (1.0 + alpha * alpha * kk * kk))).norm(NormKind::Sup)
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        for w in errs.windows(2) {
            worst_order = worst_order.min((w[0] / w[1]).log2());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst_order >= 1.9 && secs < 1.0, format!("min order {worst_order:.3}, {secs:.3} s"))
}

fn c2_maximum_principle() -> Verdict {
    let start = Instant::now();
    let g = Grid::new(1.0, 1.0, 63, 400).unwrap();
    let mut r = rng(2024);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let amp0 = r.gen_range(0.0..1.5);
        let ampf = r.gen_range(0.0..1.5);
        let alpha = r.gen_range(0.0..0.5);
        let y0 = random_smooth(&g, &mut r, 6, amp0);
        let f = ForcingSpec::body(random_space_time(&g, &mut r, ampf));
        let (y, z) = solve_burgers_alpha(&y0, &f, Alpha::new(alpha).unwrap(), &g).unwrap();
        let m = bound_m(&y0, &f, &g);
        let sup = y.norm(SpaceTimeNorm::Sup).max(z.norm(SpaceTimeNorm::Sup));
        if m > 0.0 {
            worst = worst.max(sup / m);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst <= 1.0 + 1e-3 && secs < 30.0, format!("max sup/M(T) {worst:.6}, {secs:.2} s"))
}

fn c3_hum_oracle() -> Verdict {
    let start = Instant::now();
    let nxs = [3, 5, 7, 9, 11, 15, 19, 23, 31, 39, 49, 63, 79, 99, 133, 199, 399];
    let nts = [1, 2, 3, 4, 5, 8, 10, 16, 20, 25, 40, 50, 80, 100, 200, 400];
    let (mut count, mut worst) = (0, 0.0f64);
    for &nx in &nxs {
        for &nt in nts.iter().filter(|&&nt| nx * nt <= 400) {
            let (c, t) = hum_oracle_gaps(nx, nt, (nx * 1000 + nt) as u64);
            worst = worst.max(c).max(t);
            count += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst <= 1e-8 && secs < 60.0, format!("{count} grids, max relative gap {worst:.2e}, {secs:.2} s"))
}

fn c4_penalty_scaling() -> Verdict {
    let g = default_grid();
    let y0 = default_datum(&g);
    let pts: Vec<(f64, f64)> = [1e-2, 1e-4, 1e-6]
        .iter()
        .map(|&eps| {
            let opts = FixedPointOptions { epsilon: eps, ..Default::default() };
            let r = nonlinear_null_control(&y0, Alpha::new(0.1).unwrap(), &window(), &g, &opts).unwrap();
            (eps.ln(), r.terminal_l2().ln())
        })
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    verdict((slope - 0.5).abs() <= 0.15, format!("log-log slope {slope:.3}"))
}

fn c5_uniform_in_alpha() -> Verdict {
    let start = Instant::now();
    let g = default_grid();
    let y0 = default_datum(&g);
    let opts = FixedPointOptions::default();
    let mut sups = Vec::new();
    let mut ok = true;
    for alpha in [0.5, 0.2, 0.1, 0.05, 0.02] {
        let r = nonlinear_null_control(&y0, Alpha::new(alpha).unwrap(), &window(), &g, &opts).unwrap();
        ok &= r.converged() && r.terminal_ratio() <= opts.terminal_tolerance();
        sups.push(r.control_sup());
    }
    let ratio = sups.iter().cloned().fold(0.0, f64::max) / sups.iter().cloned().fold(f64::INFINITY, f64::min);
    let secs = start.elapsed().as_secs_f64();
    verdict(ok && ratio <= 2.0 && secs < 300.0, format!("all succeeded {ok}, control_sup max/min {ratio:.4}, {secs:.2} s"))
}

fn c6_cutoff() -> Verdict {
    let g = default_grid();
    let y0 = default_datum(&g);
    let w = window();
    let alpha = Alpha::new(0.1).unwrap();
    let cut_opts = FixedPointOptions { mode: ControlMode::Cutoff, ..Default::default() };
    let cut = nonlinear_null_control(&y0, alpha, &w, &g, &cut_opts).unwrap();
    let direct = nonlinear_null_control(&y0, alpha, &w, &g, &FixedPointOptions::default()).unwrap();

    let lin = cutoff_control(&cut.filtered, &y0, &w, &g, cut_opts.epsilon, cut_opts.cg).unwrap();
    let outside = lin
        .control
        .snapshots()
        .iter()
        .chain(cut.control.snapshots())
        .flat_map(|s| s.values().iter().enumerate().filter(|(i, _)| !w.contains(g.x(*i))).map(|(_, v)| v.abs()))
        .fold(0.0, f64::max);
    let forcing = ForcingSpec::control(lin.control.clone(), &w).unwrap();
    let replay = solve_linear(&y0, &cut.filtered, &forcing, &g).unwrap();
    let gap = replay.sub(&lin.state).norm(SpaceTimeNorm::Sup);
    let tol = cut_opts.terminal_tolerance();
    let reached = cut.converged() && cut.terminal_ratio() <= tol && direct.terminal_ratio() <= tol;
    let sup_ratio = cut.control_sup() / direct.control_sup();
    let within = (1.0 / 3.0..=3.0).contains(&sup_ratio);
    verdict(
        outside == 0.0 && gap <= 1e-10 && reached && within,
        format!(
            "outside {outside:.1e}, replay gap {gap:.2e}, terminal ratios {:.2e}/{:.2e}, control_sup cutoff/direct {:.4}/{:.4e} = {sup_ratio:.1}",
            cut.terminal_ratio(),
            direct.terminal_ratio(),
            cut.control_sup(),
            direct.control_sup()
        ),
    )
}

fn c7_decay() -> Verdict {
    let start = Instant::now();
    let g = Grid::new(PI, 4.0, 63, 400).unwrap();
    let family: Vec<Field> = [0.25, 0.5, 0.75].iter().map(|&s| Field::from_fn(g, |x| s * x.sin())).collect();
    let rows = decay_study(&family, Alpha::new(0.1).unwrap(), &g, true).unwrap();
    let ok = rows.len() == 3 && rows.iter().all(|r| r.r_fitted >= 0.9 * r.r_theory);
    let exact = rows.iter().any(|r| r.y0_sup == 0.5 && r.r_theory == 0.375);
    let text: Vec<String> = rows.iter().map(|r| format!("{}: {:.4} vs {:.4}", r.y0_sup, r.r_fitted, r.r_theory)).collect();
    let secs = start.elapsed().as_secs_f64();
    verdict(ok && exact && secs < 60.0, format!("{}, {secs:.2} s", text.join("; ")))
}

fn c8_limits() -> Verdict {
    let g = default_grid();
    let y0 = default_datum(&g);
    let spec = SweepSpec::new(vec![0.4, 0.2, 0.1, 0.05], y0, g, window()).unwrap();
    let free = uncontrolled_limit_study(&spec).unwrap();
    let ctl = controlled_limit_study(&spec).unwrap();
    let checks = [
        free.failures.is_empty() && ctl.table.failures.is_empty(),
        free.err_y_monotone(),
        free.err_z_monotone(),
        ctl.table.err_y_monotone(),
        ctl.table.err_z_monotone(),
        free.filter_inequality_holds(1e-12),
        ctl.table.filter_inequality_holds(1e-12),
    ];
    let errs = |t: &balpha::experiments::LimitTable<f64>| {
        t.rows.iter().map(|r| format!("{:.2e}", r.err_y)).collect::<Vec<_>>().join(" ")
    };
    verdict(checks.iter().all(|&c| c), format!("checks {checks:?}, err_y free [{}], controlled [{}]", errs(&free), errs(&ctl.table)))
}

fn c9_large_time() -> Verdict {
    let g = Grid::new(1.0, 1.0, 63, 400).unwrap();
    let y0 = Field::from_fn(g, |x| 0.9 * PI * (PI * x).sin());
    let opts = FixedPointOptions::default();
    let delta = 0.05;
    let r = large_time_control(&y0, Alpha::new(0.1).unwrap(), &window(), &g, delta, &opts).unwrap();
    let h1 = r.h1_history.last().map(|p| p.1).unwrap_or(f64::NAN);
    let ok = h1 <= delta && r.coast_time <= r.coast_cap && r.phase2.converged() && r.phase2.succeeded(opts.epsilon);
    verdict(
        ok,
        format!(
            "coast {:.3} <= cap {:.3}, H1 {h1:.4}, phase 2 converged {} in {} iterations, ratio {:.2e}",
            r.coast_time,
            r.coast_cap,
            r.phase2.converged(),
            r.phase2.trace.iter_count(),
            r.phase2.terminal_ratio()
        ),
    )
}

fn c10_large_alpha() -> Verdict {
    let g = Grid::new(1.0, 1.0, 63, 800).unwrap();
    let y0 = Field::from_fn(g, |x| 5.0 * (PI * x).sin());
    let alphas = [2.0, 1.0, 0.5, 0.25, 0.1, 0.05, 0.02];
    let opts = FixedPointOptions::default();
    let first = large_alpha_control(&y0, &window(), &g, &alphas, &opts).unwrap();
    let second = large_alpha_control(&y0, &window(), &g, &alphas, &opts).unwrap();
    let same = format!("{:?}", first) == format!("{:?}", second);
    let alpha0 = first.alpha0;
    let ok = same && alpha0.is_some_and(|a| a > 0.0);
    let table: Vec<String> = first.rows.iter().map(|r| format!("{}:{}", r.alpha, if r.success { "ok" } else { "fail" })).collect();
    verdict(ok, format!("alpha0 {alpha0:?}, reproducible {same}, [{}]", table.join(" ")))
}

fn c11_boundary() -> Verdict {
    let opts = FixedPointOptions::default();
    let ext = Extension::standard(1.0).unwrap();
    let mut jumps = Vec::new();
    let mut ok = true;
    let mut worst_ratio = 0.0f64;
    let mut worst_residual = 0.0f64;
    for nt in [100, 200, 400, 800] {
        let g = Grid::new(1.0, 1.0, 31, nt).unwrap();
        let r = boundary_null_control(&default_datum(&g), Alpha::new(0.1).unwrap(), &ext, &g, &opts).unwrap();
        ok &= r.extended.converged() && r.terminal_ratio <= opts.terminal_tolerance() && r.residual <= 1e-8;
        worst_ratio = worst_ratio.max(r.terminal_ratio);
        worst_residual = worst_residual.max(r.residual);
        jumps.push(r.max_jump());
    }
    // u grows like sqrt(t) from u(0) = 0, so jumps shrink like sqrt(dt); a jump
    // discontinuity would keep the ratio near 1
    let continuous = jumps.windows(2).all(|w| w[1] <= 0.8 * w[0]);
    verdict(
        ok && continuous,
        format!("terminal ratio {worst_ratio:.2e}, residual {worst_residual:.1e}, max jump {jumps:.3?}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(usize, &str, fn() -> Verdict); 11] = [
        (1, "filter correctness", c1_filter),
        (2, "maximum principle", c2_maximum_principle),
        (3, "HUM oracle equivalence", c3_hum_oracle),
        (4, "penalty scaling", c4_penalty_scaling),
        (5, "local null control uniform in alpha", c5_uniform_in_alpha),
        (6, "cutoff construction", c6_cutoff),
        (7, "decay rate", c7_decay),
        (8, "alpha -> 0 limit", c8_limits),
        (9, "large-time control", c9_large_time),
        (10, "large-alpha regime", c10_large_alpha),
        (11, "boundary control", c11_boundary),
    ];
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        let v = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| verdict(false, format!("panicked: {:?}", e.downcast_ref::<String>())));
        let tag = if v.pass { "PASS" } else { "FAIL" };
        let note = if !v.pass && KNOWN_RED.contains(&id) { " [known]" } else { "" };
        println!("{tag} {id:>2} {name}{note}: {}", v.detail);
        if !v.pass && !KNOWN_RED.contains(&id) {
            unexpected += 1;
        }
    }
    if unexpected == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
