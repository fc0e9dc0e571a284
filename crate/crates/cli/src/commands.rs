use std::fs;
use std::path::Path;

use anyhow::Context;
use balpha::control::{
    boundary_null_control, large_alpha_control, large_time_control, nonlinear_null_control,
};
use balpha::dynamics::{check_estimates, solve_transport, EstimateTolerance, ForcingSpec, SelfTransport};
use balpha::experiments::{controlled_limit_study, decay_study, emit_report, uncontrolled_limit_study, SweepSpec};
use balpha::filter::HelmholtzFilter;
use balpha::hum::cost_study;
use balpha::io::{format_number, write_control_bundle, write_cost_table, write_manifest, write_trace, write_trajectory, Manifest};
use balpha::{Field, Grid, Traj};

use crate::config::{Resolved, RunConfig, SweepKind, Variant};
use crate::{exit, Command, Summary};

pub fn dispatch(cmd: Command, cfg: &RunConfig, r: &Resolved) -> anyhow::Result<Summary> {
    let dir = cfg.output.dir.as_path();
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.toml"), cfg.to_toml()).context("writing resolved config")?;
    match cmd {
        Command::Simulate => simulate(cfg, r, dir),
        Command::Control => control(cfg, r, dir),
        Command::Sweep => sweep(cfg, r, dir),
        Command::Decay => decay(cfg, r, dir),
        Command::Cost => cost(cfg, r, dir),
    }
}

fn base_manifest(cmd: &str, cfg: &RunConfig) -> Manifest {
    let mut m = Manifest::new();
    m.text("command", cmd)
        .number("domain_length", cfg.domain.length)
        .number("domain_horizon", cfg.domain.horizon)
        .integer("grid_nx", cfg.grid.nx as u64)
        .integer("grid_nt", cfg.grid.nt as u64)
        .number("model_alpha", cfg.model.alpha)
        .text("model_cfl", &format!("{:?}", cfg.model.cfl))
        .text("initial_family", &format!("{:?}", cfg.initial.family))
        .number("initial_amplitude", cfg.initial.amplitude)
        .integer("initial_seed", cfg.initial.seed)
        .number("window_a", cfg.window.a)
        .number("window_b", cfg.window.b)
        .text("control_mode", &format!("{:?}", cfg.control.mode))
        .text("control_variant", &format!("{:?}", cfg.control.variant))
        .number("control_epsilon", cfg.control.epsilon)
        .number("control_fp_tol", cfg.control.fp_tol)
        .integer("control_max_fp_iter", cfg.control.max_fp_iter as u64)
        .number("control_damping", cfg.control.damping)
        .number("control_cg_tol", cfg.control.cg_tol);
    m
}

fn simulate(cfg: &RunConfig, r: &Resolved, dir: &Path) -> anyhow::Result<Summary> {
    let forcing = ForcingSpec::none();
    let (y, z) = if r.alpha.is_identity() {
        let (y, _) = solve_transport(&r.y0, &forcing, &SelfTransport, &r.grid, r.solver)?;
        (y.clone(), y)
    } else {
        solve_transport(&r.y0, &forcing, &HelmholtzFilter::new(r.grid, r.alpha), &r.grid, r.solver)?
    };
    let est = check_estimates(&y, &z, &r.y0, &forcing, EstimateTolerance::default());
    write_trajectory(&dir.join("state.csv"), &y)?;
    write_trajectory(&dir.join("filtered.csv"), &z)?;
    let mut m = base_manifest("simulate", cfg);
    m.number("estimate_sup_state", est.sup_state)
        .number("estimate_bound_m", est.bound_m)
        .number("estimate_margin", est.margin)
        .flag("estimate_satisfied", est.satisfied);
    write_manifest(&dir.join("manifest.toml"), &m)?;
    Ok(Summary {
        status: exit::OK,
        lines: vec![
            format!("sup |y| = {}  M(T) = {}", format_number(est.sup_state), format_number(est.bound_m)),
            format!("maximum principle satisfied: {}", est.satisfied),
        ],
    })
}

fn converged_status(ok: bool) -> u8 {
    if ok { exit::OK } else { exit::NOT_CONVERGED }
}

fn control(cfg: &RunConfig, r: &Resolved, dir: &Path) -> anyhow::Result<Summary> {
    let mut m = base_manifest("control", cfg);
    match cfg.control.variant {
        Variant::Local => {
            let res = nonlinear_null_control(&r.y0, r.alpha, &r.window, &r.grid, &r.options)?;
            write_control_bundle(dir, &res, &m)?;
            Ok(Summary {
                status: converged_status(res.converged()),
                lines: vec![
                    format!("converged: {} after {} iterations", res.converged(), res.trace.iter_count()),
                    format!("terminal_L2 = {}", format_number(res.terminal_l2())),
                    format!("control_sup = {}", format_number(res.control_sup())),
                ],
            })
        }
        Variant::LargeTime => {
            let res = large_time_control(&r.y0, r.alpha, &r.window, &r.grid, cfg.large_time.delta, &r.options)?;
            write_trajectory(&dir.join("control.csv"), &res.control)?;
            write_trajectory(&dir.join("state.csv"), &res.state)?;
            write_trace(&dir.join("trace.csv"), &res.phase2.trace)?;
            let ok = res.phase2.converged();
            m.number("large_time_delta", cfg.large_time.delta)
                .number("coast_time", res.coast_time)
                .integer("coast_steps", res.coast_steps as u64)
                .number("coast_cap", res.coast_cap)
                .number("decay_rate", res.rate)
                .number("coast_slope", res.fitted_slope.unwrap_or(f64::NAN))
                .flag("result_converged", ok)
                .number("result_terminal_L2", res.phase2.terminal_l2())
                .number("result_control_sup", res.phase2.control_sup());
            write_manifest(&dir.join("manifest.toml"), &m)?;
            Ok(Summary {
                status: converged_status(ok),
                lines: vec![
                    format!("coast_time = {} (cap {})", format_number(res.coast_time), format_number(res.coast_cap)),
                    format!("phase 2 converged: {}", ok),
                    format!("terminal_L2 = {}", format_number(res.phase2.terminal_l2())),
                ],
            })
        }
        Variant::LargeAlpha => {
            let t = large_alpha_control(&r.y0, &r.window, &r.grid, &cfg.sweep.alphas, &r.options)?;
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(dir.join("large_alpha.csv"))?;
            w.write_record([
                "alpha", "success", "converged", "iterations", "control_sup", "control_L2", "terminal_ratio", "z_sup", "y_L2",
            ])?;
            for (i, row) in t.rows.iter().enumerate() {
                let mut rec = vec![format_number(row.alpha), row.success.to_string(), row.converged.to_string(), row.iterations.to_string()];
                rec.extend([row.control_sup, row.control_l2, row.terminal_ratio, row.z_sup, row.y_l2].map(format_number));
                w.write_record(&rec)?;
                if let Some(f) = &row.failure {
                    m.text(&format!("failure_{i:03}"), f);
                }
            }
            w.flush()?;
            match t.alpha0 {
                Some(a) => m.number("alpha0", a),
                None => m.text("alpha0", "none"),
            };
            write_manifest(&dir.join("manifest.toml"), &m)?;
            Ok(Summary {
                status: converged_status(t.alpha0.is_some()),
                lines: t
                    .rows
                    .iter()
                    .map(|row| format!("alpha = {}  success = {}", format_number(row.alpha), row.success))
                    .chain(std::iter::once(format!("alpha0 = {:?}", t.alpha0)))
                    .collect(),
            })
        }
        Variant::Boundary => {
            let res = boundary_null_control(&r.y0, r.alpha, &r.extension, &r.grid, &r.options)?;
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(dir.join("u.csv"))?;
            w.write_record(["t", "u"])?;
            for (n, u) in res.u.iter().enumerate() {
                w.write_record([format_number(r.grid.t(n)), format_number(*u)])?;
            }
            w.flush()?;
            write_trajectory(&dir.join("state.csv"), &res.state)?;
            write_trace(&dir.join("trace.csv"), &res.extended.trace)?;
            let ok = res.extended.converged();
            m.number("boundary_ratio", r.extension.ratio)
                .number("boundary_window_a", r.extension.window.a)
                .number("boundary_window_b", r.extension.window.b)
                .flag("result_converged", ok)
                .number("result_terminal_ratio", res.terminal_ratio)
                .number("result_residual", res.residual)
                .number("result_max_jump", res.max_jump());
            write_manifest(&dir.join("manifest.toml"), &m)?;
            Ok(Summary {
                status: converged_status(ok),
                lines: vec![
                    format!("converged: {ok}"),
                    format!("terminal ratio on (0, L) = {}", format_number(res.terminal_ratio)),
                    format!("replay residual = {}", format_number(res.residual)),
                ],
            })
        }
    }
}

fn sweep(cfg: &RunConfig, r: &Resolved, dir: &Path) -> anyhow::Result<Summary> {
    let mut spec = SweepSpec::new(cfg.sweep.alphas.clone(), r.y0.clone(), r.grid, r.window)?;
    spec.control = r.options;
    spec.solver = r.solver;
    let mut m = base_manifest("sweep", cfg);
    m.text("sweep_kind", &format!("{:?}", cfg.sweep.kind))
        .text("sweep_alphas", &format!("{:?}", cfg.sweep.alphas));
    let (table, mut status) = match cfg.sweep.kind {
        SweepKind::Uncontrolled => (uncontrolled_limit_study(&spec)?, exit::OK),
        SweepKind::Controlled => {
            let rep = controlled_limit_study(&spec)?;
            m.number("control_sup_ratio", rep.control_sup_ratio)
                .number("max_terminal_ratio", rep.max_terminal_ratio)
                .flag("all_converged", rep.all_converged);
            for (a, gap) in &rep.control_gap {
                m.number(&format!("control_gap_alpha_{}", format_number(*a)), *gap);
            }
            let s = converged_status(rep.all_converged);
            (rep.table, s)
        }
    };
    m.flag("err_y_monotone", table.err_y_monotone())
        .flag("err_z_monotone", table.err_z_monotone())
        .flag("filter_inequality", table.filter_inequality_holds(1e-8))
        .number("ref_dxx_L2", table.ref_dxx);
    for (a, msg) in &table.failures {
        m.text(&format!("failure_alpha_{}", format_number(*a)), msg);
    }
    if !table.failures.is_empty() {
        status = exit::SOLVER;
    }
    emit_report(dir, "convergence", &table.rows, &m)?;
    let mut lines: Vec<String> = table
        .rows
        .iter()
        .map(|row| format!("alpha = {}  err_y = {}  err_z = {}", format_number(row.alpha), format_number(row.err_y), format_number(row.err_z)))
        .collect();
    lines.push(format!("monotone: err_y {} err_z {}", table.err_y_monotone(), table.err_z_monotone()));
    Ok(Summary { status, lines })
}

fn decay(cfg: &RunConfig, r: &Resolved, dir: &Path) -> anyhow::Result<Summary> {
    let g = r.decay_grid;
    let k = std::f64::consts::PI / g.length();
    let family: Vec<Field> = cfg.decay.sups.iter().map(|&s| Field::from_fn(g, |x| s * (k * x).sin())).collect();
    let rows = decay_study(&family, r.decay_alpha, &g, cfg.decay.transport)?;
    let mut m = Manifest::new();
    m.text("command", "decay")
        .number("decay_length", g.length())
        .number("decay_horizon", g.horizon())
        .integer("decay_nx", g.nx() as u64)
        .integer("decay_nt", g.nt() as u64)
        .number("decay_alpha", cfg.decay.alpha)
        .flag("decay_transport", cfg.decay.transport)
        .flag("all_decayed", rows.iter().all(|r| r.decayed()));
    emit_report(dir, "decay", &rows, &m)?;
    Ok(Summary {
        status: exit::OK,
        lines: rows
            .iter()
            .map(|row| {
                format!(
                    "|y0|_inf = {}  r_theory = {}  r_fitted = {}",
                    format_number(row.y0_sup),
                    format_number(row.r_theory),
                    format_number(row.r_fitted)
                )
            })
            .collect(),
    })
}

fn cost(cfg: &RunConfig, r: &Resolved, dir: &Path) -> anyhow::Result<Summary> {
    let c = &cfg.cost;
    let mut family = Vec::new();
    for &t in &c.horizons {
        let nt = ((t * c.steps_per_unit as f64).round() as usize).max(1);
        let g = Grid::new(r.grid.length(), t, r.grid.nx(), nt)?;
        for &a in &c.norms {
            family.push(Traj::from_fn(g, |_, _| a));
        }
    }
    // all cost grids share the spatial nodes of the main grid
    let dx = r.grid.dx();
    let values = r.y0.values().to_vec();
    let y0 = move |x: f64| values[((x / dx).round() as usize).saturating_sub(1).min(values.len() - 1)];
    let table = cost_study(&family, y0, &r.window, r.options.epsilon)?;
    write_cost_table(&dir.join("cost.csv"), &table)?;
    let mut m = base_manifest("cost", cfg);
    m.number("fitted_C1", table.fitted_c1)
        .number("fit_residual", table.fit_residual)
        .integer("cost_steps_per_unit", c.steps_per_unit as u64);
    write_manifest(&dir.join("cost.manifest.toml"), &m)?;
    Ok(Summary {
        status: exit::OK,
        lines: vec![format!("fitted_C1 = {}  ({} rows)", format_number(table.fitted_c1), table.rows.len())],
    })
}
