mod common;

use balpha::dynamics::{solve_linear, ForcingSpec};
use balpha::filter::{apply_filter, apply_filter_with_trace};
use balpha::hum::solve_adjoint;
use balpha::{Alpha, Grid, Window};
use common::*;

#[test]
fn filter_matches_dense_solve() {
    let g = Grid::new(1.0, 1.0, 31, 1).unwrap();
    let mut r = rng(1);
    for alpha in [0.01, 0.1, 0.5, 2.0] {
        let y = random_smooth(&g, &mut r, 6, 1.0);
        let z = apply_filter(&y, Alpha::new(alpha).unwrap());
        assert!(max_diff(z.values(), &dense_filter(&g, alpha, y.values(), 0.0)) < 1e-12);
        let zt = apply_filter_with_trace(&y, Alpha::new(alpha).unwrap(), 0.7);
        assert!(max_diff(zt.values(), &dense_filter(&g, alpha, y.values(), 0.7)) < 1e-12);
        assert_eq!(zt.right_trace(), 0.7);
    }
}

#[test]
fn linear_solver_matches_dense_space_time_system() {
    let g = Grid::new(1.0, 1.0, 15, 10).unwrap();
    let w = Window::new(0.3, 0.7).unwrap();
    let mut r = rng(2);
    for _ in 0..5 {
        let y0 = random_smooth(&g, &mut r, 5, 1.0);
        let a = random_space_time(&g, &mut r, 2.0);
        let f = random_space_time(&g, &mut r, 1.0);
        let v = random_space_time(&g, &mut r, 1.0);
        let forcing = ForcingSpec::control(v.clone(), &w).unwrap().with_body(f.clone());
        let y = solve_linear(&y0, &a, &forcing, &g).unwrap();
        let source: Vec<Vec<f64>> = (0..g.nt())
            .map(|n| {
                (0..g.nx())
                    .map(|i| {
                        let mask = if w.contains(g.x(i)) { 1.0 } else { 0.0 };
                        f.snapshot(n).values()[i] + mask * v.snapshot(n).values()[i]
                    })
                    .collect()
            })
            .collect();
        let dense = dense_space_time(&g, y0.values(), &a, &source);
        for n in 0..=g.nt() {
            assert!(max_diff(y.snapshot(n).values(), &dense[n]) < 1e-12, "level {n}");
        }
    }
}

#[test]
fn adjoint_is_the_transpose() {
    // <y^N, phi_T> - <y0, phi^0> = sum_n dt <s^n, psi^n> for arbitrary data
    let g = Grid::new(1.0, 0.5, 15, 12).unwrap();
    let mut r = rng(3);
    let y0 = random_smooth(&g, &mut r, 5, 1.0);
    let a = random_space_time(&g, &mut r, 1.5);
    let s = random_space_time(&g, &mut r, 1.0);
    let phi_t = random_smooth(&g, &mut r, 7, 1.0);
    let y = solve_linear(&y0, &a, &ForcingSpec::body(s.clone()), &g).unwrap();
    let adj = solve_adjoint(&phi_t, &a, &g).unwrap();
    let lhs = y.terminal().dot(&phi_t) - y0.dot(adj.phi.initial());
    let rhs: f64 = (0..g.nt()).map(|n| g.dt() * s.snapshot(n).dot(adj.weights.snapshot(n))).sum();
    assert!((lhs - rhs).abs() < 1e-13 * (1.0 + lhs.abs()));
}

#[test]
fn hum_matches_dense_normal_equations() {
    for (k, &(nx, nt)) in [(3, 10), (7, 5), (7, 40), (15, 20), (19, 21), (31, 12), (9, 44)].iter().enumerate() {
        assert!(nx * nt <= 400);
        let (cg, tg) = hum_oracle_gaps(nx, nt, 10 + k as u64);
        assert!(cg < 1e-8 && tg < 1e-8, "nx {nx} nt {nt}: {cg:e} {tg:e}");
    }
}
