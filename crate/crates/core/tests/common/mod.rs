//! Dense reference implementations built directly from the difference stencils.
#![allow(dead_code)]

use balpha::hum::hum_control;
use balpha::{Field, Grid, LinearProblem, SpaceTimeNorm, Traj, Window};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn laplacian(n: usize, dx: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = -2.0 / (dx * dx);
        if i > 0 {
            m[(i, i - 1)] = 1.0 / (dx * dx);
        }
        if i + 1 < n {
            m[(i, i + 1)] = 1.0 / (dx * dx);
        }
    }
    m
}

pub fn centered(n: usize, dx: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        if i > 0 {
            m[(i, i - 1)] = -0.5 / dx;
        }
        if i + 1 < n {
            m[(i, i + 1)] = 0.5 / dx;
        }
    }
    m
}

/// `I - dt D_xx`.
pub fn implicit(g: &Grid) -> DMatrix<f64> {
    DMatrix::identity(g.nx(), g.nx()) - laplacian(g.nx(), g.dx()) * g.dt()
}

/// `I - dt diag(a) D_x`.
pub fn explicit(g: &Grid, a: &[f64]) -> DMatrix<f64> {
    let diag = DMatrix::from_diagonal(&DVector::from_column_slice(a));
    DMatrix::identity(g.nx(), g.nx()) - diag * centered(g.nx(), g.dx()) * g.dt()
}

/// Helmholtz filter on the padded grid with explicit boundary rows.
pub fn dense_filter(g: &Grid, alpha: f64, y: &[f64], trace: f64) -> Vec<f64> {
    let n = g.nx() + 2;
    let c = alpha * alpha / (g.dx() * g.dx());
    let mut m = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    m[(0, 0)] = 1.0;
    m[(n - 1, n - 1)] = 1.0;
    rhs[n - 1] = trace;
    for j in 1..n - 1 {
        m[(j, j - 1)] = -c;
        m[(j, j)] = 1.0 + 2.0 * c;
        m[(j, j + 1)] = -c;
        rhs[j] = y[j - 1];
    }
    let z = m.lu().solve(&rhs).unwrap();
    z.as_slice()[1..n - 1].to_vec()
}

/// All levels `1..=nt` of the linear scheme as one block-bidiagonal system.
pub fn dense_space_time(g: &Grid, y0: &[f64], a: &Traj, source: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (nx, nt) = (g.nx(), g.nt());
    let m = implicit(g);
    let mut big = DMatrix::zeros(nx * nt, nx * nt);
    let mut rhs = DVector::zeros(nx * nt);
    for n in 0..nt {
        big.view_mut((n * nx, n * nx), (nx, nx)).copy_from(&m);
        let b = explicit(g, a.snapshot(n).values());
        let mut r = DVector::from_column_slice(&source[n]) * g.dt();
        if n == 0 {
            r += &b * DVector::from_column_slice(y0);
        } else {
            big.view_mut((n * nx, (n - 1) * nx), (nx, nx)).copy_from(&(-b));
        }
        rhs.rows_mut(n * nx, nx).copy_from(&r);
    }
    let sol = big.lu().solve(&rhs).unwrap();
    let mut out = vec![y0.to_vec()];
    out.extend((0..nt).map(|n| sol.as_slice()[n * nx..(n + 1) * nx].to_vec()));
    out
}

pub struct DenseHum {
    /// Control at window nodes, level-major over levels `0..nt`.
    pub control: Vec<Vec<f64>>,
    pub terminal: Vec<f64>,
    pub window_nodes: Vec<usize>,
}

/// Minimizer of `1/2 sum_n dt |v^n|^2 + 1/(2 eps) |y(T)|^2` (discrete L2 norms)
/// from the dense normal equations.
pub fn dense_hum(g: &Grid, y0: &[f64], a: &Traj, window: &Window, eps: f64) -> DenseHum {
    let (nx, nt, dx, dt) = (g.nx(), g.nt(), g.dx(), g.dt());
    let nodes: Vec<usize> = (0..nx).filter(|&i| window.a < g.x(i) && g.x(i) < window.b).collect();
    let minv = implicit(g).try_inverse().unwrap();
    // r[n] maps y^n to y^N
    let mut r = vec![DMatrix::identity(nx, nx); nt + 1];
    for n in (0..nt).rev() {
        r[n] = &r[n + 1] * &minv * explicit(g, a.snapshot(n).values());
    }
    let nw = nodes.len();
    let mut gm = DMatrix::zeros(nx, nw * nt);
    for n in 0..nt {
        let s = &r[n + 1] * &minv * dt;
        for (k, &i) in nodes.iter().enumerate() {
            gm.set_column(n * nw + k, &s.column(i));
        }
    }
    let free = &r[0] * DVector::from_column_slice(y0);
    let lhs = DMatrix::identity(nw * nt, nw * nt) * (dt * dx) + gm.transpose() * &gm * (dx / eps);
    let rhs = -(gm.transpose() * &free) * (dx / eps);
    let v = lhs.cholesky().unwrap().solve(&rhs);
    let terminal = &free + &gm * &v;
    DenseHum {
        control: (0..nt).map(|n| v.as_slice()[n * nw..(n + 1) * nw].to_vec()).collect(),
        terminal: terminal.as_slice().to_vec(),
        window_nodes: nodes,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `sum_k c_k sin(k pi x / L)` with `c_k` uniform in `(-1, 1) / k`, scaled to sup norm `amp`.
pub fn random_smooth(g: &Grid, rng: &mut ChaCha8Rng, modes: usize, amp: f64) -> Field {
    let c: Vec<f64> = (1..=modes).map(|k| rng.gen_range(-1.0..1.0) / k as f64).collect();
    let l = g.length();
    let f = Field::from_fn(*g, |x| {
        c.iter().enumerate().map(|(k, ck)| ck * ((k + 1) as f64 * std::f64::consts::PI * x / l).sin()).sum()
    });
    let s = f.norm(balpha::NormKind::Sup);
    if s == 0.0 { f } else { f.scaled(amp / s) }
}

/// Smooth space-time field with sup norm at most `amp`.
pub fn random_space_time(g: &Grid, rng: &mut ChaCha8Rng, amp: f64) -> Traj {
    let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (l, t) = (g.length(), g.horizon());
    let pi = std::f64::consts::PI;
    let raw = Traj::from_fn(*g, |x, s| {
        c[0] * (pi * x / l).sin() * (pi * s / t).cos()
            + c[1] * (2.0 * pi * x / l).sin() * (1.0 + c[2] * s / t)
            + c[3] * (3.0 * pi * x / l).cos() * c[4]
            + c[5] * x / l
    });
    let s = raw.norm(balpha::SpaceTimeNorm::Sup);
    if s == 0.0 { raw } else { raw.scaled(amp / s) }
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn l2(v: &[f64], dx: f64) -> f64 {
    (dx * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

/// Relative gaps `(control, terminal)` between `hum_control` and [`dense_hum`]
/// on random data with `eps = 1e-3`.
pub fn hum_oracle_gaps(nx: usize, nt: usize, seed: u64) -> (f64, f64) {
    let g = Grid::new(1.0, 1.0, nx, nt).unwrap();
    let w = Window::new(0.3, 0.7).unwrap();
    let mut r = rng(seed);
    let y0 = random_smooth(&g, &mut r, 4, 1.0);
    let a = random_space_time(&g, &mut r, 1.0);
    let eps = 1e-3;
    let p = LinearProblem::new(y0.clone(), a.clone(), w, eps).unwrap().with_cg(1e-14, 10 * nx.max(2));
    let s = hum_control(&p).unwrap();
    let d = dense_hum(&g, y0.values(), &a, &w, eps);
    let mut snaps = vec![Field::zeros(g); nt + 1];
    for (n, vals) in d.control.iter().enumerate() {
        let mut full = vec![0.0; nx];
        for (k, &i) in d.window_nodes.iter().enumerate() {
            full[i] = vals[k];
        }
        snaps[n] = Field::new(g, full).unwrap();
    }
    let dense_v = Traj::new(g, snaps).unwrap();
    let scale = dense_v.norm(SpaceTimeNorm::L2L2).max(f64::MIN_POSITIVE);
    let control_gap = s.control.sub(&dense_v).norm(SpaceTimeNorm::L2L2) / scale;
    let term = l2(&d.terminal, g.dx());
    (control_gap, (s.terminal_l2 - term).abs() / term.max(f64::MIN_POSITIVE))
}
