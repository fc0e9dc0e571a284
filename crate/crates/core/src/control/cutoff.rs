//! Bounded controls from a HUM control on an inner window.
//!
//! Given the transport coefficient `z`, the controlled state is split as
//! `y = theta(t) u + (1 - eta(x)) w` where `u` is the uncontrolled flow of `y0`
//! and `w` is driven to zero by a HUM control on `(a'', b'')` against the source
//! `-theta_t u`. The control acting on `(a, b)` is then
//!
//! ```text
//! v = eta theta_t u - eta_x z w + 2 eta_x w_x + eta_xx w
//! ```
//!
//! realized here as the exact discrete identity: every derivative of `eta` is a
//! commutator of the difference operators with multiplication by `1 - eta`, so
//! that replaying `v` through the linear scheme reproduces `y` to round-off.

use crate::dynamics::{solve_linear, ForcingSpec, Stepper};
use crate::error::{Error, Result};
use crate::grid::{Grid1D, ScalarField, Trajectory};
use crate::hum::{hum_control, HumSolution, LinearControlProblem};
use crate::num::Real;
use crate::window::ControlWindow;

#[derive(Debug, Clone)]
pub struct CutoffControl<T> {
    /// Control supported in `(a, b)`.
    pub control: Trajectory<T>,
    /// `theta u + (1 - eta) w`.
    pub state: Trajectory<T>,
    pub free: Trajectory<T>,
    /// HUM solve for `w` on the inner window.
    pub inner: HumSolution<T>,
}

/// CG settings forwarded to the inner HUM solve.
#[derive(Debug, Clone, Copy)]
pub struct CgSettings<T> {
    pub tol: T,
    pub max_iter: Option<usize>,
}

impl<T: Real> Default for CgSettings<T> {
    fn default() -> Self {
        Self { tol: T::c(1e-10), max_iter: None }
    }
}

/// `(1 - eta)` differences on the padded grid, `e[j]` for `j = 0..=nx+1`.
fn complement_padded<T: Real>(eta: &ScalarField<T>) -> Vec<T> {
    let n = eta.len();
    (0..n + 2)
        .map(|j| if j == 0 || j == n + 1 { T::one() } else { T::one() - eta.values()[j - 1] })
        .collect()
}

/// Rejects grids so coarse that a stencil touching the ramp of `eta` reaches outside `(a, b)`.
fn check_support<T: Real>(eta: &ScalarField<T>, window: &ControlWindow<T>, grid: &Grid1D<T>) -> Result<()> {
    let e = complement_padded(eta);
    for i in 0..grid.nx() {
        let j = i + 1;
        let flat = e[j - 1] == e[j] && e[j] == e[j + 1] && e[j] == T::one();
        if !window.contains(grid.x(i)) && !flat {
            return Err(Error::InvalidWindow(format!(
                "grid too coarse: cutoff stencil at x = {} leaves ({}, {})",
                grid.x(i),
                window.a,
                window.b
            )));
        }
    }
    Ok(())
}

pub fn cutoff_control<T: Real>(
    z: &Trajectory<T>,
    y0: &ScalarField<T>,
    window: &ControlWindow<T>,
    grid: &Grid1D<T>,
    epsilon: T,
    cg: CgSettings<T>,
) -> Result<CutoffControl<T>> {
    window.check_inside(grid.length())?;
    let eta = window.eta_field(grid);
    check_support(&eta, window, grid)?;
    let inner_window = window.inner()?;
    let stepper = Stepper::new(*grid);
    let nt = grid.nt();
    let dt = grid.dt();
    let dx = grid.dx();

    let free = solve_linear(y0, z, &ForcingSpec::none(), grid)?;
    let theta: Vec<T> = (0..=nt).map(|n| window.theta(grid.t(n), grid.horizon())).collect();

    // theta_t u in the form that makes theta u + w exact: (dtheta / dt) B_n u^n
    let transported: Vec<Vec<T>> = (0..nt)
        .map(|n| stepper.explicit_apply(free.snapshot(n).values(), z.snapshot(n).values()))
        .collect();
    let mut source = Vec::with_capacity(nt + 1);
    for n in 0..nt {
        let rate = (theta[n + 1] - theta[n]) / dt;
        source.push(ScalarField::from_parts(
            *grid,
            transported[n].iter().map(|&v| -rate * v).collect(),
            T::zero(),
        ));
    }
    source.push(ScalarField::zeros(*grid));
    let source = Trajectory::from_parts(*grid, source);

    let mut problem = LinearControlProblem::new(ScalarField::zeros(*grid), z.clone(), inner_window, epsilon)?
        .with_source(source);
    problem.cg_tol = cg.tol;
    if let Some(m) = cg.max_iter {
        problem.cg_max_iter = m;
    }
    let inner = hum_control(&problem)?;
    let w = &inner.state;

    let e = complement_padded(&eta);
    let n_x = grid.nx();
    let pad = |f: &ScalarField<T>, j: usize| -> T {
        if j == 0 || j == n_x + 1 {
            T::zero()
        } else {
            f.values()[j - 1]
        }
    };
    // [D_xx, E] f and [D_x, E] f at interior node i
    let comm_xx = |f: &ScalarField<T>, i: usize| -> T {
        let j = i + 1;
        ((e[j + 1] - e[j]) * pad(f, j + 1) + (e[j - 1] - e[j]) * pad(f, j - 1)) / (dx * dx)
    };
    let comm_x = |f: &ScalarField<T>, i: usize| -> T {
        let j = i + 1;
        ((e[j + 1] - e[j]) * pad(f, j + 1) - (e[j - 1] - e[j]) * pad(f, j - 1)) / (T::c(2.0) * dx)
    };

    let mut control = Vec::with_capacity(nt + 1);
    for n in 0..nt {
        let rate = (theta[n + 1] - theta[n]) / dt;
        let a = z.snapshot(n).values();
        let values = (0..n_x)
            .map(|i| {
                eta.values()[i] * rate * transported[n][i] - comm_xx(w.snapshot(n + 1), i)
                    + a[i] * comm_x(w.snapshot(n), i)
            })
            .collect();
        control.push(ScalarField::from_parts(*grid, values, T::zero()));
    }
    control.push(ScalarField::zeros(*grid));

    let state = (0..=nt)
        .map(|n| {
            let values = (0..n_x)
                .map(|i| theta[n] * free.snapshot(n).values()[i] + e[i + 1] * w.snapshot(n).values()[i])
                .collect();
            ScalarField::from_parts(*grid, values, T::zero())
        })
        .collect();

    Ok(CutoffControl {
        control: Trajectory::from_parts(*grid, control),
        state: Trajectory::from_parts(*grid, state),
        free,
        inner,
    })
}
