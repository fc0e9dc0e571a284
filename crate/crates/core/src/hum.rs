//! Minimal-norm null controls for `y_t - y_xx + A y_x = v 1_(a,b)` by penalized duality.
//!
//! The adjoint is the exact transpose of the forward IMEX recursion. Writing one
//! forward step as `M y^{n+1} = B_n y^n + dt s^n` with `M = I - dt D_xx` and
//! `B_n = I - dt A^n D_x`, the adjoint recursion is
//!
//! ```text
//! psi^n = M^{-1} phi^{n+1},   phi^n = B_n^T psi^n,   phi^N = phi_T
//! ```
//!
//! and the identity `<y^N, phi_T> - <y^0, phi^0> = sum_n dt <s^n, psi^n>` holds
//! to round-off. The control is `v^n = 1_(a,b) psi^n`, and `phi_T` minimizes
//!
//! ```text
//! J(phi_T) = 1/2 sum_n dt |1_(a,b) psi^n|^2 + eps/2 |phi_T|^2 + <y0, phi^0> + sum_n dt <f^n, psi^n>
//! ```
//!
//! whose gradient is `(Lambda + eps) phi_T + y_free(T)`. The controlled state
//! then ends at `y(T) = -eps phi_T`.

use rayon::prelude::*;

use crate::dynamics::{solve_linear, ForcingSpec, Stepper};
use crate::error::{Error, Result};
use crate::grid::{Grid1D, NormKind, ScalarField, SpaceTimeNorm, Trajectory};
use crate::num::Real;
use crate::window::{indicator, ControlWindow};

#[derive(Debug, Clone)]
pub struct LinearControlProblem<T> {
    pub y0: ScalarField<T>,
    /// Transport coefficient on every time level.
    pub a: Trajectory<T>,
    pub window: ControlWindow<T>,
    pub grid: Grid1D<T>,
    pub epsilon: T,
    pub cg_tol: T,
    pub cg_max_iter: usize,
    /// Additional uncontrolled source acting on the whole domain.
    pub source: Option<Trajectory<T>>,
}

impl<T: Real> LinearControlProblem<T> {
    /// Problem with the default CG settings: relative tolerance `1e-10`, at most `5 nx` iterations.
    pub fn new(
        y0: ScalarField<T>,
        a: Trajectory<T>,
        window: ControlWindow<T>,
        epsilon: T,
    ) -> Result<Self> {
        let grid = *a.grid();
        let p = Self {
            y0,
            a,
            window,
            grid,
            epsilon,
            cg_tol: T::c(1e-10),
            cg_max_iter: 5 * grid.nx(),
            source: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_source(mut self, source: Trajectory<T>) -> Self {
        self.source = Some(source);
        self
    }

    pub fn with_cg(mut self, tol: T, max_iter: usize) -> Self {
        self.cg_tol = tol;
        self.cg_max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > T::zero()) {
            return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.cg_tol > T::zero()) {
            return Err(Error::InvalidParameter(format!("cg_tol must be > 0, got {}", self.cg_tol)));
        }
        if self.y0.len() != self.grid.nx() {
            return Err(Error::ShapeMismatch { expected: self.grid.nx(), found: self.y0.len() });
        }
        if let Some(s) = &self.source {
            if s.grid().nt() != self.grid.nt() || s.grid().nx() != self.grid.nx() {
                return Err(Error::ShapeMismatch { expected: self.grid.nt() + 1, found: s.grid().nt() + 1 });
            }
        }
        indicator(&self.window, &self.grid).map(|_| ())
    }
}

#[derive(Debug, Clone)]
pub struct HumSolution<T> {
    /// Control, zero outside the window at every level.
    pub control: Trajectory<T>,
    pub state: Trajectory<T>,
    /// Optimal terminal adjoint datum.
    pub phi_t: ScalarField<T>,
    pub terminal_l2: T,
    pub control_l2: T,
    pub control_sup: T,
    pub cg_iters: usize,
    pub converged: bool,
    /// Final gradient norm relative to the initial one.
    pub relative_gradient: T,
}

/// Adjoint trajectories of the discrete scheme.
#[derive(Debug, Clone)]
pub struct Adjoint<T> {
    /// `phi^n`, with `phi^N = phi_T`.
    pub phi: Trajectory<T>,
    /// `psi^n = M^{-1} phi^{n+1}` for `n < N`; level `N` holds zeros.
    /// This is the field paired with the source of step `n`.
    pub weights: Trajectory<T>,
}

fn solve_adjoint_with<T: Real>(
    stepper: &Stepper<T>,
    phi_t: &ScalarField<T>,
    a: &Trajectory<T>,
) -> Result<Adjoint<T>> {
    let grid = *stepper.grid();
    let nt = grid.nt();
    let mut phi = vec![ScalarField::zeros(grid); nt + 1];
    let mut psi = vec![ScalarField::zeros(grid); nt + 1];
    phi[nt] = ScalarField::from_parts(grid, phi_t.values().to_vec(), T::zero());
    for n in (0..nt).rev() {
        let mut w = phi[n + 1].values().to_vec();
        stepper.implicit_solve(&mut w);
        let prev = stepper.explicit_transpose_apply(&w, a.snapshot(n).values());
        let prev = ScalarField::from_parts(grid, prev, T::zero());
        if !prev.is_finite() {
            return Err(Error::NonFinite { level: n });
        }
        psi[n] = ScalarField::from_parts(grid, w, T::zero());
        phi[n] = prev;
    }
    Ok(Adjoint {
        phi: Trajectory::from_parts(grid, phi),
        weights: Trajectory::from_parts(grid, psi),
    })
}

/// Backward march of the transposed scheme from `phi_t`.
pub fn solve_adjoint<T: Real>(
    phi_t: &ScalarField<T>,
    a: &Trajectory<T>,
    grid: &Grid1D<T>,
) -> Result<Adjoint<T>> {
    if phi_t.len() != grid.nx() {
        return Err(Error::ShapeMismatch { expected: grid.nx(), found: phi_t.len() });
    }
    if !phi_t.is_finite() {
        return Err(Error::InvalidField("non-finite terminal adjoint datum".into()));
    }
    solve_adjoint_with(&Stepper::new(*grid), phi_t, a)
}

/// Precomputed pieces shared by every gradient evaluation.
struct Operator<'a, T: Real> {
    problem: &'a LinearControlProblem<T>,
    stepper: Stepper<T>,
    mask: ScalarField<T>,
}

impl<'a, T: Real> Operator<'a, T> {
    fn new(problem: &'a LinearControlProblem<T>) -> Result<Self> {
        Ok(Self {
            stepper: Stepper::new(problem.grid),
            mask: indicator(&problem.window, &problem.grid)?,
            problem,
        })
    }

    fn control_of(&self, adj: &Adjoint<T>) -> Trajectory<T> {
        adj.weights.map(|w| w.mul(&self.mask))
    }

    /// Terminal state of the forward scheme from `y0` with source `source + 1_w v`.
    fn forward_terminal(
        &self,
        y0: &ScalarField<T>,
        control: Option<&Trajectory<T>>,
        with_source: bool,
    ) -> Result<ScalarField<T>> {
        let grid = self.problem.grid;
        let mut y = ScalarField::from_parts(grid, y0.values().to_vec(), T::zero());
        let src = if with_source { self.problem.source.as_ref() } else { None };
        for n in 0..grid.nt() {
            let rhs = match (src, control) {
                (None, None) => None,
                (Some(s), None) => Some(s.snapshot(n).clone()),
                (None, Some(v)) => Some(v.snapshot(n).mul(&self.mask)),
                (Some(s), Some(v)) => Some(s.snapshot(n).axpy(T::one(), &v.snapshot(n).mul(&self.mask))),
            };
            y = self.stepper.step(&y, self.problem.a.snapshot(n), rhs.as_ref());
            if !y.is_finite() {
                return Err(Error::NonFinite { level: n + 1 });
            }
        }
        Ok(y)
    }

    /// `(Lambda + eps) phi`.
    fn apply(&self, phi: &ScalarField<T>) -> Result<ScalarField<T>> {
        let adj = solve_adjoint_with(&self.stepper, phi, &self.problem.a)?;
        let v = self.control_of(&adj);
        let zero = ScalarField::zeros(self.problem.grid);
        let y = self.forward_terminal(&zero, Some(&v), false)?;
        Ok(y.axpy(self.problem.epsilon, phi))
    }
}

/// Value of the penalized dual functional at `phi_t`.
pub fn dual_functional<T: Real>(problem: &LinearControlProblem<T>, phi_t: &ScalarField<T>) -> Result<T> {
    let op = Operator::new(problem)?;
    let adj = solve_adjoint_with(&op.stepper, phi_t, &problem.a)?;
    let v = op.control_of(&adj);
    let grid = problem.grid;
    let dt = grid.dt();
    let mut j = T::c(0.5) * v.norm(SpaceTimeNorm::L2L2).powi(2)
        + T::c(0.5) * problem.epsilon * phi_t.dot(phi_t)
        + problem.y0.dot(adj.phi.initial());
    if let Some(s) = &problem.source {
        for n in 0..grid.nt() {
            j += dt * s.snapshot(n).dot(adj.weights.snapshot(n));
        }
    }
    Ok(j)
}

/// Gradient of [`dual_functional`] in the discrete `L^2` inner product.
pub fn dual_gradient<T: Real>(problem: &LinearControlProblem<T>, phi_t: &ScalarField<T>) -> Result<ScalarField<T>> {
    let op = Operator::new(problem)?;
    let free = op.forward_terminal(&problem.y0, None, true)?;
    Ok(op.apply(phi_t)?.axpy(T::one(), &free))
}

/// Conjugate gradients on `(Lambda + eps) phi_T = -y_free(T)`.
pub fn hum_control<T: Real>(problem: &LinearControlProblem<T>) -> Result<HumSolution<T>> {
    problem.validate()?;
    let op = Operator::new(problem)?;
    let grid = problem.grid;

    let free = op.forward_terminal(&problem.y0, None, true)?;
    let mut phi = ScalarField::zeros(grid);
    let mut r = free.scaled(-T::one());
    let r0 = r.dot(&r).sqrt();
    let mut iters = 0;
    let mut converged = r0 == T::zero();
    let mut rel = T::zero();

    if !converged {
        let mut p = r.clone();
        let mut rr = r.dot(&r);
        while iters < problem.cg_max_iter {
            let ap = op.apply(&p)?;
            let alpha = rr / p.dot(&ap);
            phi = phi.axpy(alpha, &p);
            r = r.axpy(-alpha, &ap);
            iters += 1;
            let rr_new = r.dot(&r);
            rel = rr_new.sqrt() / r0;
            if !rel.is_finite() {
                return Err(Error::NonFinite { level: 0 });
            }
            if rel <= problem.cg_tol {
                converged = true;
                break;
            }
            p = r.axpy(rr_new / rr, &p);
            rr = rr_new;
        }
    }

    let adj = solve_adjoint_with(&op.stepper, &phi, &problem.a)?;
    let control = op.control_of(&adj);
    let mut forcing = ForcingSpec::control(control.clone(), &problem.window)?;
    if let Some(s) = &problem.source {
        forcing = forcing.with_body(s.clone());
    }
    let state = solve_linear(&problem.y0, &problem.a, &forcing, &grid)?;
    Ok(HumSolution {
        terminal_l2: state.terminal().norm(NormKind::L2),
        control_l2: control.norm(SpaceTimeNorm::L2L2),
        control_sup: control.norm(SpaceTimeNorm::Sup),
        control,
        state,
        phi_t: phi,
        cg_iters: iters,
        converged,
        relative_gradient: rel,
    })
}

/// One row of a control-cost table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostRow<T> {
    pub norm_a_inf: T,
    pub horizon: T,
    /// `|v|_{L^2} / |y0|_{L^2}`.
    pub cost: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostTable<T> {
    pub rows: Vec<CostRow<T>>,
    /// Smallest `c` with `cost <= exp(c (1 + 1/T + (1 + T) |A|^2))` on every row.
    pub fitted_c1: T,
    /// RMS gap between `c (1 + X)` and `log(cost)` over the rows.
    pub fit_residual: T,
}

/// Exponent `1 + 1/T + (1 + T) |A|^2` of the cost bound.
pub fn cost_exponent<T: Real>(norm_a: T, horizon: T) -> T {
    T::one() + T::one() / horizon + (T::one() + horizon) * norm_a * norm_a
}

/// Envelope fit of the cost bound.
pub fn fit_cost<T: Real>(rows: &[CostRow<T>]) -> (T, T) {
    if rows.is_empty() {
        return (T::nan(), T::nan());
    }
    let c = rows
        .iter()
        .map(|r| r.cost.ln() / cost_exponent(r.norm_a_inf, r.horizon))
        .fold(T::neg_infinity(), T::max);
    let ss: T = rows
        .iter()
        .map(|r| {
            let gap = c * cost_exponent(r.norm_a_inf, r.horizon) - r.cost.ln();
            gap * gap
        })
        .sum();
    (c, (ss / T::from_count(rows.len())).sqrt())
}

/// Measures the normalized cost of the minimal control for each coefficient.
///
/// Every coefficient carries its own grid, whose horizon is the `T` of that
/// row. `y0` is sampled on each grid. Coefficients violating
/// `dt |A|_inf <= dx / 2` on their grid are rejected.
pub fn cost_study<T: Real>(
    a_family: &[Trajectory<T>],
    y0: impl Fn(T) -> T + Sync,
    window: &ControlWindow<T>,
    epsilon: T,
) -> Result<CostTable<T>> {
    let rows: Vec<CostRow<T>> = a_family
        .par_iter()
        .map(|a| {
            let grid = *a.grid();
            let amax = a.norm(SpaceTimeNorm::Sup);
            if grid.dt() * amax > grid.dx() / T::c(2.0) {
                return Err(Error::Cfl { dt: grid.dt().as_f64(), limit: (grid.dx() / (T::c(2.0) * amax)).as_f64() });
            }
            let init = ScalarField::from_fn(grid, &y0);
            let problem = LinearControlProblem::new(init.clone(), a.clone(), *window, epsilon)?;
            let sol = hum_control(&problem)?;
            Ok(CostRow {
                norm_a_inf: a.norm(SpaceTimeNorm::Sup),
                horizon: grid.horizon(),
                cost: sol.control_l2 / init.norm(NormKind::L2),
            })
        })
        .collect::<Result<_>>()?;
    let (fitted_c1, fit_residual) = fit_cost(&rows);
    Ok(CostTable { rows, fitted_c1, fit_residual })
}
