//! IMEX Euler solvers for the linear transport-diffusion equation, the
//! Burgers-alpha system and the Burgers limit.
//!
//! One step of every solver is
//!
//! ```text
//! (I - dt D_xx) y^{n+1} = y^n + dt (s^n - A^n * D_x y^n)
//! ```
//!
//! with `D_x` the centered difference and `D_xx` the three-point Laplacian,
//! both with homogeneous Dirichlet ends. The transport coefficient `A^n` is
//! either prescribed (linear problem) or computed from `y^n` (nonlinear
//! problems, lagged by one level).

use crate::error::{Error, Result};
use crate::filter::{AlphaParam, HelmholtzFilter};
use crate::grid::{Grid1D, NormKind, ScalarField, SpaceTimeNorm, Trajectory};
use crate::num::Real;
use crate::tridiag::{Tridiagonal, TridiagonalLu};
use crate::window::{indicator, ControlWindow};

/// Body force and a windowed control, both sampled on every time level.
#[derive(Debug, Clone)]
pub struct ForcingSpec<T> {
    body: Option<Trajectory<T>>,
    control: Option<(Trajectory<T>, ScalarField<T>)>,
}

impl<T: Real> Default for ForcingSpec<T> {
    fn default() -> Self {
        Self::none()
    }
}

impl<T: Real> ForcingSpec<T> {
    pub fn none() -> Self {
        Self { body: None, control: None }
    }

    pub fn body(f: Trajectory<T>) -> Self {
        Self { body: Some(f), control: None }
    }

    /// Control `v` acting through `1_{(a,b)}`.
    pub fn control(v: Trajectory<T>, window: &ControlWindow<T>) -> Result<Self> {
        let mask = indicator(window, v.grid())?;
        Ok(Self { body: None, control: Some((v, mask)) })
    }

    pub fn with_body(mut self, f: Trajectory<T>) -> Self {
        self.body = Some(f);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.body.is_none() && self.control.is_none()
    }

    fn check_grid(&self, grid: &Grid1D<T>) -> Result<()> {
        let mut grids = self.body.iter().map(|f| f.grid()).chain(self.control.iter().map(|(v, _)| v.grid()));
        match grids.find(|g| g.nx() != grid.nx() || g.nt() != grid.nt()) {
            Some(g) => Err(Error::ShapeMismatch { expected: grid.nx() * (grid.nt() + 1), found: g.nx() * (g.nt() + 1) }),
            None => Ok(()),
        }
    }

    /// Total source `f^n + 1_(a,b) v^n` at level `n`, or `None` when identically zero.
    pub fn rhs(&self, n: usize) -> Option<ScalarField<T>> {
        let mut out: Option<ScalarField<T>> = self.body.as_ref().map(|f| f.snapshot(n).clone());
        if let Some((v, mask)) = &self.control {
            let masked = v.snapshot(n).mul(mask);
            out = Some(match out {
                Some(f) => f.axpy(T::one(), &masked),
                None => masked,
            });
        }
        out
    }

    /// `sup |f + 1_(a,b) v|` over the levels that enter the stepper.
    pub fn sup(&self, grid: &Grid1D<T>) -> T {
        (0..grid.nt())
            .filter_map(|n| self.rhs(n))
            .fold(T::zero(), |m, f| m.max(f.norm(NormKind::Sup)))
    }
}

/// How the transport CFL condition `dt |A| <= dx / 2` is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CflGuard {
    /// Reject up front unless `dt <= dx / (2 M(T))` with `M(T) = |y0|_inf + T |f|_inf`.
    #[default]
    Apriori,
    /// Check `dt |A^n|_inf <= dx / 2` at every step with the coefficient actually used.
    Runtime,
    Off,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolverOptions {
    pub cfl: CflGuard,
}

/// Factored implicit diffusion operator `I - dt D_xx` for one grid.
#[derive(Debug, Clone)]
pub struct Stepper<T> {
    grid: Grid1D<T>,
    implicit: Tridiagonal<T>,
    lu: TridiagonalLu<T>,
}

impl<T: Real> Stepper<T> {
    pub fn new(grid: Grid1D<T>) -> Self {
        let implicit = Tridiagonal::identity_minus_laplacian(grid.nx(), grid.dt(), grid.dx());
        let lu = implicit.factor();
        Self { grid, implicit, lu }
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    /// `M x` with `M = I - dt D_xx`.
    pub fn implicit_apply(&self, x: &[T]) -> Vec<T> {
        self.implicit.apply(x)
    }

    /// `M^{-1} x` in place.
    pub fn implicit_solve(&self, x: &mut [T]) {
        self.lu.solve_in_place(x)
    }

    /// Explicit part `B y = y - dt A * D_x y`.
    pub fn explicit_apply(&self, y: &[T], a: &[T]) -> Vec<T> {
        let n = y.len();
        let k = self.grid.dt() / (T::c(2.0) * self.grid.dx());
        (0..n)
            .map(|i| {
                let right = if i + 1 < n { y[i + 1] } else { T::zero() };
                let left = if i > 0 { y[i - 1] } else { T::zero() };
                y[i] - k * a[i] * (right - left)
            })
            .collect()
    }

    /// Transpose of the explicit part: `B^T w = w + dt D_x (A * w)`.
    pub fn explicit_transpose_apply(&self, w: &[T], a: &[T]) -> Vec<T> {
        let n = w.len();
        let k = self.grid.dt() / (T::c(2.0) * self.grid.dx());
        (0..n)
            .map(|i| {
                let right = if i + 1 < n { a[i + 1] * w[i + 1] } else { T::zero() };
                let left = if i > 0 { a[i - 1] * w[i - 1] } else { T::zero() };
                w[i] + k * (right - left)
            })
            .collect()
    }

    pub fn step(
        &self,
        y_now: &ScalarField<T>,
        a_now: &ScalarField<T>,
        rhs_now: Option<&ScalarField<T>>,
    ) -> ScalarField<T> {
        let mut next = self.explicit_apply(y_now.values(), a_now.values());
        if let Some(s) = rhs_now {
            let dt = self.grid.dt();
            for (v, &f) in next.iter_mut().zip(s.values()) {
                *v += dt * f;
            }
        }
        self.lu.solve_in_place(&mut next);
        ScalarField::from_parts(self.grid, next, T::zero())
    }
}

/// One IMEX step of `y_t - y_xx + A y_x = rhs` on `grid`.
pub fn step_linear<T: Real>(
    y_now: &ScalarField<T>,
    a_now: &ScalarField<T>,
    rhs_now: &ScalarField<T>,
    grid: &Grid1D<T>,
) -> ScalarField<T> {
    Stepper::new(*grid).step(y_now, a_now, Some(rhs_now))
}

fn check_field<T: Real>(f: &ScalarField<T>, grid: &Grid1D<T>) -> Result<()> {
    if f.len() != grid.nx() {
        return Err(Error::ShapeMismatch { expected: grid.nx(), found: f.len() });
    }
    if !f.is_finite() {
        return Err(Error::InvalidField("non-finite initial datum".into()));
    }
    Ok(())
}

/// March the linear problem with prescribed coefficient `a` over all `nt` steps.
pub fn solve_linear<T: Real>(
    y0: &ScalarField<T>,
    a: &Trajectory<T>,
    forcing: &ForcingSpec<T>,
    grid: &Grid1D<T>,
) -> Result<Trajectory<T>> {
    check_field(y0, grid)?;
    forcing.check_grid(grid)?;
    if a.grid().nt() != grid.nt() || a.grid().nx() != grid.nx() {
        return Err(Error::ShapeMismatch { expected: grid.nt() + 1, found: a.grid().nt() + 1 });
    }
    let stepper = Stepper::new(*grid);
    let mut snaps = Vec::with_capacity(grid.nt() + 1);
    snaps.push(ScalarField::from_parts(*grid, y0.values().to_vec(), T::zero()));
    for n in 0..grid.nt() {
        let rhs = forcing.rhs(n);
        let next = stepper.step(&snaps[n], a.snapshot(n), rhs.as_ref());
        if !next.is_finite() {
            return Err(Error::NonFinite { level: n + 1 });
        }
        snaps.push(next);
    }
    Ok(Trajectory::from_parts(*grid, snaps))
}

/// Map from the current state to the transport coefficient of a nonlinear model.
pub trait TransportLaw<T: Real> {
    fn coefficient(&self, y: &ScalarField<T>) -> ScalarField<T>;
}

/// Burgers-alpha: the coefficient is the filtered state.
impl<T: Real> TransportLaw<T> for HelmholtzFilter<T> {
    fn coefficient(&self, y: &ScalarField<T>) -> ScalarField<T> {
        self.apply(y)
    }
}

/// Plain Burgers: the state transports itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct SelfTransport;

impl<T: Real> TransportLaw<T> for SelfTransport {
    fn coefficient(&self, y: &ScalarField<T>) -> ScalarField<T> {
        y.clone()
    }
}

/// A priori bound `M(T) = |y0|_inf + T |f|_inf`.
pub fn bound_m<T: Real>(y0: &ScalarField<T>, forcing: &ForcingSpec<T>, grid: &Grid1D<T>) -> T {
    y0.norm(NormKind::Sup) + grid.horizon() * forcing.sup(grid)
}

fn runtime_cfl<T: Real>(a: &ScalarField<T>, grid: &Grid1D<T>) -> Result<()> {
    let amax = a.norm(NormKind::Sup);
    if grid.dt() * amax > grid.dx() / T::c(2.0) {
        return Err(Error::Cfl {
            dt: grid.dt().as_f64(),
            limit: (grid.dx() / (T::c(2.0) * amax)).as_f64(),
        });
    }
    Ok(())
}

/// March a nonlinear model. Returns the state and the coefficient used at every level.
pub fn solve_transport<T: Real, L: TransportLaw<T>>(
    y0: &ScalarField<T>,
    forcing: &ForcingSpec<T>,
    law: &L,
    grid: &Grid1D<T>,
    options: SolverOptions,
) -> Result<(Trajectory<T>, Trajectory<T>)> {
    check_field(y0, grid)?;
    forcing.check_grid(grid)?;
    if options.cfl == CflGuard::Apriori {
        let m = bound_m(y0, forcing, grid);
        if m > T::zero() && grid.dt() > grid.dx() / (T::c(2.0) * m) {
            return Err(Error::Cfl {
                dt: grid.dt().as_f64(),
                limit: (grid.dx() / (T::c(2.0) * m)).as_f64(),
            });
        }
    }
    let stepper = Stepper::new(*grid);
    let mut ys = Vec::with_capacity(grid.nt() + 1);
    let mut zs = Vec::with_capacity(grid.nt() + 1);
    ys.push(ScalarField::from_parts(*grid, y0.values().to_vec(), T::zero()));
    for n in 0..grid.nt() {
        let a = law.coefficient(&ys[n]);
        if options.cfl == CflGuard::Runtime {
            runtime_cfl(&a, grid)?;
        }
        let rhs = forcing.rhs(n);
        let next = stepper.step(&ys[n], &a, rhs.as_ref());
        if !next.is_finite() {
            return Err(Error::NonFinite { level: n + 1 });
        }
        zs.push(a);
        ys.push(next);
    }
    zs.push(law.coefficient(&ys[grid.nt()]));
    Ok((Trajectory::from_parts(*grid, ys), Trajectory::from_parts(*grid, zs)))
}

/// Burgers-alpha system; returns `(y, z)` with `z = filter(y)` at every level.
pub fn solve_burgers_alpha<T: Real>(
    y0: &ScalarField<T>,
    forcing: &ForcingSpec<T>,
    alpha: AlphaParam<T>,
    grid: &Grid1D<T>,
) -> Result<(Trajectory<T>, Trajectory<T>)> {
    solve_burgers_alpha_with(y0, forcing, alpha, grid, SolverOptions::default())
}

pub fn solve_burgers_alpha_with<T: Real>(
    y0: &ScalarField<T>,
    forcing: &ForcingSpec<T>,
    alpha: AlphaParam<T>,
    grid: &Grid1D<T>,
    options: SolverOptions,
) -> Result<(Trajectory<T>, Trajectory<T>)> {
    solve_transport(y0, forcing, &HelmholtzFilter::new(*grid, alpha), grid, options)
}

/// Viscous Burgers equation, the `alpha = 0` member of the family.
pub fn solve_burgers<T: Real>(
    y0: &ScalarField<T>,
    forcing: &ForcingSpec<T>,
    grid: &Grid1D<T>,
) -> Result<Trajectory<T>> {
    solve_transport(y0, forcing, &SelfTransport, grid, SolverOptions::default()).map(|(y, _)| y)
}

/// Result of comparing a computed Burgers-alpha solution with `M(T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport<T> {
    pub sup_state: T,
    pub bound_m: T,
    pub satisfied: bool,
    /// `bound_m - sup_state`; negative when the bound is exceeded.
    pub margin: T,
}

#[derive(Debug, Clone, Copy)]
pub struct EstimateTolerance<T> {
    pub relative: T,
    /// Coefficient `c` of the allowance `c (dx^2 + dt) M(T)`.
    pub discretization: T,
}

impl<T: Real> Default for EstimateTolerance<T> {
    fn default() -> Self {
        Self { relative: T::c(1e-6), discretization: T::one() }
    }
}

/// Checks `|y|_inf <= M(T)` and `|z|_inf <= M(T)`.
pub fn check_estimates<T: Real>(
    y: &Trajectory<T>,
    z: &Trajectory<T>,
    y0: &ScalarField<T>,
    forcing: &ForcingSpec<T>,
    tol: EstimateTolerance<T>,
) -> EstimateReport<T> {
    let grid = y.grid();
    let m = bound_m(y0, forcing, grid);
    let sup_state = y.norm(SpaceTimeNorm::Sup).max(z.norm(SpaceTimeNorm::Sup));
    let allowance = tol.discretization * (grid.dx() * grid.dx() + grid.dt()) * m;
    EstimateReport {
        sup_state,
        bound_m: m,
        satisfied: sup_state <= m * (T::one() + tol.relative) + allowance,
        margin: m - sup_state,
    }
}

/// Incremental Burgers-alpha integrator used when the horizon is not known in advance.
pub struct Marcher<T: Real> {
    stepper: Stepper<T>,
    filter: HelmholtzFilter<T>,
    state: ScalarField<T>,
    level: usize,
}

impl<T: Real> Marcher<T> {
    /// `grid` fixes `dx` and `dt`; its `nt` is irrelevant.
    pub fn new(y0: &ScalarField<T>, alpha: AlphaParam<T>, grid: &Grid1D<T>) -> Result<Self> {
        check_field(y0, grid)?;
        Ok(Self {
            stepper: Stepper::new(*grid),
            filter: HelmholtzFilter::new(*grid, alpha),
            state: ScalarField::from_parts(*grid, y0.values().to_vec(), T::zero()),
            level: 0,
        })
    }

    pub fn state(&self) -> &ScalarField<T> {
        &self.state
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn time(&self) -> T {
        self.stepper.grid().t(self.level)
    }

    /// Uncontrolled step.
    pub fn advance(&mut self) -> Result<&ScalarField<T>> {
        let z = self.filter.apply(&self.state);
        let next = self.stepper.step(&self.state, &z, None);
        self.level += 1;
        if !next.is_finite() {
            return Err(Error::NonFinite { level: self.level });
        }
        self.state = next;
        Ok(&self.state)
    }
}
