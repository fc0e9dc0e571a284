//! Boundary control at `x = L` by extension of the domain.
//!
//! The datum is extended by zero to `(0, L_ext)` and controlled from a window
//! in `(L, L_ext)`. The filter only lives on `(0, L)`, with right trace
//! `z(L) = y(L)`, and the transport coefficient vanishes beyond `L`. The trace
//! `u(t) = y(L, t)` of the extended state is the boundary control.

use crate::control::{fixed_point_control, FixedPointOptions, NonlinearControlResult};
use crate::dynamics::TransportLaw;
use crate::error::{Error, Result};
use crate::filter::{AlphaParam, HelmholtzFilter};
use crate::grid::{Grid1D, NormKind, ScalarField, Trajectory};
use crate::num::Real;
use crate::window::ControlWindow;

/// Extended domain `(0, ratio L)` and the control window inside `(L, ratio L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extension<T> {
    pub ratio: T,
    pub window: ControlWindow<T>,
}

impl<T: Real> Extension<T> {
    /// `L_ext = 1.5 L` with the window `(1.1 L, 1.4 L)`.
    pub fn standard(length: T) -> Result<Self> {
        Ok(Self { ratio: T::c(1.5), window: ControlWindow::new(T::c(1.1) * length, T::c(1.4) * length)? })
    }

    /// Extended grid sharing `dx` and `dt` with `grid`. Node `grid.nx()` of the
    /// extended grid sits at `x = L`.
    pub fn grid(&self, grid: &Grid1D<T>) -> Result<Grid1D<T>> {
        let length = grid.length();
        let cells = T::from_count(grid.nx() + 1) * self.ratio;
        let rounded = cells.round();
        if (cells - rounded).abs() > T::c(1e-9) * cells || rounded.to_usize().is_none() {
            return Err(Error::InvalidGrid(format!(
                "(nx + 1) * ratio = {cells} must be an integer for the extension"
            )));
        }
        let ext_length = self.ratio * length;
        if !(length < self.window.a && self.window.b < ext_length) {
            return Err(Error::InvalidWindow(format!(
                "need L < a < b < L_ext, got L = {length}, ({}, {}), L_ext = {ext_length}",
                self.window.a, self.window.b
            )));
        }
        Grid1D::new(ext_length, grid.horizon(), rounded.to_usize().unwrap_or(0) - 1, grid.nt())
    }
}

/// Transport law of the extended system.
#[derive(Debug, Clone)]
pub struct BoundaryTransport<T> {
    inner: HelmholtzFilter<T>,
    nx: usize,
    ext: Grid1D<T>,
}

impl<T: Real> BoundaryTransport<T> {
    pub fn new(grid: Grid1D<T>, ext: Grid1D<T>, alpha: AlphaParam<T>) -> Self {
        Self { inner: HelmholtzFilter::new(grid, alpha), nx: grid.nx(), ext }
    }

    /// Restriction to `(0, L)` with the value at `x = L` as right trace.
    pub fn restrict(&self, y: &ScalarField<T>) -> ScalarField<T> {
        ScalarField::from_parts(*self.inner.grid(), y.values()[..self.nx].to_vec(), y.values()[self.nx])
    }

    /// Filtered field on `(0, L)` with `z(L) = y(L)`.
    pub fn filter(&self, y: &ScalarField<T>) -> ScalarField<T> {
        let r = self.restrict(y);
        self.inner.apply_with_trace(&r, r.right_trace())
    }
}

impl<T: Real> TransportLaw<T> for BoundaryTransport<T> {
    fn coefficient(&self, y: &ScalarField<T>) -> ScalarField<T> {
        let z = self.filter(y);
        let mut values = z.values().to_vec();
        values.push(z.right_trace());
        values.resize(self.ext.nx(), T::zero());
        ScalarField::from_parts(self.ext, values, T::zero())
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryControl<T> {
    /// `u(t_n)` for `n = 0..=nt`.
    pub u: Vec<T>,
    /// State on `(0, L)`; every snapshot carries `u` as its right trace.
    pub state: Trajectory<T>,
    pub filtered: Trajectory<T>,
    pub extended: NonlinearControlResult<T>,
    /// `|y(T)|_2 / |y0|_2` on `(0, L)`.
    pub terminal_ratio: T,
    /// Sup of the residual of the boundary-controlled scheme on `(0, L)`.
    pub residual: T,
}

impl<T: Real> BoundaryControl<T> {
    /// Largest change of `u` between consecutive levels.
    pub fn max_jump(&self) -> T {
        self.u.windows(2).map(|w| (w[1] - w[0]).abs()).fold(T::zero(), T::max)
    }
}

/// Sup over levels and nodes of the residual of
/// `(I - dt D_xx) y^{n+1} = y^n - dt z^n D_x y^n` on `(0, L)` with Dirichlet data
/// `y(0) = 0`, `y(L) = u` taken from the right traces.
pub fn boundary_residual<T: Real>(y: &Trajectory<T>, z: &Trajectory<T>) -> T {
    let grid = *y.grid();
    let (dt, dx) = (grid.dt(), grid.dx());
    let n_x = grid.nx();
    let mut worst = T::zero();
    for n in 0..grid.nt() {
        let (now, next, a) = (y.snapshot(n), y.snapshot(n + 1), z.snapshot(n));
        for j in 1..=n_x {
            let lap = (next.padded(j + 1) - T::c(2.0) * next.padded(j) + next.padded(j - 1)) / (dx * dx);
            let grad = (now.padded(j + 1) - now.padded(j - 1)) / (T::c(2.0) * dx);
            let r = next.padded(j) - dt * lap - now.padded(j) + dt * a.padded(j) * grad;
            worst = worst.max(r.abs());
        }
    }
    worst
}

/// `grid` is the grid of `(0, L)`; `y0` lives on it.
pub fn boundary_null_control<T: Real>(
    y0: &ScalarField<T>,
    alpha: AlphaParam<T>,
    extension: &Extension<T>,
    grid: &Grid1D<T>,
    options: &FixedPointOptions<T>,
) -> Result<BoundaryControl<T>> {
    if y0.len() != grid.nx() {
        return Err(Error::ShapeMismatch { expected: grid.nx(), found: y0.len() });
    }
    let ext = extension.grid(grid)?;
    let law = BoundaryTransport::new(*grid, ext, alpha);
    let mut padded = y0.values().to_vec();
    padded.resize(ext.nx(), T::zero());
    let y0_ext = ScalarField::new(ext, padded)?;

    let extended = fixed_point_control(&y0_ext, &law, alpha, &extension.window, &ext, options)?;
    let snaps = extended.state.snapshots();
    let state = Trajectory::from_parts(*grid, snaps.iter().map(|s| law.restrict(s)).collect());
    let filtered = Trajectory::from_parts(*grid, snaps.iter().map(|s| law.filter(s)).collect());
    let u = state.snapshots().iter().map(|s| s.right_trace()).collect();
    let y0_l2 = y0.norm(NormKind::L2);
    let terminal_ratio = if y0_l2 == T::zero() {
        T::zero()
    } else {
        state.terminal().norm(NormKind::L2) / y0_l2
    };
    let residual = boundary_residual(&state, &filtered);
    Ok(BoundaryControl { u, state, filtered, extended, terminal_ratio, residual })
}
