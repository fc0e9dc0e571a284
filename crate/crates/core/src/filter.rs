//! Helmholtz filter `z - alpha^2 z_xx = y` with Dirichlet ends.

use crate::error::{Error, Result};
use crate::grid::{Grid1D, ScalarField, Trajectory};
use crate::num::Real;
use crate::tridiag::{Tridiagonal, TridiagonalLu};

/// Filter length. Zero turns the filter into the identity.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AlphaParam<T>(T);

impl<T: Real> AlphaParam<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if !(alpha >= T::zero()) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        Ok(Self(alpha))
    }

    pub fn zero() -> Self {
        Self(T::zero())
    }

    pub fn value(self) -> T {
        self.0
    }

    pub fn is_identity(self) -> bool {
        self.0 == T::zero()
    }
}

/// Factored filter operator for one grid and one `alpha`.
#[derive(Debug, Clone)]
pub struct HelmholtzFilter<T> {
    grid: Grid1D<T>,
    alpha: AlphaParam<T>,
    lu: Option<TridiagonalLu<T>>,
}

impl<T: Real> HelmholtzFilter<T> {
    pub fn new(grid: Grid1D<T>, alpha: AlphaParam<T>) -> Self {
        let lu = (!alpha.is_identity()).then(|| {
            let a = alpha.value();
            Tridiagonal::identity_minus_laplacian(grid.nx(), a * a, grid.dx()).factor()
        });
        Self { grid, alpha, lu }
    }

    pub fn alpha(&self) -> AlphaParam<T> {
        self.alpha
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    /// Homogeneous Dirichlet filter. The trace of `y`, if any, is ignored.
    pub fn apply(&self, y: &ScalarField<T>) -> ScalarField<T> {
        self.apply_with_trace(y, T::zero())
    }

    /// Filter with `z(0) = 0` and `z(L) = right_trace`.
    pub fn apply_with_trace(&self, y: &ScalarField<T>, right_trace: T) -> ScalarField<T> {
        match &self.lu {
            // alpha = 0: z = y in the interior and at the boundary
            None => ScalarField::from_parts(self.grid, y.values().to_vec(), right_trace),
            Some(lu) => {
                let mut rhs = y.values().to_vec();
                let a = self.alpha.value();
                let dx = self.grid.dx();
                let n = rhs.len();
                rhs[n - 1] += a * a / (dx * dx) * right_trace;
                lu.solve_in_place(&mut rhs);
                ScalarField::from_parts(self.grid, rhs, right_trace)
            }
        }
    }
}

pub fn apply_filter<T: Real>(y: &ScalarField<T>, alpha: AlphaParam<T>) -> ScalarField<T> {
    HelmholtzFilter::new(*y.grid(), alpha).apply(y)
}

pub fn apply_filter_with_trace<T: Real>(
    y: &ScalarField<T>,
    alpha: AlphaParam<T>,
    right_trace: T,
) -> ScalarField<T> {
    HelmholtzFilter::new(*y.grid(), alpha).apply_with_trace(y, right_trace)
}

/// Snapshot-wise filter; there is no coupling in time.
pub fn filter_trajectory<T: Real>(y: &Trajectory<T>, alpha: AlphaParam<T>) -> Trajectory<T> {
    let f = HelmholtzFilter::new(*y.grid(), alpha);
    y.map(|s| f.apply(s))
}

/// Damping factor of the discrete filter on the `k`-th Dirichlet sine mode.
pub fn discrete_damping<T: Real>(grid: &Grid1D<T>, alpha: AlphaParam<T>, k: usize) -> T {
    let dx = grid.dx();
    let lambda = T::c(2.0) / (dx * dx)
        * (T::one() - (T::from_count(k) * T::PI() * dx / grid.length()).cos());
    let a = alpha.value();
    T::one() / (T::one() + a * a * lambda)
}
