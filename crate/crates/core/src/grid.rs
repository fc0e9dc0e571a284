//! Uniform space-time grids, interior-node fields and their discrete norms.
//!
//! Spatial nodes are `x_i = (i + 1) dx` for `i = 0..nx`, so the two Dirichlet
//! boundary nodes `x = 0` and `x = L` are not stored. The left trace is always
//! zero; the right trace defaults to zero and is only set by the boundary
//! control extension.

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D<T> {
    length: T,
    horizon: T,
    nx: usize,
    nt: usize,
    dx: T,
    dt: T,
}

impl<T: Real> Grid1D<T> {
    pub fn new(length: T, horizon: T, nx: usize, nt: usize) -> Result<Self> {
        if !(length > T::zero()) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("L must be positive, got {length}")));
        }
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidGrid(format!("T must be positive, got {horizon}")));
        }
        if nx < 3 {
            return Err(Error::InvalidGrid(format!("nx must be at least 3, got {nx}")));
        }
        if nt < 1 {
            return Err(Error::InvalidGrid("nt must be at least 1".into()));
        }
        Ok(Self {
            length,
            horizon,
            nx,
            nt,
            dx: length / T::from_count(nx + 1),
            dt: horizon / T::from_count(nt),
        })
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Coordinate of interior node `i`.
    #[inline]
    pub fn x(&self, i: usize) -> T {
        T::from_count(i + 1) * self.dx
    }

    /// Time of level `n`.
    #[inline]
    pub fn t(&self, n: usize) -> T {
        T::from_count(n) * self.dt
    }

    pub fn nodes(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.nx).map(move |i| self.x(i))
    }

    /// Same spatial discretization over a different horizon with the same `dt`.
    pub fn with_steps(&self, nt: usize) -> Result<Self> {
        Self::new(self.length, self.dt * T::from_count(nt), self.nx, nt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    Sup,
    L2,
    /// Discrete `H^1_0` seminorm: forward differences including both boundary gaps.
    H1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    grid: Grid1D<T>,
    values: Vec<T>,
    right_trace: T,
}

impl<T: Real> ScalarField<T> {
    pub fn new(grid: Grid1D<T>, values: Vec<T>) -> Result<Self> {
        Self::with_trace(grid, values, T::zero())
    }

    pub fn with_trace(grid: Grid1D<T>, values: Vec<T>, right_trace: T) -> Result<Self> {
        if values.len() != grid.nx() {
            return Err(Error::ShapeMismatch { expected: grid.nx(), found: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite entry at node {i}")));
        }
        if !right_trace.is_finite() {
            return Err(Error::InvalidField("non-finite right trace".into()));
        }
        Ok(Self { grid, values, right_trace })
    }

    pub(crate) fn from_parts(grid: Grid1D<T>, values: Vec<T>, right_trace: T) -> Self {
        debug_assert_eq!(values.len(), grid.nx());
        Self { grid, values, right_trace }
    }

    pub fn zeros(grid: Grid1D<T>) -> Self {
        Self::from_parts(grid, vec![T::zero(); grid.nx()], T::zero())
    }

    /// Samples `f` at the interior nodes.
    pub fn from_fn(grid: Grid1D<T>, f: impl Fn(T) -> T) -> Self {
        Self::from_parts(grid, grid.nodes().map(f).collect(), T::zero())
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn right_trace(&self) -> T {
        self.right_trace
    }

    pub fn set_right_trace(&mut self, trace: T) {
        self.right_trace = trace;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.right_trace.is_finite() && self.values.iter().all(|v| v.is_finite())
    }

    /// Value at padded index `j` where `j = 0` is `x = 0` and `j = nx + 1` is `x = L`.
    #[inline]
    pub fn padded(&self, j: usize) -> T {
        if j == 0 {
            T::zero()
        } else if j == self.values.len() + 1 {
            self.right_trace
        } else {
            self.values[j - 1]
        }
    }

    pub fn norm(&self, kind: NormKind) -> T {
        let dx = self.grid.dx();
        match kind {
            NormKind::Sup => self
                .values
                .iter()
                .fold(T::zero(), |m, v| m.max(v.abs())),
            NormKind::L2 => (dx * self.values.iter().map(|&v| v * v).sum::<T>()).sqrt(),
            NormKind::H1 => {
                let n = self.values.len();
                let s: T = (0..=n)
                    .map(|j| {
                        let d = (self.padded(j + 1) - self.padded(j)) / dx;
                        d * d
                    })
                    .sum();
                (dx * s).sqrt()
            }
        }
    }

    /// Discrete `L^2` inner product over the interior nodes.
    pub fn dot(&self, other: &Self) -> T {
        self.grid.dx()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a * b)
                .sum::<T>()
    }

    pub fn scaled(&self, c: T) -> Self {
        Self::from_parts(
            self.grid,
            self.values.iter().map(|&v| c * v).collect(),
            c * self.right_trace,
        )
    }

    /// `self + c * other`, traces included.
    pub fn axpy(&self, c: T, other: &Self) -> Self {
        Self::from_parts(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a + c * b)
                .collect(),
            self.right_trace + c * other.right_trace,
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-T::one(), other)
    }

    /// Pointwise product; the trace is multiplied as well.
    pub fn mul(&self, other: &Self) -> Self {
        Self::from_parts(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a * b)
                .collect(),
            self.right_trace * other.right_trace,
        )
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_parts(self.grid, self.values.iter().map(|&v| f(v)).collect(), f(self.right_trace))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceTimeNorm {
    Sup,
    L2L2,
    L2H1,
    LinfL2,
}

/// Snapshots at the `nt + 1` time levels of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    grid: Grid1D<T>,
    snapshots: Vec<ScalarField<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn new(grid: Grid1D<T>, snapshots: Vec<ScalarField<T>>) -> Result<Self> {
        if snapshots.len() != grid.nt() + 1 {
            return Err(Error::ShapeMismatch { expected: grid.nt() + 1, found: snapshots.len() });
        }
        for s in &snapshots {
            if s.len() != grid.nx() {
                return Err(Error::ShapeMismatch { expected: grid.nx(), found: s.len() });
            }
        }
        Ok(Self { grid, snapshots })
    }

    pub(crate) fn from_parts(grid: Grid1D<T>, snapshots: Vec<ScalarField<T>>) -> Self {
        debug_assert_eq!(snapshots.len(), grid.nt() + 1);
        Self { grid, snapshots }
    }

    pub fn zeros(grid: Grid1D<T>) -> Self {
        Self::constant(grid, &ScalarField::zeros(grid))
    }

    pub fn constant(grid: Grid1D<T>, field: &ScalarField<T>) -> Self {
        let mut f = field.clone();
        f.grid = grid;
        Self::from_parts(grid, vec![f; grid.nt() + 1])
    }

    /// Samples `f(x, t)` on every time level.
    pub fn from_fn(grid: Grid1D<T>, f: impl Fn(T, T) -> T) -> Self {
        let snapshots = (0..=grid.nt())
            .map(|n| {
                let t = grid.t(n);
                ScalarField::from_fn(grid, |x| f(x, t))
            })
            .collect();
        Self::from_parts(grid, snapshots)
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    pub fn snapshots(&self) -> &[ScalarField<T>] {
        &self.snapshots
    }

    pub fn snapshot(&self, n: usize) -> &ScalarField<T> {
        &self.snapshots[n]
    }

    pub fn initial(&self) -> &ScalarField<T> {
        &self.snapshots[0]
    }

    pub fn terminal(&self) -> &ScalarField<T> {
        &self.snapshots[self.grid.nt()]
    }

    pub fn into_snapshots(self) -> Vec<ScalarField<T>> {
        self.snapshots
    }

    pub fn map(&self, f: impl Fn(&ScalarField<T>) -> ScalarField<T>) -> Self {
        Self::from_parts(self.grid, self.snapshots.iter().map(f).collect())
    }

    pub fn zip_map(
        &self,
        other: &Self,
        f: impl Fn(&ScalarField<T>, &ScalarField<T>) -> ScalarField<T>,
    ) -> Self {
        Self::from_parts(
            self.grid,
            self.snapshots
                .iter()
                .zip(&other.snapshots)
                .map(|(a, b)| f(a, b))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a.sub(b))
    }

    pub fn scaled(&self, c: T) -> Self {
        self.map(|s| s.scaled(c))
    }

    /// Time-composite norms. Integrals in time use the left rectangle rule
    /// over levels `0..nt`, matching how sources enter the time stepper.
    pub fn norm(&self, kind: SpaceTimeNorm) -> T {
        let dt = self.grid.dt();
        let nt = self.grid.nt();
        let integrate = |k: NormKind| -> T {
            let s: T = self.snapshots[..nt]
                .iter()
                .map(|f| {
                    let v = f.norm(k);
                    v * v
                })
                .sum();
            (dt * s).sqrt()
        };
        match kind {
            SpaceTimeNorm::Sup => self
                .snapshots
                .iter()
                .fold(T::zero(), |m, f| m.max(f.norm(NormKind::Sup))),
            SpaceTimeNorm::LinfL2 => self
                .snapshots
                .iter()
                .fold(T::zero(), |m, f| m.max(f.norm(NormKind::L2))),
            SpaceTimeNorm::L2L2 => integrate(NormKind::L2),
            SpaceTimeNorm::L2H1 => integrate(NormKind::H1),
        }
    }
}
