//! Thomas algorithm for tridiagonal systems.

use crate::num::Real;

/// Tridiagonal matrix `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1]`.
/// `lower[0]` and `upper[n-1]` are ignored.
#[derive(Debug, Clone)]
pub struct Tridiagonal<T> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> Tridiagonal<T> {
    /// Constant-coefficient matrix `I - c * D_xx` with the standard three-point stencil
    /// and homogeneous Dirichlet ends.
    pub fn identity_minus_laplacian(n: usize, c: T, dx: T) -> Self {
        let r = c / (dx * dx);
        Self {
            lower: vec![-r; n],
            diag: vec![T::one() + r + r; n],
            upper: vec![-r; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Forward elimination without pivoting; fine for diagonally dominant systems.
    pub fn factor(&self) -> TridiagonalLu<T> {
        let n = self.len();
        let mut c = vec![T::zero(); n];
        let mut m = vec![T::zero(); n];
        m[0] = T::one() / self.diag[0];
        if n > 1 {
            c[0] = self.upper[0] * m[0];
        }
        for i in 1..n {
            let denom = self.diag[i] - self.lower[i] * c[i - 1];
            m[i] = T::one() / denom;
            if i + 1 < n {
                c[i] = self.upper[i] * m[i];
            }
        }
        TridiagonalLu { lower: self.lower.clone(), c, inv_pivot: m }
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        self.factor().solve(rhs)
    }
}

/// Stored elimination of a [`Tridiagonal`] for repeated solves with the same matrix.
#[derive(Debug, Clone)]
pub struct TridiagonalLu<T> {
    lower: Vec<T>,
    c: Vec<T>,
    inv_pivot: Vec<T>,
}

impl<T: Real> TridiagonalLu<T> {
    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        let n = x.len();
        assert_eq!(n, self.c.len(), "tridiagonal solve: size mismatch");
        x[0] *= self.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.lower[i] * x[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] = x[i] - self.c[i] * x[i + 1];
        }
    }
}
