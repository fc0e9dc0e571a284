//! Control windows and the smooth cutoff profiles used by the cutoff construction.

use crate::error::{Error, Result};
use crate::grid::{Grid1D, ScalarField};
use crate::num::Real;

/// Share of each transition band `(a, a')`, `(b', b)` left flat at either end,
/// so that `eta` vanishes near `a`, `b` and equals one near `a'`, `b'`.
const RAMP_MARGIN: f64 = 0.2;

/// C² quintic step: 0 for `s <= 0`, 1 for `s >= 1`.
pub fn smootherstep<T: Real>(s: T) -> T {
    if s <= T::zero() {
        T::zero()
    } else if s >= T::one() {
        T::one()
    } else {
        s * s * s * (s * (s * T::c(6.0) - T::c(15.0)) + T::c(10.0))
    }
}

/// The control interval `(a, b)` and the nested points `a < a' < a'' < b'' < b' < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlWindow<T> {
    pub a: T,
    pub b: T,
    pub a1: T,
    pub b1: T,
    pub a2: T,
    pub b2: T,
}

impl<T: Real> ControlWindow<T> {
    /// Window with nested points at fixed fractions of the width:
    /// `a' = a + w/4`, `a'' = a + 3w/10` and symmetrically on the right.
    pub fn new(a: T, b: T) -> Result<Self> {
        let w = b - a;
        Self::nested(
            a,
            b,
            a + T::c(0.25) * w,
            b - T::c(0.25) * w,
            a + T::c(0.3) * w,
            b - T::c(0.3) * w,
        )
    }

    pub fn nested(a: T, b: T, a1: T, b1: T, a2: T, b2: T) -> Result<Self> {
        let chain = [a, a1, a2, b2, b1, b];
        if chain.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidWindow("non-finite endpoint".into()));
        }
        if !chain.windows(2).all(|p| p[0] < p[1]) {
            return Err(Error::InvalidWindow(format!(
                "need a < a' < a'' < b'' < b' < b, got {a} {a1} {a2} {b2} {b1} {b}"
            )));
        }
        Ok(Self { a, b, a1, b1, a2, b2 })
    }

    /// Checks `0 < a` and `b < L`.
    pub fn check_inside(&self, length: T) -> Result<()> {
        if self.a <= T::zero() || self.b >= length {
            return Err(Error::InvalidWindow(format!(
                "window ({}, {}) must lie strictly inside (0, {length})",
                self.a, self.b
            )));
        }
        Ok(())
    }

    pub fn contains(&self, x: T) -> bool {
        self.a < x && x < self.b
    }

    /// The inner window `(a'', b'')` on which the cutoff construction places its HUM control.
    pub fn inner(&self) -> Result<Self> {
        Self::new(self.a2, self.b2)
    }

    /// Time cutoff: 1 on `[0, T/4]`, 0 on `[3T/4, T]`.
    pub fn theta(&self, t: T, horizon: T) -> T {
        T::one() - smootherstep((t - T::c(0.25) * horizon) / (T::c(0.5) * horizon))
    }

    /// Space cutoff supported in `(a, b)`, equal to one on a neighborhood of `[a', b']`.
    pub fn eta(&self, x: T) -> T {
        let m = T::c(RAMP_MARGIN);
        let left = self.a1 - self.a;
        let right = self.b - self.b1;
        let up = smootherstep((x - self.a - m * left) / ((T::one() - m - m) * left));
        let down = smootherstep((self.b - m * right - x) / ((T::one() - m - m) * right));
        up.min(down)
    }

    pub fn eta_field(&self, grid: &Grid1D<T>) -> ScalarField<T> {
        ScalarField::from_fn(*grid, |x| self.eta(x))
    }
}

/// `1_{(a,b)}` sampled at the interior nodes.
pub fn indicator<T: Real>(window: &ControlWindow<T>, grid: &Grid1D<T>) -> Result<ScalarField<T>> {
    if window.a < T::zero() || window.b > grid.length() {
        return Err(Error::InvalidWindow(format!(
            "window ({}, {}) outside (0, {})",
            window.a,
            window.b,
            grid.length()
        )));
    }
    Ok(ScalarField::from_fn(*grid, |x| {
        if window.contains(x) {
            T::one()
        } else {
            T::zero()
        }
    }))
}
