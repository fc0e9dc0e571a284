//! Sweeps over the filter scale for data outside the local regime.

use rayon::prelude::*;

use crate::control::{nonlinear_null_control, FixedPointOptions};
use crate::error::{Error, Result};
use crate::filter::AlphaParam;
use crate::grid::{Grid1D, ScalarField, SpaceTimeNorm};
use crate::num::Real;
use crate::window::ControlWindow;

#[derive(Debug, Clone, PartialEq)]
pub struct LargeAlphaRow<T> {
    pub alpha: T,
    pub converged: bool,
    /// Converged with the replay meeting the terminal tolerance.
    pub success: bool,
    pub iterations: usize,
    pub control_sup: T,
    pub control_l2: T,
    pub terminal_ratio: T,
    /// `|z|_inf` of the fixed point.
    pub z_sup: T,
    /// `max_t |y(t)|_2` of the fixed point.
    pub y_l2: T,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LargeAlphaTable<T> {
    /// Sorted by decreasing `alpha`.
    pub rows: Vec<LargeAlphaRow<T>>,
    /// Smallest `alpha` such that it and every larger `alpha` in the sweep succeed.
    pub alpha0: Option<T>,
}

impl<T: Real> LargeAlphaTable<T> {
    fn from_rows(mut rows: Vec<LargeAlphaRow<T>>) -> Self {
        rows.sort_by(|a, b| b.alpha.partial_cmp(&a.alpha).unwrap_or(std::cmp::Ordering::Equal));
        let alpha0 = rows.iter().take_while(|r| r.success).last().map(|r| r.alpha);
        Self { rows, alpha0 }
    }
}

fn failed_row<T: Real>(alpha: T, e: &Error) -> LargeAlphaRow<T> {
    LargeAlphaRow {
        alpha,
        converged: false,
        success: false,
        iterations: 0,
        control_sup: T::nan(),
        control_l2: T::nan(),
        terminal_ratio: T::nan(),
        z_sup: T::nan(),
        y_l2: T::nan(),
        failure: Some(e.to_string()),
    }
}

/// Runs the fixed-point loop for every `alpha`. Solver failures are recorded in
/// the table; only invalid input is returned as an error.
pub fn large_alpha_control<T: Real>(
    y0: &ScalarField<T>,
    window: &ControlWindow<T>,
    grid: &Grid1D<T>,
    alphas: &[T],
    options: &FixedPointOptions<T>,
) -> Result<LargeAlphaTable<T>> {
    options.validate()?;
    let params = alphas.iter().map(|&a| AlphaParam::new(a)).collect::<Result<Vec<_>>>()?;
    let rows = params
        .par_iter()
        .map(|&alpha| match nonlinear_null_control(y0, alpha, window, grid, options) {
            Ok(r) => Ok(LargeAlphaRow {
                alpha: alpha.value(),
                converged: r.converged(),
                success: r.succeeded(options.epsilon),
                iterations: r.trace.iter_count(),
                control_sup: r.control_sup(),
                control_l2: r.control_l2(),
                terminal_ratio: r.terminal_ratio(),
                z_sup: r.filtered.norm(SpaceTimeNorm::Sup),
                y_l2: r.state.norm(SpaceTimeNorm::LinfL2),
                failure: (!r.converged()).then(|| format!("{:?}", r.trace.outcome)),
            }),
            Err(e @ (Error::NonFinite { .. } | Error::Cfl { .. } | Error::Divergence { .. })) => {
                Ok(failed_row(alpha.value(), &e))
            }
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LargeAlphaTable::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn row(alpha: f64, success: bool) -> LargeAlphaRow<f64> {
        LargeAlphaRow { success, ..failed_row(alpha, &Error::Hypothesis("x".into())) }
    }

    #[test]
    fn alpha0_is_end_of_leading_successes() {
        let t = LargeAlphaTable::from_rows(vec![row(0.1, false), row(1.0, true), row(0.5, true), row(0.05, true)]);
        assert_eq!(t.rows.iter().map(|r| r.alpha).collect::<Vec<_>>(), vec![1.0, 0.5, 0.1, 0.05]);
        assert_eq!(t.alpha0, Some(0.5));
        assert_eq!(LargeAlphaTable::from_rows(vec![row(1.0, false)]).alpha0, None);
    }

    #[test]
    fn tiny_datum_succeeds_everywhere() {
        let g = Grid1D::new(1.0, 1.0, 31, 60).unwrap();
        let w = ControlWindow::new(0.3, 0.7).unwrap();
        let y0 = ScalarField::from_fn(g, |x| 1e-3 * (PI * x).sin());
        let t = large_alpha_control(&y0, &w, &g, &[0.01, 1.0, 0.1], &FixedPointOptions::default()).unwrap();
        assert!(t.rows.iter().all(|r| r.success));
        assert_eq!(t.alpha0, Some(0.01));
    }

    #[test]
    fn negative_alpha_rejected() {
        let g = Grid1D::new(1.0, 1.0, 15, 20).unwrap();
        let w = ControlWindow::new(0.3, 0.7).unwrap();
        assert!(large_alpha_control(&ScalarField::zeros(g), &w, &g, &[-1.0], &FixedPointOptions::default()).is_err());
    }
}
