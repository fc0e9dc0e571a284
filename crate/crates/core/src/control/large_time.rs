//! Coast-then-control for data below the `pi / L` threshold.
//!
//! Without control the state decays in `H^1_0` like `C exp(-r t / 2)` with
//! `r = ((pi/L)^2 - |y0|_inf^2) / 2`, so after a finite coast it is small
//! enough for the local fixed-point loop.

use crate::control::{nonlinear_null_control, FixedPointOptions, NonlinearControlResult};
use crate::dynamics::Marcher;
use crate::error::{Error, Result};
use crate::filter::AlphaParam;
use crate::grid::{Grid1D, NormKind, ScalarField, Trajectory};
use crate::num::Real;
use crate::window::ControlWindow;

/// `r = ((pi/L)^2 - m^2) / 2` for `m = |y0|_inf`.
pub fn decay_rate<T: Real>(sup: T, length: T) -> T {
    let k = T::PI() / length;
    T::c(0.5) * (k * k - sup * sup)
}

/// `C(y0)` with `|y(t)|_{H^1} <= C(y0) exp(-r t / 2)`.
pub fn decay_constant<T: Real>(y0: &ScalarField<T>) -> T {
    let m = y0.norm(NormKind::Sup);
    let r = decay_rate(m, y0.grid().length());
    let m2 = m * m;
    let l2 = y0.norm(NormKind::L2);
    let h1 = y0.norm(NormKind::H1);
    ((r + m2) * (T::c(2.0) + m2 / r) * l2 * l2 + h1 * h1).sqrt()
}

#[derive(Debug, Clone)]
pub struct LargeTimeControl<T> {
    pub coast_time: T,
    pub coast_steps: usize,
    /// Upper bound `4 ln(C / delta) / r` on the coast.
    pub coast_cap: T,
    pub rate: T,
    /// `(t, |y(t)|_{H^1})` at every coast level, starting at `t = 0`.
    pub h1_history: Vec<(T, T)>,
    /// Least-squares slope of `ln |y|_{H^1}` over the coast; `None` for fewer than two levels.
    pub fitted_slope: Option<T>,
    /// Control run from `y(t*)` on the unit horizon.
    pub phase2: NonlinearControlResult<T>,
    /// Zero during the coast, then the phase-2 control, on `(0, t* + 1)`.
    pub control: Trajectory<T>,
    pub state: Trajectory<T>,
}

/// Least-squares fit `ln v ~ c + s t` over the positive samples; returns `(s, c)`.
pub fn log_linear_fit<T: Real>(points: &[(T, T)]) -> Option<(T, T)> {
    let pts: Vec<(T, T)> = points.iter().filter(|p| p.1 > T::zero()).map(|&(t, v)| (t, v.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = T::from_count(pts.len());
    let mt = pts.iter().map(|p| p.0).sum::<T>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxx: T = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    let sxy: T = pts.iter().map(|p| (p.0 - mt) * (p.1 - mv)).sum();
    (sxx > T::zero()).then(|| {
        let s = sxy / sxx;
        (s, mv - s * mt)
    })
}

/// `grid` is the phase-2 grid; its horizon is the control horizon and its `dt`
/// is also used for the coast.
pub fn large_time_control<T: Real>(
    y0: &ScalarField<T>,
    alpha: AlphaParam<T>,
    window: &ControlWindow<T>,
    grid: &Grid1D<T>,
    delta: T,
    options: &FixedPointOptions<T>,
) -> Result<LargeTimeControl<T>> {
    let length = grid.length();
    let m = y0.norm(NormKind::Sup);
    if m >= T::PI() / length {
        return Err(Error::Hypothesis(format!(
            "large-time control needs |y0|_inf < pi/L = {}, got {m}",
            T::PI() / length
        )));
    }
    if !(delta > T::zero()) {
        return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
    }
    let rate = decay_rate(m, length);
    let c = decay_constant(y0);
    let coast_cap = if c <= delta { T::zero() } else { T::c(4.0) * (c / delta).ln() / rate };
    let max_steps = (coast_cap / grid.dt()).ceil().to_usize().unwrap_or(usize::MAX);

    let mut marcher = Marcher::new(y0, alpha, grid)?;
    let mut h1 = y0.norm(NormKind::H1);
    let mut history = vec![(T::zero(), h1)];
    let mut coast = vec![marcher.state().clone()];
    while h1 > delta {
        if marcher.level() >= max_steps {
            return Err(Error::Divergence { iterations: marcher.level(), residual: h1.as_f64() });
        }
        h1 = marcher.advance()?.norm(NormKind::H1);
        history.push((marcher.time(), h1));
        coast.push(marcher.state().clone());
    }
    let steps = marcher.level();
    let coast_time = marcher.time();

    let phase2 = nonlinear_null_control(marcher.state(), alpha, window, grid, options)?;

    let full = Grid1D::new(length, coast_time + grid.horizon(), grid.nx(), steps + grid.nt())?;
    let relabel = |s: &ScalarField<T>| ScalarField::from_parts(full, s.values().to_vec(), T::zero());
    let mut states: Vec<ScalarField<T>> = coast[..steps].iter().map(relabel).collect();
    states.extend(phase2.state.snapshots().iter().map(relabel));
    let mut controls = vec![ScalarField::zeros(full); steps];
    controls.extend(phase2.control.snapshots().iter().map(relabel));

    Ok(LargeTimeControl {
        coast_time,
        coast_steps: steps,
        coast_cap,
        rate,
        fitted_slope: log_linear_fit(&history).map(|f| f.0),
        h1_history: history,
        phase2,
        control: Trajectory::from_parts(full, controls),
        state: Trajectory::from_parts(full, states),
    })
}
