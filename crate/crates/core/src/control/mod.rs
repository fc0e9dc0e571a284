//! Null controls for the nonlinear system by fixed-point linearization.
//!
//! Each iteration freezes the transport coefficient at the filtered previous
//! iterate, computes a null control for the resulting linear problem and takes
//! the controlled state as the next iterate. At a fixed point the state solves
//! the nonlinear system driven by the returned control, which the final replay
//! checks directly.

mod boundary;
mod cutoff;
mod large_alpha;
mod large_time;

pub use boundary::{boundary_null_control, boundary_residual, BoundaryControl, BoundaryTransport, Extension};
pub use cutoff::{cutoff_control, CgSettings, CutoffControl};
pub use large_alpha::{large_alpha_control, LargeAlphaRow, LargeAlphaTable};
pub use large_time::{decay_constant, decay_rate, large_time_control, log_linear_fit, LargeTimeControl};

use crate::dynamics::{solve_transport, CflGuard, ForcingSpec, SolverOptions, TransportLaw};
use crate::error::{Error, Result};
use crate::filter::{AlphaParam, HelmholtzFilter};
use crate::grid::{Grid1D, NormKind, ScalarField, SpaceTimeNorm, Trajectory};
use crate::hum::{hum_control, LinearControlProblem};
use crate::num::Real;
use crate::window::ControlWindow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlMode {
    /// HUM control of each linearized problem on the full window.
    #[default]
    DirectHum,
    /// Cutoff construction around a HUM control on the inner window.
    Cutoff,
}

#[derive(Debug, Clone, Copy)]
pub struct FixedPointOptions<T> {
    pub mode: ControlMode,
    pub epsilon: T,
    pub fp_tol: T,
    pub max_fp_iter: usize,
    /// Relaxation `y <- y + rho (Lambda(y) - y)`, `rho` in `(0, 1]`.
    pub damping: T,
    /// Iterates leaving the ball `|y|_inf <= R` abort the loop.
    pub ball_radius: Option<T>,
    pub cg: CgSettings<T>,
}

impl<T: Real> Default for FixedPointOptions<T> {
    fn default() -> Self {
        Self {
            mode: ControlMode::DirectHum,
            epsilon: T::c(1e-6),
            fp_tol: T::c(1e-9),
            max_fp_iter: 50,
            damping: T::one(),
            ball_radius: None,
            cg: CgSettings::default(),
        }
    }
}

impl<T: Real> FixedPointOptions<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > T::zero()) {
            return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.fp_tol > T::zero()) {
            return Err(Error::InvalidParameter(format!("fp_tol must be > 0, got {}", self.fp_tol)));
        }
        if !(self.damping > T::zero() && self.damping <= T::one()) {
            return Err(Error::InvalidParameter(format!("damping must be in (0, 1], got {}", self.damping)));
        }
        if self.max_fp_iter == 0 {
            return Err(Error::InvalidParameter("max_fp_iter must be >= 1".into()));
        }
        Ok(())
    }

    /// Terminal smallness expected from the penalty: `10 sqrt(eps)` relative to `|y0|_2`.
    pub fn terminal_tolerance(&self) -> T {
        T::c(10.0) * self.epsilon.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord<T> {
    /// `|y_k - y_{k-1}|_inf`.
    pub residual_sup: T,
    pub control_sup: T,
    pub control_l2: T,
    pub terminal_l2: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Converged,
    MaxIterations,
    /// Residual grew over five consecutive iterations, or an iterate left the ball.
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointTrace<T> {
    pub iterations: Vec<IterationRecord<T>>,
    pub outcome: Outcome,
}

impl<T: Real> FixedPointTrace<T> {
    pub fn converged(&self) -> bool {
        self.outcome == Outcome::Converged
    }

    pub fn iter_count(&self) -> usize {
        self.iterations.len()
    }

    /// Successive residual ratios; values below one indicate contraction.
    pub fn contraction_ratios(&self) -> Vec<T> {
        self.iterations
            .windows(2)
            .filter(|w| w[0].residual_sup > T::zero())
            .map(|w| w[1].residual_sup / w[0].residual_sup)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct NonlinearControlResult<T> {
    pub control: Trajectory<T>,
    /// Fixed-point state.
    pub state: Trajectory<T>,
    /// Transport coefficient of the fixed-point state.
    pub filtered: Trajectory<T>,
    pub trace: FixedPointTrace<T>,
    pub alpha: AlphaParam<T>,
    pub window: ControlWindow<T>,
    /// Nonlinear solve driven by `control`.
    pub replay: Trajectory<T>,
    /// `|replay - state|_inf`.
    pub replay_gap: T,
    pub y0_l2: T,
}

impl<T: Real> NonlinearControlResult<T> {
    pub fn converged(&self) -> bool {
        self.trace.converged()
    }

    pub fn control_sup(&self) -> T {
        self.control.norm(SpaceTimeNorm::Sup)
    }

    pub fn control_l2(&self) -> T {
        self.control.norm(SpaceTimeNorm::L2L2)
    }

    /// Terminal norm of the nonlinear replay.
    pub fn terminal_l2(&self) -> T {
        self.replay.terminal().norm(NormKind::L2)
    }

    /// Terminal norm relative to `|y0|_2`; zero for a zero datum.
    pub fn terminal_ratio(&self) -> T {
        if self.y0_l2 == T::zero() {
            T::zero()
        } else {
            self.terminal_l2() / self.y0_l2
        }
    }

    /// Converged and the replay meets `10 sqrt(eps)` relative terminal smallness.
    pub fn succeeded(&self, epsilon: T) -> bool {
        self.converged() && self.terminal_ratio() <= T::c(10.0) * epsilon.sqrt()
    }
}

/// Snapshot-wise coefficient of a trajectory.
fn coefficients<T: Real, L: TransportLaw<T>>(law: &L, y: &Trajectory<T>) -> Trajectory<T> {
    y.map(|s| law.coefficient(s))
}

fn linear_step<T: Real>(
    a: &Trajectory<T>,
    y0: &ScalarField<T>,
    window: &ControlWindow<T>,
    grid: &Grid1D<T>,
    options: &FixedPointOptions<T>,
) -> Result<(Trajectory<T>, Trajectory<T>)> {
    match options.mode {
        ControlMode::DirectHum => {
            let mut p = LinearControlProblem::new(y0.clone(), a.clone(), *window, options.epsilon)?;
            p.cg_tol = options.cg.tol;
            if let Some(m) = options.cg.max_iter {
                p.cg_max_iter = m;
            }
            let s = hum_control(&p)?;
            Ok((s.control, s.state))
        }
        ControlMode::Cutoff => {
            let c = cutoff_control(a, y0, window, grid, options.epsilon, options.cg)?;
            Ok((c.control, c.state))
        }
    }
}

/// Picard iteration for any transport law. The nonlinear replay uses the
/// runtime CFL check.
pub fn fixed_point_control<T: Real, L: TransportLaw<T>>(
    y0: &ScalarField<T>,
    law: &L,
    alpha: AlphaParam<T>,
    window: &ControlWindow<T>,
    grid: &Grid1D<T>,
    options: &FixedPointOptions<T>,
) -> Result<NonlinearControlResult<T>> {
    options.validate()?;
    let off = SolverOptions { cfl: CflGuard::Off };
    let runtime = SolverOptions { cfl: CflGuard::Runtime };

    // initial guess: the uncontrolled trajectory, or the frozen datum if that blows up
    let mut ybar = match solve_transport(y0, &ForcingSpec::none(), law, grid, off) {
        Ok((y, _)) => y,
        Err(Error::NonFinite { .. }) => Trajectory::constant(*grid, y0),
        Err(e) => return Err(e),
    };

    let mut records: Vec<IterationRecord<T>> = Vec::new();
    let mut outcome = Outcome::MaxIterations;
    let mut growth = 0usize;
    let mut control = Trajectory::zeros(*grid);
    for _ in 0..options.max_fp_iter {
        let a = coefficients(law, &ybar);
        let (v, y) = linear_step(&a, y0, window, grid, options)?;
        let residual = y.sub(&ybar).norm(SpaceTimeNorm::Sup);
        records.push(IterationRecord {
            residual_sup: residual,
            control_sup: v.norm(SpaceTimeNorm::Sup),
            control_l2: v.norm(SpaceTimeNorm::L2L2),
            terminal_l2: y.terminal().norm(NormKind::L2),
        });
        control = v;
        let left_ball = options
            .ball_radius
            .is_some_and(|r| y.norm(SpaceTimeNorm::Sup) > r);
        if let [.., prev, last] = records.as_slice() {
            growth = if last.residual_sup > prev.residual_sup { growth + 1 } else { 0 };
        }
        if residual <= options.fp_tol {
            ybar = y;
            outcome = Outcome::Converged;
            break;
        }
        ybar = if options.damping < T::one() {
            ybar.zip_map(&y, |b, n| b.axpy(options.damping, &n.sub(b)))
        } else {
            y
        };
        if growth >= 5 || left_ball || !residual.is_finite() {
            outcome = Outcome::Diverged;
            break;
        }
    }

    let filtered = coefficients(law, &ybar);
    let forcing = ForcingSpec::control(control.clone(), window)?;
    let replay = match solve_transport(y0, &forcing, law, grid, runtime) {
        Ok((y, _)) => y,
        // a failed replay of a non-converged loop is part of the result, not an error
        Err(e @ (Error::Cfl { .. } | Error::NonFinite { .. })) if outcome != Outcome::Converged => {
            let _ = e;
            ybar.clone()
        }
        Err(e) => return Err(e),
    };
    let replay_gap = replay.sub(&ybar).norm(SpaceTimeNorm::Sup);
    Ok(NonlinearControlResult {
        control,
        state: ybar,
        filtered,
        trace: FixedPointTrace { iterations: records, outcome },
        alpha,
        window: *window,
        replay,
        replay_gap,
        y0_l2: y0.norm(NormKind::L2),
    })
}

/// Null control of the Burgers-alpha system (Burgers for `alpha = 0`).
pub fn nonlinear_null_control<T: Real>(
    y0: &ScalarField<T>,
    alpha: AlphaParam<T>,
    window: &ControlWindow<T>,
    grid: &Grid1D<T>,
    options: &FixedPointOptions<T>,
) -> Result<NonlinearControlResult<T>> {
    let law = HelmholtzFilter::new(*grid, alpha);
    fixed_point_control(y0, &law, alpha, window, grid, options)
}

/// Largest amplitude `s` in `[lo, hi]` for which the loop converges on `s * profile`,
/// located by `steps` bisections. Returns `lo` when even `lo` fails.
pub fn largest_controllable_amplitude<T: Real>(
    profile: &ScalarField<T>,
    alpha: AlphaParam<T>,
    window: &ControlWindow<T>,
    grid: &Grid1D<T>,
    options: &FixedPointOptions<T>,
    lo: T,
    hi: T,
    steps: usize,
) -> Result<T> {
    let ok = |s: T| -> Result<bool> {
        match nonlinear_null_control(&profile.scaled(s), alpha, window, grid, options) {
            Ok(r) => Ok(r.succeeded(options.epsilon)),
            Err(Error::NonFinite { .. } | Error::Cfl { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };
    let (mut good, mut bad) = (lo, hi);
    if ok(hi)? {
        return Ok(hi);
    }
    if !ok(lo)? {
        return Ok(lo);
    }
    for _ in 0..steps {
        let mid = T::c(0.5) * (good + bad);
        if ok(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn setup() -> (Grid1D<f64>, ControlWindow<f64>) {
        (Grid1D::new(1.0, 1.0, 63, 100).unwrap(), ControlWindow::new(0.3, 0.7).unwrap())
    }

    #[test]
    fn zero_datum_converges_at_once() {
        let (g, w) = setup();
        let r = nonlinear_null_control(&ScalarField::zeros(g), AlphaParam::new(0.1).unwrap(), &w, &g, &FixedPointOptions::default())
            .unwrap();
        assert!(r.converged());
        assert_eq!(r.trace.iter_count(), 1);
        assert_eq!(r.control, Trajectory::zeros(g));
        assert_eq!(r.terminal_ratio(), 0.0);
    }

    #[test]
    fn small_datum_converges_and_replays() {
        let (g, w) = setup();
        let y0 = ScalarField::from_fn(g, |x| 0.1 * (PI * x).sin());
        let opts = FixedPointOptions::default();
        for mode in [ControlMode::DirectHum, ControlMode::Cutoff] {
            let opts = FixedPointOptions { mode, ..opts };
            let r = nonlinear_null_control(&y0, AlphaParam::new(0.1).unwrap(), &w, &g, &opts).unwrap();
            assert!(r.converged(), "{mode:?}");
            assert!(r.succeeded(opts.epsilon), "{mode:?} ratio {}", r.terminal_ratio());
            assert!(r.replay_gap <= 10.0 * opts.fp_tol, "{mode:?} gap {}", r.replay_gap);
            for s in r.control.snapshots() {
                for (x, &v) in g.nodes().zip(s.values()) {
                    if !w.contains(x) {
                        assert_eq!(v, 0.0);
                    }
                }
            }
            for rec in &r.trace.iterations[..r.trace.iter_count() - 1] {
                assert!(rec.residual_sup > 0.0);
            }
            assert!(r.trace.contraction_ratios().iter().all(|&q| q < 1.0));
        }
    }

    #[test]
    fn iteration_cap_reported() {
        let (g, w) = setup();
        let y0 = ScalarField::from_fn(g, |x| 0.5 * (PI * x).sin());
        let opts = FixedPointOptions { max_fp_iter: 1, fp_tol: 1e-14, ..FixedPointOptions::default() };
        let r = nonlinear_null_control(&y0, AlphaParam::new(0.1).unwrap(), &w, &g, &opts).unwrap();
        assert_eq!(r.trace.outcome, Outcome::MaxIterations);
        assert!(!r.converged());
    }

    #[test]
    fn bad_options_rejected() {
        let (g, w) = setup();
        let y0 = ScalarField::zeros(g);
        for opts in [
            FixedPointOptions { damping: 0.0, ..FixedPointOptions::default() },
            FixedPointOptions { epsilon: -1.0, ..FixedPointOptions::default() },
            FixedPointOptions { max_fp_iter: 0, ..FixedPointOptions::default() },
        ] {
            assert!(nonlinear_null_control(&y0, AlphaParam::zero(), &w, &g, &opts).is_err());
        }
    }
}
