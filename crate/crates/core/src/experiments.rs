//! Parameter studies: the `alpha -> 0` limit with and without control, and
//! decay-rate fits of the uncontrolled flow.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::control::{decay_rate, log_linear_fit, nonlinear_null_control, FixedPointOptions};
use crate::dynamics::{solve_linear, solve_transport, ForcingSpec, SelfTransport, SolverOptions};
use crate::error::{Error, Result};
use crate::filter::{AlphaParam, HelmholtzFilter};
use crate::grid::{Grid1D, NormKind, ScalarField, SpaceTimeNorm, Trajectory};
use crate::io::{write_manifest, write_rows, CsvRow, Manifest};
use crate::num::Real;
use crate::window::ControlWindow;

#[derive(Debug, Clone)]
pub struct SweepSpec<T> {
    /// Strictly decreasing and positive, optionally ending with an exact `0`.
    pub alphas: Vec<T>,
    pub y0: ScalarField<T>,
    pub forcing: ForcingSpec<T>,
    pub grid: Grid1D<T>,
    pub window: ControlWindow<T>,
    pub control: FixedPointOptions<T>,
    pub solver: SolverOptions,
}

impl<T: Real> SweepSpec<T> {
    pub fn new(alphas: Vec<T>, y0: ScalarField<T>, grid: Grid1D<T>, window: ControlWindow<T>) -> Result<Self> {
        let s = Self {
            alphas,
            y0,
            forcing: ForcingSpec::none(),
            grid,
            window,
            control: FixedPointOptions::default(),
            solver: SolverOptions::default(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::InvalidParameter("empty alpha list".into()));
        }
        let n = self.alphas.len();
        for (i, &a) in self.alphas.iter().enumerate() {
            let last_zero = i + 1 == n && a == T::zero();
            if !(a > T::zero() || last_zero) || !a.is_finite() {
                return Err(Error::InvalidParameter(format!("alpha = {a} must be > 0 (only the last may be 0)")));
            }
        }
        if !self.alphas.windows(2).all(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter("alphas must be strictly decreasing".into()));
        }
        if self.y0.len() != self.grid.nx() {
            return Err(Error::ShapeMismatch { expected: self.grid.nx(), found: self.y0.len() });
        }
        self.window.check_inside(self.grid.length())?;
        self.control.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow<T> {
    pub alpha: T,
    /// `|y_alpha - y_ref|_{L^2(H^1)}`.
    pub err_y: T,
    /// `|z_alpha - y_ref|_{L^2(H^1)}`.
    pub err_z: T,
    pub control_sup: T,
    pub control_l2: T,
    pub terminal_l2: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitTable<T> {
    pub rows: Vec<ConvergenceRow<T>>,
    /// `alpha` and message of every run that failed.
    pub failures: Vec<(T, String)>,
    /// `|D_xx y_ref|_{L^2(L^2)}`, the `y_xx` term of the filter inequality.
    pub ref_dxx: T,
}

impl<T: Real> LimitTable<T> {
    /// Discrete form of `|z - y|^2 <= |y_a - y|^2 + alpha^2 |y_xx|^2` in `L^2(H^1)`,
    /// checked on every row with relative tolerance `tol`.
    pub fn filter_inequality_holds(&self, tol: T) -> bool {
        self.rows.iter().all(|r| {
            let rhs = r.err_y * r.err_y + r.alpha * r.alpha * self.ref_dxx * self.ref_dxx;
            r.err_z * r.err_z <= rhs * (T::one() + tol) + tol * T::min_positive_value()
        })
    }

    pub fn err_y_monotone(&self) -> bool {
        monotone_decreasing(&self.rows.iter().map(|r| r.err_y).collect::<Vec<_>>())
    }

    pub fn err_z_monotone(&self) -> bool {
        monotone_decreasing(&self.rows.iter().map(|r| r.err_z).collect::<Vec<_>>())
    }
}

/// Non-increasing up to a single increase of at most 5 % relative size.
pub fn monotone_decreasing<T: Real>(values: &[T]) -> bool {
    let mut inversions = 0;
    for w in values.windows(2) {
        if w[1] > w[0] {
            inversions += 1;
            if inversions > 1 || w[1] - w[0] > T::c(0.05) * w[0] {
                return false;
            }
        }
    }
    true
}

fn dxx<T: Real>(y: &ScalarField<T>) -> ScalarField<T> {
    let dx2 = y.grid().dx() * y.grid().dx();
    let v = (1..=y.len())
        .map(|j| (y.padded(j + 1) - T::c(2.0) * y.padded(j) + y.padded(j - 1)) / dx2)
        .collect();
    ScalarField::from_parts(*y.grid(), v, T::zero())
}

fn row<T: Real>(alpha: T, y: &Trajectory<T>, z: &Trajectory<T>, reference: &Trajectory<T>, v: Option<&Trajectory<T>>) -> ConvergenceRow<T> {
    ConvergenceRow {
        alpha,
        err_y: y.sub(reference).norm(SpaceTimeNorm::L2H1),
        err_z: z.sub(reference).norm(SpaceTimeNorm::L2H1),
        control_sup: v.map_or(T::zero(), |v| v.norm(SpaceTimeNorm::Sup)),
        control_l2: v.map_or(T::zero(), |v| v.norm(SpaceTimeNorm::L2L2)),
        terminal_l2: y.terminal().norm(NormKind::L2),
    }
}

fn split<T, R>(alphas: &[T], results: Vec<Result<R>>) -> (Vec<R>, Vec<(T, String)>)
where
    T: Real,
{
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (&a, r) in alphas.iter().zip(results) {
        match r {
            Ok(r) => ok.push(r),
            Err(e) => failed.push((a, e.to_string())),
        }
    }
    (ok, failed)
}

/// Uncontrolled Burgers-alpha runs against the same-grid Burgers solution.
pub fn uncontrolled_limit_study<T: Real>(spec: &SweepSpec<T>) -> Result<LimitTable<T>> {
    spec.validate()?;
    let (reference, _) = solve_transport(&spec.y0, &spec.forcing, &SelfTransport, &spec.grid, spec.solver)?;
    let results: Vec<Result<ConvergenceRow<T>>> = spec
        .alphas
        .par_iter()
        .map(|&a| {
            let law = HelmholtzFilter::new(spec.grid, AlphaParam::new(a)?);
            let (y, z) = solve_transport(&spec.y0, &spec.forcing, &law, &spec.grid, spec.solver)?;
            Ok(row(a, &y, &z, &reference, None))
        })
        .collect();
    let (rows, failures) = split(&spec.alphas, results);
    Ok(LimitTable { rows, failures, ref_dxx: reference.map(dxx).norm(SpaceTimeNorm::L2L2) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport<T> {
    pub table: LimitTable<T>,
    /// Max over min of `control_sup` across the converged rows.
    pub control_sup_ratio: T,
    /// Largest `|y_alpha(T)|_2 / |y0|_2`.
    pub max_terminal_ratio: T,
    pub all_converged: bool,
    /// `(alpha, |v_alpha - v_0|_{L^2})`, descriptive only.
    pub control_gap: Vec<(T, T)>,
}

/// Controlled runs against the controlled Burgers solution.
pub fn controlled_limit_study<T: Real>(spec: &SweepSpec<T>) -> Result<LimitReport<T>> {
    spec.validate()?;
    let limit = nonlinear_null_control(&spec.y0, AlphaParam::zero(), &spec.window, &spec.grid, &spec.control)?;
    if !limit.converged() {
        return Err(Error::Divergence {
            iterations: limit.trace.iter_count(),
            residual: limit.trace.iterations.last().map_or(f64::NAN, |r| r.residual_sup.as_f64()),
        });
    }
    let results: Vec<Result<_>> = spec
        .alphas
        .par_iter()
        .map(|&a| {
            let r = nonlinear_null_control(&spec.y0, AlphaParam::new(a)?, &spec.window, &spec.grid, &spec.control)?;
            let mut cr = row(a, &r.state, &r.filtered, &limit.state, Some(&r.control));
            cr.terminal_l2 = r.terminal_l2();
            let gap = r.control.sub(&limit.control).norm(SpaceTimeNorm::L2L2);
            Ok((cr, r.converged(), r.terminal_ratio(), gap))
        })
        .collect();
    let (ok, failures) = split(&spec.alphas, results);
    let sups: Vec<T> = ok.iter().filter(|o| o.1).map(|o| o.0.control_sup).collect();
    let max = sups.iter().copied().fold(T::neg_infinity(), T::max);
    let min = sups.iter().copied().fold(T::infinity(), T::min);
    let control_sup_ratio = if sups.is_empty() {
        T::nan()
    } else if max == T::zero() {
        T::one()
    } else {
        max / min
    };
    Ok(LimitReport {
        all_converged: failures.is_empty() && ok.iter().all(|o| o.1),
        max_terminal_ratio: ok.iter().map(|o| o.2).fold(T::zero(), T::max),
        control_gap: ok.iter().map(|o| (o.0.alpha, o.3)).collect(),
        table: LimitTable {
            rows: ok.into_iter().map(|o| o.0).collect(),
            failures,
            ref_dxx: limit.state.map(dxx).norm(SpaceTimeNorm::L2L2),
        },
        control_sup_ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow<T> {
    pub y0_sup: T,
    pub r_theory: T,
    /// Minus the slope of `ln |y(t)|_{H^1}` over the second half of the horizon.
    pub r_fitted: T,
    pub c_fitted: T,
}

impl<T: Real> DecayRow<T> {
    pub fn decayed(&self) -> bool {
        self.r_fitted > T::zero()
    }
}

/// Uncontrolled decay of each datum. With `transport = false` the coefficient is
/// dropped and the run is the plain heat flow. Zero data are skipped.
pub fn decay_study<T: Real>(
    family: &[ScalarField<T>],
    alpha: AlphaParam<T>,
    grid: &Grid1D<T>,
    transport: bool,
) -> Result<Vec<DecayRow<T>>> {
    let length = grid.length();
    for y0 in family {
        let m = y0.norm(NormKind::Sup);
        if m >= T::PI() / length {
            return Err(Error::Hypothesis(format!("decay needs |y0|_inf < pi/L = {}, got {m}", T::PI() / length)));
        }
    }
    let rows: Vec<Option<DecayRow<T>>> = family
        .par_iter()
        .map(|y0| {
            let m = y0.norm(NormKind::Sup);
            if m == T::zero() {
                return Ok(None);
            }
            let y = if transport {
                solve_transport(y0, &ForcingSpec::none(), &HelmholtzFilter::new(*grid, alpha), grid, SolverOptions::default())?.0
            } else {
                solve_linear(y0, &Trajectory::zeros(*grid), &ForcingSpec::none(), grid)?
            };
            let tail: Vec<(T, T)> = (grid.nt() / 2..=grid.nt())
                .map(|n| (grid.t(n), y.snapshot(n).norm(NormKind::H1)))
                .collect();
            let (s, c) = log_linear_fit(&tail).unwrap_or((T::zero(), T::nan()));
            Ok(Some(DecayRow { y0_sup: m, r_theory: decay_rate(m, length), r_fitted: -s, c_fitted: c.exp() }))
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Writes `<stem>.csv` and `<stem>.manifest.toml` under `dir`.
pub fn emit_report<T: Real, R: CsvRow<T>>(
    dir: &Path,
    stem: &str,
    rows: &[R],
    manifest: &Manifest,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    let man = dir.join(format!("{stem}.manifest.toml"));
    write_rows(&csv, rows)?;
    write_manifest(&man, manifest)?;
    Ok(vec![csv, man])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec(alphas: Vec<f64>, amp: f64) -> SweepSpec<f64> {
        let g = Grid1D::new(1.0, 1.0, 63, 200).unwrap();
        let y0 = ScalarField::from_fn(g, |x| amp * (PI * x).sin() + 0.5 * amp * (2.0 * PI * x).sin());
        SweepSpec::new(alphas, y0, g, ControlWindow::new(0.3, 0.7).unwrap()).unwrap()
    }

    #[test]
    fn alpha_list_validated() {
        let g = Grid1D::new(1.0, 1.0, 15, 10).unwrap();
        let w = ControlWindow::new(0.3, 0.7).unwrap();
        let y0 = ScalarField::zeros(g);
        assert!(SweepSpec::new(vec![0.1, 0.2], y0.clone(), g, w).is_err());
        assert!(SweepSpec::new(vec![0.1, 0.0, 0.05], y0.clone(), g, w).is_err());
        assert!(SweepSpec::new(vec![], y0.clone(), g, w).is_err());
        assert!(SweepSpec::new(vec![0.2, 0.1, 0.0], y0, g, w).is_ok());
    }

    #[test]
    fn monotone_allowance() {
        assert!(monotone_decreasing(&[3.0, 2.0, 2.0, 1.0]));
        assert!(monotone_decreasing(&[3.0, 2.0, 2.05, 1.0]));
        assert!(!monotone_decreasing(&[3.0, 2.0, 2.2, 1.0]));
        assert!(!monotone_decreasing(&[3.0, 2.0, 2.01, 1.0, 1.01]));
    }

    #[test]
    fn uncontrolled_limit_rows() {
        let t = uncontrolled_limit_study(&spec(vec![0.4, 0.2, 0.1, 0.05, 0.0], 1.0)).unwrap();
        assert!(t.failures.is_empty());
        let last = t.rows.last().unwrap();
        assert_eq!((last.err_y, last.err_z), (0.0, 0.0));
        assert!(t.err_y_monotone() && t.err_z_monotone());
        assert!(t.filter_inequality_holds(1e-8));
        for r in &t.rows {
            assert!(r.err_z <= r.err_y + r.alpha * t.ref_dxx);
        }
    }

    #[test]
    fn filter_gap_is_second_order() {
        let s = spec(vec![0.04, 0.02, 0.01], 1.0);
        let gaps: Vec<f64> = s
            .alphas
            .iter()
            .map(|&a| {
                let law = HelmholtzFilter::new(s.grid, AlphaParam::new(a).unwrap());
                let (y, z) = solve_transport(&s.y0, &s.forcing, &law, &s.grid, s.solver).unwrap();
                z.sub(&y).norm(SpaceTimeNorm::L2L2)
            })
            .collect();
        for w in gaps.windows(2) {
            let q = w[0] / w[1];
            assert!((3.6..4.4).contains(&q), "ratio {q}");
        }
    }

    #[test]
    fn controlled_limit_zero_datum() {
        let r = controlled_limit_study(&spec(vec![0.2, 0.1], 0.0)).unwrap();
        assert!(r.all_converged);
        for row in &r.table.rows {
            assert_eq!((row.err_y, row.err_z, row.control_sup, row.terminal_l2), (0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn decay_beats_theory_and_heat_matches_eigenvalue() {
        let g = Grid1D::new(PI, 4.0, 63, 400).unwrap();
        let fam: Vec<_> = [0.0, 0.25, 0.5, 0.75].iter().map(|&m| ScalarField::from_fn(g, |x| m * x.sin())).collect();
        let rows = decay_study(&fam, AlphaParam::new(0.1).unwrap(), &g, true).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert!(r.r_fitted >= 0.9 * r.r_theory);
            assert!((r.r_theory - 0.5 * (1.0 - r.y0_sup * r.y0_sup)).abs() < 1e-12);
        }
        let heat = decay_study(&fam[2..3], AlphaParam::zero(), &g, false).unwrap();
        let lambda = 2.0 / (g.dx() * g.dx()) * (1.0 - g.dx().cos());
        let discrete = (1.0 + g.dt() * lambda).ln() / g.dt();
        assert!((heat[0].r_fitted - discrete).abs() < 1e-6, "{} vs {discrete}", heat[0].r_fitted);
    }

    #[test]
    fn decay_rejects_large_datum() {
        let g = Grid1D::new(1.0, 1.0, 15, 10).unwrap();
        let fam = vec![ScalarField::from_fn(g, |x| 4.0 * (PI * x).sin())];
        assert!(matches!(decay_study(&fam, AlphaParam::zero(), &g, true), Err(Error::Hypothesis(_))));
    }
}
