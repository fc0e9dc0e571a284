//! Run configuration. Every section is optional; the defaults are the
//! documented demo runs.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use balpha::control::{CgSettings, ControlMode, Extension, FixedPointOptions};
use balpha::dynamics::{CflGuard, SolverOptions};
use balpha::{Alpha, Field, Grid, Window};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Invalid configuration; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

fn lift<T>(what: &str, r: balpha::Result<T>) -> Result<T, ConfigError> {
    r.map_err(|e| ConfigError(format!("{what}: {e}")))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: Domain,
    pub grid: GridSection,
    pub model: Model,
    pub initial: Initial,
    pub window: WindowSection,
    pub control: ControlSection,
    pub large_time: LargeTime,
    pub boundary: Boundary,
    pub sweep: Sweep,
    pub decay: Decay,
    pub cost: Cost,
    pub output: Output,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: Domain::default(),
            grid: GridSection::default(),
            model: Model::default(),
            initial: Initial::default(),
            window: WindowSection::default(),
            control: ControlSection::default(),
            large_time: LargeTime::default(),
            boundary: Boundary::default(),
            sweep: Sweep::default(),
            decay: Decay::default(),
            cost: Cost::default(),
            output: Output::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Domain {
    pub length: f64,
    pub horizon: f64,
}

impl Default for Domain {
    fn default() -> Self {
        Self { length: 1.0, horizon: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub nt: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { nx: 63, nt: 200 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum Cfl {
    #[default]
    Apriori,
    Runtime,
    Off,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Model {
    /// Filter scale; `0` is the Burgers equation.
    pub alpha: f64,
    pub cfl: Cfl,
}

impl Default for Model {
    fn default() -> Self {
        Self { alpha: 0.1, cfl: Cfl::Apriori }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[default]
    Sine,
    Bump,
    SawtoothSmoothed,
    RandomSmooth,
    Samples,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Initial {
    pub family: Family,
    /// Sup norm of the datum (peak value for `sine` and `bump`).
    pub amplitude: f64,
    /// Wavenumber of `sine`.
    pub mode: u32,
    /// Center and half-width of `bump`, in units of `L`.
    pub center: f64,
    pub width: f64,
    /// Number of sine modes of `sawtooth_smoothed` and `random_smooth`.
    pub modes: u32,
    pub seed: u64,
    /// Interior values for `samples`, one per line.
    pub file: Option<PathBuf>,
}

impl Default for Initial {
    fn default() -> Self {
        Self { family: Family::Sine, amplitude: 0.1, mode: 1, center: 0.5, width: 0.25, modes: 8, seed: 0, file: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    pub a: f64,
    pub b: f64,
    /// Nested points `a < a1 < a2 < b2 < b1 < b`; all four or none.
    pub a1: Option<f64>,
    pub b1: Option<f64>,
    pub a2: Option<f64>,
    pub b2: Option<f64>,
}

impl Default for WindowSection {
    fn default() -> Self {
        Self { a: 0.3, b: 0.7, a1: None, b1: None, a2: None, b2: None }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    DirectHum,
    Cutoff,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Local,
    LargeTime,
    LargeAlpha,
    Boundary,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSection {
    pub mode: Mode,
    pub variant: Variant,
    pub epsilon: f64,
    pub fp_tol: f64,
    pub max_fp_iter: usize,
    pub damping: f64,
    pub ball_radius: Option<f64>,
    pub cg_tol: f64,
    pub cg_max_iter: Option<usize>,
}

impl Default for ControlSection {
    fn default() -> Self {
        Self {
            mode: Mode::DirectHum,
            variant: Variant::Local,
            epsilon: 1e-6,
            fp_tol: 1e-9,
            max_fp_iter: 50,
            damping: 1.0,
            ball_radius: None,
            cg_tol: 1e-10,
            cg_max_iter: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct LargeTime {
    pub delta: f64,
}

impl Default for LargeTime {
    fn default() -> Self {
        Self { delta: 0.05 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Boundary {
    /// `L_ext / L`.
    pub ratio: f64,
    /// Control window in units of `L`.
    pub a: f64,
    pub b: f64,
}

impl Default for Boundary {
    fn default() -> Self {
        Self { ratio: 1.5, a: 1.1, b: 1.4 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    #[default]
    Uncontrolled,
    Controlled,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub kind: SweepKind,
    /// Strictly decreasing; a final `0` adds the Burgers row.
    pub alphas: Vec<f64>,
}

impl Default for Sweep {
    fn default() -> Self {
        Self { kind: SweepKind::Uncontrolled, alphas: vec![0.4, 0.2, 0.1, 0.05] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Decay {
    pub length: f64,
    pub horizon: f64,
    pub nx: usize,
    pub nt: usize,
    /// Sup norms of the `sin(pi x / L)` family.
    pub sups: Vec<f64>,
    pub alpha: f64,
    pub transport: bool,
}

impl Default for Decay {
    fn default() -> Self {
        Self { length: PI, horizon: 4.0, nx: 63, nt: 400, sups: vec![0.25, 0.5, 0.75], alpha: 0.1, transport: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Cost {
    /// Values of the constant transport coefficient.
    pub norms: Vec<f64>,
    pub horizons: Vec<f64>,
    /// Time steps per unit time.
    pub steps_per_unit: usize,
}

impl Default for Cost {
    fn default() -> Self {
        Self { norms: vec![0.0, 0.5, 1.0, 2.0], horizons: vec![0.5, 1.0, 2.0], steps_per_unit: 320 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub dir: PathBuf,
}

impl Default for Output {
    fn default() -> Self {
        Self { dir: PathBuf::from("balpha-out") }
    }
}

/// Validated objects built from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub grid: Grid,
    pub alpha: Alpha,
    pub window: Window,
    pub y0: Field,
    pub solver: SolverOptions,
    pub options: FixedPointOptions<f64>,
    pub extension: Extension<f64>,
    pub decay_grid: Grid,
    pub decay_alpha: Alpha,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Ok(Self::parse(&text)?)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every setting and builds the solver inputs.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let d = &self.domain;
        let grid = lift("grid", Grid::new(d.length, d.horizon, self.grid.nx, self.grid.nt))?;
        let alpha = lift("model.alpha", Alpha::new(self.model.alpha))?;
        let window = self.window(d.length)?;
        let y0 = self.initial_datum(&grid)?;
        let solver = SolverOptions {
            cfl: match self.model.cfl {
                Cfl::Apriori => CflGuard::Apriori,
                Cfl::Runtime => CflGuard::Runtime,
                Cfl::Off => CflGuard::Off,
            },
        };
        let c = &self.control;
        let options = FixedPointOptions {
            mode: match c.mode {
                Mode::DirectHum => ControlMode::DirectHum,
                Mode::Cutoff => ControlMode::Cutoff,
            },
            epsilon: c.epsilon,
            fp_tol: c.fp_tol,
            max_fp_iter: c.max_fp_iter,
            damping: c.damping,
            ball_radius: c.ball_radius,
            cg: CgSettings { tol: c.cg_tol, max_iter: c.cg_max_iter },
        };
        lift("control", options.validate())?;
        if !(c.cg_tol > 0.0) {
            return invalid(format!("control.cg_tol must be > 0, got {}", c.cg_tol));
        }
        if let Some(r) = c.ball_radius {
            if !(r > 0.0) {
                return invalid(format!("control.ball_radius must be > 0, got {r}"));
            }
        }
        if !(self.large_time.delta > 0.0) {
            return invalid(format!("large_time.delta must be > 0, got {}", self.large_time.delta));
        }
        let b = &self.boundary;
        let extension = Extension {
            ratio: b.ratio,
            window: lift("boundary window", Window::new(b.a * d.length, b.b * d.length))?,
        };
        if c.variant == Variant::Boundary {
            lift("boundary", extension.grid(&grid))?;
        }
        if c.variant == Variant::LargeAlpha || self.sweep.kind == SweepKind::Controlled {
            self.check_alphas(false)?;
        }
        self.check_alphas(true)?;
        let e = &self.decay;
        let decay_grid = lift("decay grid", Grid::new(e.length, e.horizon, e.nx, e.nt))?;
        let decay_alpha = lift("decay.alpha", Alpha::new(e.alpha))?;
        for &s in &e.sups {
            if !(s >= 0.0 && s < PI / e.length) {
                return invalid(format!("decay.sups entry {s} must lie in [0, pi/L) = [0, {})", PI / e.length));
            }
        }
        let k = &self.cost;
        if k.norms.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return invalid("cost.norms must be finite and >= 0");
        }
        if k.horizons.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return invalid("cost.horizons must be > 0");
        }
        if k.steps_per_unit == 0 {
            return invalid("cost.steps_per_unit must be >= 1");
        }
        let amax = k.norms.iter().copied().fold(0.0, f64::max);
        if amax / k.steps_per_unit as f64 > grid.dx() / 2.0 {
            return invalid(format!(
                "cost.steps_per_unit = {} too small for |A| = {amax}: need dt |A| <= dx / 2",
                k.steps_per_unit
            ));
        }
        Ok(Resolved { grid, alpha, window, y0, solver, options, extension, decay_grid, decay_alpha })
    }

    fn check_alphas(&self, allow_zero_tail: bool) -> Result<(), ConfigError> {
        let a = &self.sweep.alphas;
        if a.is_empty() {
            return invalid("sweep.alphas is empty");
        }
        if !a.windows(2).all(|w| w[0] > w[1]) {
            return invalid("sweep.alphas must be strictly decreasing");
        }
        let n = a.len();
        for (i, &v) in a.iter().enumerate() {
            let ok = v > 0.0 || (allow_zero_tail && i + 1 == n && v == 0.0);
            if !ok || !v.is_finite() {
                return invalid(format!("sweep.alphas entry {v} must be > 0 (only the last may be 0)"));
            }
        }
        Ok(())
    }

    fn window(&self, length: f64) -> Result<Window, ConfigError> {
        let w = &self.window;
        if !(w.a < w.b) {
            return invalid(format!("window needs a < b, got a = {}, b = {}", w.a, w.b));
        }
        let win = match (w.a1, w.b1, w.a2, w.b2) {
            (None, None, None, None) => lift("window", Window::new(w.a, w.b))?,
            (Some(a1), Some(b1), Some(a2), Some(b2)) => lift("window", Window::nested(w.a, w.b, a1, b1, a2, b2))?,
            _ => return invalid("window.a1, b1, a2, b2 must be given together"),
        };
        lift("window", win.check_inside(length))?;
        Ok(win)
    }

    fn initial_datum(&self, grid: &Grid) -> Result<Field, ConfigError> {
        let i = &self.initial;
        let l = grid.length();
        if !(i.amplitude.is_finite() && i.amplitude >= 0.0) {
            return invalid(format!("initial.amplitude must be finite and >= 0, got {}", i.amplitude));
        }
        let normalize = |f: Field| -> Field {
            let s = f.norm(balpha::NormKind::Sup);
            if s == 0.0 { f } else { f.scaled(i.amplitude / s) }
        };
        let field = match i.family {
            Family::Sine => {
                if i.mode == 0 {
                    return invalid("initial.mode must be >= 1");
                }
                let k = f64::from(i.mode) * PI / l;
                Field::from_fn(*grid, |x| i.amplitude * (k * x).sin())
            }
            Family::Bump => {
                if !(i.width > 0.0 && i.center - i.width >= 0.0 && i.center + i.width <= 1.0) {
                    return invalid("initial bump needs width > 0 and [center - width, center + width] inside [0, 1]");
                }
                let (c, w) = (i.center * l, i.width * l);
                Field::from_fn(*grid, |x| {
                    let s = (x - c) / w;
                    if s.abs() < 1.0 { i.amplitude * (1.0 - 1.0 / (1.0 - s * s)).exp() } else { 0.0 }
                })
            }
            Family::SawtoothSmoothed => {
                if i.modes == 0 {
                    return invalid("initial.modes must be >= 1");
                }
                // sine series of x / L with Lanczos sigma factors
                let m = f64::from(i.modes);
                normalize(Field::from_fn(*grid, |x| {
                    (1..=i.modes)
                        .map(|k| {
                            let k = f64::from(k);
                            let sigma = if k == m { 0.0 } else { (PI * k / m).sin() / (PI * k / m) };
                            let sign = if k as u32 % 2 == 1 { 1.0 } else { -1.0 };
                            sign * sigma * (k * PI * x / l).sin() / k
                        })
                        .sum()
                }))
            }
            Family::RandomSmooth => {
                if i.modes == 0 {
                    return invalid("initial.modes must be >= 1");
                }
                let mut rng = ChaCha8Rng::seed_from_u64(i.seed);
                let coef: Vec<f64> = (1..=i.modes).map(|k| rng.gen_range(-1.0..1.0) / f64::from(k * k)).collect();
                normalize(Field::from_fn(*grid, |x| {
                    coef.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * PI * x / l).sin()).sum()
                }))
            }
            Family::Samples => {
                let Some(path) = &i.file else {
                    return invalid("initial.family = \"samples\" needs initial.file");
                };
                let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
                let values = text
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|_| ConfigError(format!("{}: not a number: {t:?}", path.display()))))
                    .collect::<Result<Vec<_>, _>>()?;
                lift("initial samples", Field::new(*grid, values))?
            }
        };
        Ok(field)
    }
}
