//! Run configuration: a JSON file plus command-line overrides.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use lsfiber::enumerate::{OracleParams, ScanParams, Tolerances};
use lsfiber::gallery::{build_flat_segment, build_halfline};
use lsfiber::io::read_grid_function_csv;
use lsfiber::{
    Grid, GridFunction, IDecomposition, Interval1D, LipschitzNonlinearity, NonlinSpec, Rect2D, SolverParams,
    SpectralBasis,
};
use serde::{Deserialize, Serialize};

use crate::Overrides;

fn default_x1() -> f64 {
    PI
}

fn default_n() -> usize {
    199
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalConfig {
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "default_x1")]
    pub x1: f64,
    #[serde(default = "default_n")]
    pub n: usize,
}

impl Default for IntervalConfig {
    fn default() -> Self {
        Self {
            x0: 0.0,
            x1: PI,
            n: 199,
        }
    }
}

impl IntervalConfig {
    fn build(&self) -> lsfiber::Result<Interval1D> {
        Interval1D::new(self.x0, self.x1, self.n)
    }
}

/// `{x0, x1, n}` for an interval or `{x: {...}, y: {...}}` for a rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainConfig {
    Rect { x: IntervalConfig, y: IntervalConfig },
    Line(IntervalConfig),
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig::Line(IntervalConfig::default())
    }
}

impl DomainConfig {
    pub fn build(&self) -> lsfiber::Result<Grid> {
        Ok(match self {
            DomainConfig::Line(l) => Grid::Line(l.build()?),
            DomainConfig::Rect { x, y } => Grid::Rect(Rect2D::new(x.build()?, y.build()?)?),
        })
    }
}

/// Nonlinearities of the gallery, rebuilt on the configured grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum NonlinPreset {
    /// Slopes `(a, lambda_1^h, b)`; `t phi_1` solves `F = 0` for `t` in `[0, 1]`.
    Flat { a: f64, b: f64 },
    /// Two-slope `f` whose discrete half-line is exact on the grid.
    Halfline { k: usize, a: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NonlinConfig {
    Spec(NonlinSpec),
    Preset { preset: NonlinPreset },
}

/// Right-hand side `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsConfig {
    /// Amplitudes `c_k` of `sin(k pi (x - x0) / L)`, `k = 1, 2, ...`; so
    /// `g = -t sin x` on `[0, pi]` is `[-t]`.
    Coefficients(Vec<f64>),
    /// `[kx, ky, c]` triples for `c sin(kx ...) sin(ky ...)` on a rectangle.
    Modes2d(Vec<(usize, usize, f64)>),
    /// Node values in the `x,value` / `x,y,value` CSV layout.
    Csv(PathBuf),
    /// Named right-hand side; only `zero` is defined.
    Preset(String),
}

impl Default for RhsConfig {
    fn default() -> Self {
        RhsConfig::Preset("zero".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    pub a: f64,
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_tol: Option<f64>,
}

/// Shift values for `scan`: explicit list or a uniform range.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShiftConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub s_values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Add the fold values found on the fiber of the base right-hand side (1D fibers).
    #[serde(default)]
    pub include_folds: bool,
}

impl ShiftConfig {
    pub fn values(&self) -> anyhow::Result<Vec<f64>> {
        let mut out = self.s_values.clone();
        match (self.s_min, self.s_max, self.count) {
            (Some(lo), Some(hi), Some(n)) if n >= 2 => {
                out.extend((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64));
            }
            (Some(lo), _, Some(1)) => out.push(lo),
            (None, None, None) => {}
            _ => bail!("shift range needs s_min, s_max and count >= 2"),
        }
        if out.is_empty() {
            bail!("no shift values configured");
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<NonlinConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<BandConfig>,
    #[serde(default)]
    pub rhs: RhsConfig,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub scan: ScanParams,
    #[serde(default)]
    pub oracle: OracleParams,
    #[serde(default)]
    pub shift: ShiftConfig,
    /// Number of trace samples per fiber direction; defaults to the scan resolution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_samples: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: DomainConfig::default(),
            nonlinearity: None,
            band: None,
            rhs: RhsConfig::default(),
            solver: SolverParams::default(),
            tolerances: Tolerances::default(),
            scan: ScanParams::default(),
            oracle: OracleParams::default(),
            shift: ShiftConfig::default(),
            trace_samples: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
            }
        }
    }

    /// Flags win over file values.
    pub fn apply(&mut self, o: &Overrides) -> anyhow::Result<()> {
        if let Some(n) = o.n {
            match &mut self.domain {
                DomainConfig::Line(l) => l.n = n,
                DomainConfig::Rect { x, y } => {
                    x.n = n;
                    y.n = n;
                }
            }
        }
        if o.a.is_some() || o.b.is_some() || o.gap_tol.is_some() {
            let band = match (&self.band, o.a, o.b) {
                (Some(b), a, bb) => BandConfig {
                    a: a.unwrap_or(b.a),
                    b: bb.unwrap_or(b.b),
                    gap_tol: o.gap_tol.or(b.gap_tol),
                },
                (None, Some(a), Some(b)) => BandConfig { a, b, gap_tol: o.gap_tol },
                _ => bail!("--a and --b are both needed when the config has no band"),
            };
            self.band = Some(band);
        }
        if let Some(tol) = o.tol {
            self.solver.tol = tol;
        }
        if let Some(m) = o.max_iter {
            self.solver.max_iter = Some(m);
        }
        if let Some(t) = &o.t_min {
            self.scan.t_min = Some(t.clone());
        }
        if let Some(t) = &o.t_max {
            self.scan.t_max = Some(t.clone());
        }
        if let Some(r) = o.resolution {
            self.scan.resolution = Some(r);
        }
        if let Some(s) = o.seed {
            self.oracle.seed = s;
        }
        if let Some(n) = o.n_starts {
            self.oracle.n_starts = n;
        }
        if let Some(b) = o.box_scale {
            self.oracle.box_scale = b;
        }
        if let Some(c) = &o.rhs_coefficients {
            self.rhs = RhsConfig::Coefficients(c.clone());
        }
        if let Some(s) = o.samples {
            self.trace_samples = Some(s);
        }
        if !o.s.is_empty() {
            self.shift = ShiftConfig {
                s_values: o.s.clone(),
                include_folds: self.shift.include_folds,
                ..Default::default()
            };
        }
        if o.include_folds {
            self.shift.include_folds = true;
        }
        Ok(())
    }
}

/// Everything a command needs, built from a resolved config.
pub struct Problem {
    pub config: RunConfig,
    pub grid: Grid,
    pub basis: Arc<SpectralBasis>,
    pub f: LipschitzNonlinearity,
    pub g: GridFunction,
    pub band: BandConfig,
}

impl Problem {
    /// Builds grid, nonlinearity and right-hand side; config errors only.
    pub fn new(config: RunConfig) -> anyhow::Result<Self> {
        let grid = config.domain.build()?;
        let basis = SpectralBasis::shared(grid);
        let nl = config
            .nonlinearity
            .as_ref()
            .ok_or_else(|| anyhow!("the config has no nonlinearity"))?;
        let f = build_nonlinearity(nl, &grid)?;
        let band = config
            .band
            .clone()
            .ok_or_else(|| anyhow!("the config has no band (use --a/--b)"))?;
        let g = build_rhs(&config.rhs, &grid)?;
        Ok(Self {
            config,
            grid,
            basis,
            f,
            g,
            band,
        })
    }

    pub fn decomposition(&self) -> lsfiber::Result<IDecomposition> {
        IDecomposition::build(self.basis.clone(), self.band.a, self.band.b, self.band.gap_tol)
    }

    /// Config with scan ranges, resolution and trace sample count made explicit.
    pub fn resolve(&mut self, d: &IDecomposition) {
        let (lo, hi) = self.config.scan.ranges(d, &self.g);
        self.config.scan.t_min = Some(lo);
        self.config.scan.t_max = Some(hi);
        let res = self.config.scan.resolution_for(d.fiber_dim());
        self.config.scan.resolution = Some(res);
        if self.config.trace_samples.is_none() {
            self.config.trace_samples = Some(res);
        }
    }

    /// The preset's profile `psi`, when the nonlinearity is a half-line preset.
    pub fn halfline_profile(&self) -> Option<GridFunction> {
        match self.config.nonlinearity.as_ref()? {
            NonlinConfig::Preset {
                preset: NonlinPreset::Halfline { k, a },
            } => {
                let line = *self.grid.as_line()?;
                let inst = build_halfline(*k, *a, line).ok()?;
                Some(inst.grid_adapted().ok()?.psi)
            }
            _ => None,
        }
    }
}

fn build_nonlinearity(nl: &NonlinConfig, grid: &Grid) -> anyhow::Result<LipschitzNonlinearity> {
    match nl {
        NonlinConfig::Spec(spec) => Ok(LipschitzNonlinearity::from_spec(spec)?),
        NonlinConfig::Preset { preset } => {
            let line = *grid
                .as_line()
                .ok_or_else(|| anyhow!("nonlinearity presets need a 1D domain"))?;
            Ok(match preset {
                NonlinPreset::Flat { a, b } => build_flat_segment(line, *a, *b)?.f,
                NonlinPreset::Halfline { k, a } => build_halfline(*k, *a, line)?.grid_adapted()?.f,
            })
        }
    }
}

fn build_rhs(rhs: &RhsConfig, grid: &Grid) -> anyhow::Result<GridFunction> {
    match rhs {
        RhsConfig::Preset(name) if name == "zero" => Ok(GridFunction::zeros(*grid)),
        RhsConfig::Preset(name) => bail!("unknown rhs preset {name:?}"),
        RhsConfig::Csv(path) => {
            read_grid_function_csv(path, *grid).with_context(|| format!("reading rhs {}", path.display()))
        }
        RhsConfig::Coefficients(c) => {
            let line = grid
                .as_line()
                .ok_or_else(|| anyhow!("use modes2d for a rectangle"))?;
            if c.len() > line.n {
                bail!("{} coefficients for {} modes", c.len(), line.n);
            }
            let (x0, len) = (line.x0, line.length());
            Ok(GridFunction::from_fn(*line, |x| {
                c.iter()
                    .enumerate()
                    .map(|(k, ck)| ck * ((k + 1) as f64 * PI * (x - x0) / len).sin())
                    .sum()
            }))
        }
        RhsConfig::Modes2d(modes) => {
            let Grid::Rect(rect) = grid else {
                bail!("modes2d needs a rectangle");
            };
            let (x0, lx, y0, ly) = (rect.x.x0, rect.x.length(), rect.y.x0, rect.y.length());
            Ok(GridFunction::from_fn_2d(*rect, |x, y| {
                modes
                    .iter()
                    .map(|&(kx, ky, c)| {
                        c * (kx as f64 * PI * (x - x0) / lx).sin() * (ky as f64 * PI * (y - y0) / ly).sin()
                    })
                    .sum()
            }))
        }
    }
}
