//! Uniform Dirichlet grids, the finite-difference Laplacian and its exact
//! discrete sine eigenbasis.
//!
//! Boundary values are never stored: a [`GridFunction`] holds interior node
//! values only and is implicitly zero on the boundary. On such grids the
//! 3-point (5-point in 2D) stencil matrix is diagonalized exactly by the
//! discrete sine vectors, which gives exact spectral projectors downstream.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interval `[x0, x1]` with `n` interior nodes at `x0 + j*h`, `j = 1..=n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval1D {
    pub x0: f64,
    pub x1: f64,
    pub n: usize,
}

impl Interval1D {
    pub fn new(x0: f64, x1: f64, n: usize) -> Result<Self> {
        if !(x0.is_finite() && x1.is_finite()) || x1 <= x0 {
            return Err(Error::InvalidGrid(format!("need x1 > x0, got [{x0}, {x1}]")));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 interior nodes, got {n}")));
        }
        Ok(Self { x0, x1, n })
    }

    /// The interval `[0, pi]` used by most examples.
    pub fn unit_pi(n: usize) -> Result<Self> {
        Self::new(0.0, PI, n)
    }

    pub fn length(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn h(&self) -> f64 {
        self.length() / (self.n + 1) as f64
    }

    /// Coordinate of the 0-based interior node `j` (i.e. grid point `j + 1`).
    pub fn node(&self, j: usize) -> f64 {
        self.x0 + (j + 1) as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Discrete Dirichlet eigenvalue `(4/h^2) sin^2(k pi / (2(n+1)))`, 1-based `k`.
    pub fn discrete_eigenvalue(&self, k: usize) -> f64 {
        let h = self.h();
        let s = (k as f64 * PI / (2.0 * (self.n + 1) as f64)).sin();
        4.0 / (h * h) * s * s
    }

    /// Continuum Dirichlet eigenvalue `(k pi / L)^2`.
    pub fn continuum_eigenvalue(&self, k: usize) -> f64 {
        let q = k as f64 * PI / self.length();
        q * q
    }
}

/// Tensor-product rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect2D {
    pub x: Interval1D,
    pub y: Interval1D,
}

impl Rect2D {
    pub fn new(x: Interval1D, y: Interval1D) -> Result<Self> {
        Interval1D::new(x.x0, x.x1, x.n)?;
        Interval1D::new(y.x0, y.x1, y.n)?;
        Ok(Self { x, y })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Line(Interval1D),
    Rect(Rect2D),
}

impl Grid {
    /// Number of interior nodes.
    pub fn len(&self) -> usize {
        match self {
            Grid::Line(g) => g.n,
            Grid::Rect(r) => r.x.n * r.y.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of the discrete L2 inner product.
    pub fn weight(&self) -> f64 {
        match self {
            Grid::Line(g) => g.h(),
            Grid::Rect(r) => r.x.h() * r.y.h(),
        }
    }

    /// Smallest mesh spacing.
    pub fn h(&self) -> f64 {
        match self {
            Grid::Line(g) => g.h(),
            Grid::Rect(r) => r.x.h().min(r.y.h()),
        }
    }

    pub fn as_line(&self) -> Option<&Interval1D> {
        match self {
            Grid::Line(g) => Some(g),
            Grid::Rect(_) => None,
        }
    }
}

impl From<Interval1D> for Grid {
    fn from(g: Interval1D) -> Self {
        Grid::Line(g)
    }
}

impl From<Rect2D> for Grid {
    fn from(r: Rect2D) -> Self {
        Grid::Rect(r)
    }
}

/// Values at the interior nodes of a grid. In 2D the layout is x-major:
/// index `ix * ny + iy`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: impl Into<Grid>, values: Vec<f64>) -> Result<Self> {
        let grid = grid.into();
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at node {bad}")));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn zeros(grid: impl Into<Grid>) -> Self {
        let grid = grid.into();
        Self {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    /// Samples `f` at the interior nodes of a 1D grid.
    pub fn from_fn(grid: Interval1D, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: grid.nodes().into_iter().map(f).collect(),
            grid: Grid::Line(grid),
        }
    }

    /// Samples `f(x, y)` at the interior nodes of a rectangle.
    pub fn from_fn_2d(grid: Rect2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let xs = grid.x.nodes();
        let ys = grid.y.nodes();
        let mut values = Vec::with_capacity(xs.len() * ys.len());
        for &x in &xs {
            for &y in &ys {
                values.push(f(x, y));
            }
        }
        Self {
            grid: Grid::Rect(grid),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &GridFunction) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + s * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.add_scaled(-1.0, other)
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.add_scaled(1.0, other)
    }

    pub fn norm_l2(&self) -> f64 {
        norm_l2(self)
    }

    pub fn norm_h2(&self) -> f64 {
        norm_h2(self)
    }

    pub fn inner_l2(&self, other: &GridFunction) -> Result<f64> {
        inner_l2(self, other)
    }

    pub(crate) fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// `-Delta_h u` with zero Dirichlet padding.
pub fn laplacian_apply(u: &GridFunction) -> GridFunction {
    let values = match u.grid {
        Grid::Line(g) => {
            let mut out = vec![0.0; g.n];
            line_laplacian(&u.values, g.h(), &mut out);
            out
        }
        Grid::Rect(r) => {
            let (nx, ny) = (r.x.n, r.y.n);
            let ix2 = 1.0 / (r.x.h() * r.x.h());
            let iy2 = 1.0 / (r.y.h() * r.y.h());
            let v = &u.values;
            let mut out = vec![0.0; nx * ny];
            for i in 0..nx {
                for j in 0..ny {
                    let c = v[i * ny + j];
                    let w = if i > 0 { v[(i - 1) * ny + j] } else { 0.0 };
                    let e = if i + 1 < nx { v[(i + 1) * ny + j] } else { 0.0 };
                    let s = if j > 0 { v[i * ny + j - 1] } else { 0.0 };
                    let n = if j + 1 < ny { v[i * ny + j + 1] } else { 0.0 };
                    out[i * ny + j] = (2.0 * c - w - e) * ix2 + (2.0 * c - s - n) * iy2;
                }
            }
            out
        }
    };
    GridFunction::from_parts(u.grid, values)
}

fn line_laplacian(u: &[f64], h: f64, out: &mut [f64]) {
    let n = u.len();
    let ih2 = 1.0 / (h * h);
    for j in 0..n {
        let left = if j > 0 { u[j - 1] } else { 0.0 };
        let right = if j + 1 < n { u[j + 1] } else { 0.0 };
        out[j] = (2.0 * u[j] - left - right) * ih2;
    }
}

/// Discrete L2 norm `sqrt(h * sum u_j^2)` (`h_x h_y` weight in 2D).
pub fn norm_l2(u: &GridFunction) -> f64 {
    (u.grid.weight() * u.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// `norm_l2(-Delta_h u)`.
pub fn norm_h2(u: &GridFunction) -> f64 {
    norm_l2(&laplacian_apply(u))
}

pub fn inner_l2(u: &GridFunction, v: &GridFunction) -> Result<f64> {
    u.check_same_grid(v)?;
    Ok(u.grid.weight() * u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum::<f64>())
}

/// Orthonormal sine vectors of one axis: `S[k][j] = sqrt(2/L) sin(pi (k+1)(j+1)/(n+1))`.
/// The matrix is symmetric, so the same product serves both transform directions.
#[derive(Debug)]
struct SineTable {
    n: usize,
    h: f64,
    table: Vec<f64>,
}

impl SineTable {
    fn new(g: &Interval1D) -> Self {
        let n = g.n;
        let period = 2 * (n + 1);
        let scale = (2.0 / g.length()).sqrt();
        let mut table = vec![0.0; n * n];
        for k in 0..n {
            for j in 0..n {
                // Reduce the integer phase first so the sine argument stays in [0, 2pi).
                let m = ((k + 1) * (j + 1)) % period;
                table[k * n + j] = scale * (PI * m as f64 / (n + 1) as f64).sin();
            }
        }
        Self { n, h: g.h(), table }
    }

    /// `out = s * S x`.
    fn apply(&self, x: &[f64], s: f64, out: &mut [f64]) {
        let n = self.n;
        for (k, o) in out.iter_mut().enumerate().take(n) {
            let row = &self.table[k * n..(k + 1) * n];
            *o = s * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

/// Eigenpairs of the stencil Laplacian and the node <-> sine-coefficient transforms.
///
/// Coefficients are ordered by ascending eigenvalue. The transforms are
/// orthonormal, so the Euclidean norm of a coefficient vector equals the
/// discrete L2 norm of the grid function (Parseval).
#[derive(Debug)]
pub struct SpectralBasis {
    grid: Grid,
    eigenvalues: Vec<f64>,
    /// 1-based axis wave numbers per mode; `(k, 0)` in 1D.
    modes: Vec<(usize, usize)>,
    x: SineTable,
    y: Option<SineTable>,
}

impl SpectralBasis {
    pub fn new(grid: impl Into<Grid>) -> Self {
        let grid = grid.into();
        match grid {
            Grid::Line(g) => {
                let eigenvalues = (1..=g.n).map(|k| g.discrete_eigenvalue(k)).collect();
                Self {
                    grid,
                    eigenvalues,
                    modes: (1..=g.n).map(|k| (k, 0)).collect(),
                    x: SineTable::new(&g),
                    y: None,
                }
            }
            Grid::Rect(r) => {
                let mut modes: Vec<(usize, usize)> = (1..=r.x.n)
                    .flat_map(|i| (1..=r.y.n).map(move |j| (i, j)))
                    .collect();
                let lam = |m: &(usize, usize)| {
                    r.x.discrete_eigenvalue(m.0) + r.y.discrete_eigenvalue(m.1)
                };
                modes.sort_by(|p, q| lam(p).total_cmp(&lam(q)).then(p.cmp(q)));
                let eigenvalues = modes.iter().map(lam).collect();
                Self {
                    grid,
                    eigenvalues,
                    modes,
                    x: SineTable::new(&r.x),
                    y: Some(SineTable::new(&r.y)),
                }
            }
        }
    }

    pub fn shared(grid: impl Into<Grid>) -> Arc<Self> {
        Arc::new(Self::new(grid))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Ascending discrete eigenvalues (non-strict in 2D, where modes can be degenerate).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Axis wave numbers of the 0-based mode slot.
    pub fn mode(&self, slot: usize) -> (usize, usize) {
        self.modes[slot]
    }

    /// Continuum eigenvalue paired with the 0-based mode slot.
    pub fn continuum_eigenvalue(&self, slot: usize) -> f64 {
        let (i, j) = self.modes[slot];
        match self.grid {
            Grid::Line(g) => g.continuum_eigenvalue(i),
            Grid::Rect(r) => r.x.continuum_eigenvalue(i) + r.y.continuum_eigenvalue(j),
        }
    }

    /// `(lambda_k^h, phi_k^h)` for the 1-based index `k`, with `||phi||_0 = 1`
    /// and a positive first nonzero component.
    pub fn eigenpair(&self, k: usize) -> Result<(f64, GridFunction)> {
        if k == 0 || k > self.len() {
            return Err(Error::IndexOutOfRange { index: k, n: self.len() });
        }
        let mut c = vec![0.0; self.len()];
        c[k - 1] = 1.0;
        let mut phi = self.from_coeffs(&c)?;
        if let Some(first) = phi.values.iter().find(|v| v.abs() > 1e-14) {
            if *first < 0.0 {
                phi = phi.scaled(-1.0);
            }
        }
        Ok((self.eigenvalues[k - 1], phi))
    }

    pub fn to_coeffs(&self, u: &GridFunction) -> Result<Vec<f64>> {
        if u.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.forward(&u.values))
    }

    pub fn from_coeffs(&self, c: &[f64]) -> Result<GridFunction> {
        if c.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: c.len(),
            });
        }
        Ok(GridFunction::from_parts(self.grid, self.inverse(c)))
    }

    /// Node values to sine coefficients, no validation.
    pub(crate) fn forward(&self, u: &[f64]) -> Vec<f64> {
        match &self.y {
            None => {
                let mut c = vec![0.0; self.x.n];
                self.x.apply(u, self.x.h, &mut c);
                c
            }
            Some(y) => {
                let grid = self.separable(u, self.x.h, y.h);
                self.modes
                    .iter()
                    .map(|&(i, j)| grid[(i - 1) * y.n + (j - 1)])
                    .collect()
            }
        }
    }

    /// Sine coefficients to node values, no validation.
    pub(crate) fn inverse(&self, c: &[f64]) -> Vec<f64> {
        match &self.y {
            None => {
                let mut u = vec![0.0; self.x.n];
                self.x.apply(c, 1.0, &mut u);
                u
            }
            Some(y) => {
                let mut grid = vec![0.0; self.x.n * y.n];
                for (slot, &(i, j)) in self.modes.iter().enumerate() {
                    grid[(i - 1) * y.n + (j - 1)] = c[slot];
                }
                self.separable(&grid, 1.0, 1.0)
            }
        }
    }

    fn separable(&self, u: &[f64], sx: f64, sy: f64) -> Vec<f64> {
        let y = self.y.as_ref().expect("2D basis");
        let (nx, ny) = (self.x.n, y.n);
        // y-axis transform row by row, then the x-axis transform column by column.
        let mut tmp = vec![0.0; nx * ny];
        for i in 0..nx {
            y.apply(&u[i * ny..(i + 1) * ny], sy, &mut tmp[i * ny..(i + 1) * ny]);
        }
        let mut out = vec![0.0; nx * ny];
        let mut col = vec![0.0; nx];
        let mut res = vec![0.0; nx];
        for j in 0..ny {
            for i in 0..nx {
                col[i] = tmp[i * ny + j];
            }
            self.x.apply(&col, sx, &mut res);
            for i in 0..nx {
                out[i * ny + j] = res[i];
            }
        }
        out
    }
}
