//! Explicit instances with degenerate solution sets: a flat segment of
//! solutions, half-lines built from juxtaposed sine arcs, their separable
//! extension to a rectangle, and a symmetric example whose height vanishes
//! along a whole vertical line.
//!
//! Not implemented: translated half-lines for piecewise right-hand sides
//! drawn from a finite-codimension subspace. Such a builder would pair a
//! `HalflineInstance` profile with a nonzero right-hand side.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::decomp::IDecomposition;
use crate::error::{Error, Result};
use crate::fiber::{apply_operator, Fiber, SolverParams};
use crate::grid::{GridFunction, Interval1D, Rect2D, SpectralBasis};
use crate::nonlin::LipschitzNonlinearity;

/// Least-squares slope of `log r` against `log h`.
pub fn fitted_order(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn require_unit_pi(grid: &Interval1D) -> Result<()> {
    if grid.x0.abs() > 1e-12 || (grid.x1 - PI).abs() > 1e-12 {
        return Err(Error::InvalidGrid(format!(
            "expected the interval [0, pi], got [{}, {}]",
            grid.x0, grid.x1
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// flat segment

#[derive(Clone, Debug)]
pub struct FlatSegment {
    /// Slopes `(a, lambda_1^h, b)` with breakpoints `(0, m)`.
    pub f: LipschitzNonlinearity,
    pub t_max: f64,
    /// Largest node value of the discrete ground state.
    pub m: f64,
    pub lambda1: f64,
    /// The discrete ground state; its multiples `t phi`, `0 <= t <= 1`, solve `F = 0`.
    pub phi: GridFunction,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlatReport {
    pub a: f64,
    pub b: f64,
    pub lambda1: f64,
    pub m: f64,
    /// `(t, ||F(t phi)||_0)` on the segment.
    pub segment: Vec<(f64, f64)>,
    pub max_segment_residual: f64,
    /// `(t, ||F(t phi)||_0)` for `t = 1.5`, off the segment.
    pub outside: (f64, f64),
    pub passed: bool,
}

pub fn build_flat_segment(grid: Interval1D, a: f64, b: f64) -> Result<FlatSegment> {
    require_unit_pi(&grid)?;
    let lambda1 = grid.discrete_eigenvalue(1);
    if !(a < lambda1 && lambda1 < b) {
        return Err(Error::InvalidBand { a, b });
    }
    let (_, phi) = SpectralBasis::new(grid).eigenpair(1)?;
    let m = phi.max_value();
    let f = LipschitzNonlinearity::piecewise_linear(vec![0.0, m], vec![a, lambda1, b], 0.0)?;
    Ok(FlatSegment {
        f,
        t_max: 1.0,
        m,
        lambda1,
        phi,
    })
}

impl FlatSegment {
    pub fn residual(&self, t: f64) -> f64 {
        apply_operator(&self.f, &self.phi.scaled(t)).norm_l2()
    }

    pub fn verify(&self, a: f64, b: f64, tol: f64) -> FlatReport {
        let segment: Vec<(f64, f64)> = [0.0, 0.25, 0.5, 0.75, 1.0].iter().map(|&t| (t, self.residual(t))).collect();
        let max_segment_residual = segment.iter().map(|r| r.1).fold(0.0, f64::max);
        let outside = (1.5, self.residual(1.5));
        FlatReport {
            a,
            b,
            lambda1: self.lambda1,
            m: self.m,
            passed: max_segment_residual <= tol && outside.1 > tol,
            segment,
            max_segment_residual,
            outside,
        }
    }
}

// ---------------------------------------------------------------------------
// half-line

/// Profile made of `k` sine arcs on `[0, pi]`: arcs of length `pi/sqrt(b)` at
/// odd positions (positive, where `f` has slope `b`) alternate with arcs of
/// length `pi/sqrt(a)` (negative, slope `a`). Every nonnegative multiple
/// solves `-u'' = f(u)` with the two-slope `f`.
#[derive(Clone, Debug)]
pub struct HalflineInstance {
    pub k: usize,
    pub a: f64,
    pub b: f64,
    pub lengths: Vec<f64>,
    /// Left ends of the arcs followed by `pi`.
    pub junctions: Vec<f64>,
    /// Signed arc amplitudes, the first equal to 1.
    pub amplitudes: Vec<f64>,
    pub grid: Interval1D,
    pub psi: GridFunction,
    pub f: LipschitzNonlinearity,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HalflineSummary {
    pub k: usize,
    pub a: f64,
    pub b: f64,
    pub lengths: Vec<f64>,
    pub junctions: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub length_residual: f64,
}

/// Slope `b` closing `ceil(k/2) pi/sqrt(b) + floor(k/2) pi/sqrt(a) = pi`.
pub fn halfline_b(k: usize, a: f64) -> Result<f64> {
    let (odd, even) = (k.div_ceil(2) as f64, (k / 2) as f64);
    let rest = 1.0 - even / a.sqrt();
    if !(rest > 0.0) {
        return Err(Error::NoSolution(format!(
            "no slope b closes {k} arcs for a = {a}"
        )));
    }
    Ok((odd / rest).powi(2))
}

pub fn build_halfline(k: usize, a: f64, grid: Interval1D) -> Result<HalflineInstance> {
    require_unit_pi(&grid)?;
    if k < 2 {
        return Err(Error::InvalidArgument(
            "half-lines need k >= 2; below the first eigenvalue the construction fails".into(),
        ));
    }
    let (lo, hi) = (((k - 1) * (k - 1)) as f64, (k * k) as f64);
    if !(a > lo && a < hi) {
        return Err(Error::InvalidArgument(format!(
            "a must lie strictly between {lo} and {hi} for k = {k}, got {a}"
        )));
    }
    let b = halfline_b(k, a)?;
    let nearest = b.sqrt().round().max(1.0);
    let gap_tol = 1e-9 * b;
    if (b - nearest * nearest).abs() <= gap_tol {
        return Err(Error::ResonantB {
            b,
            eigenvalue: nearest * nearest,
        });
    }
    let (beta, alpha) = (PI / b.sqrt(), PI / a.sqrt());
    let lengths: Vec<f64> = (0..k).map(|i| if i % 2 == 0 { beta } else { alpha }).collect();
    let mut junctions = vec![0.0];
    for l in &lengths {
        junctions.push(junctions.last().unwrap() + l);
    }
    // matching derivatives at x_{i+1}: -c_i pi/l_i = c_{i+1} pi/l_{i+1}
    let mut amplitudes = vec![1.0];
    for i in 1..k {
        let prev = amplitudes[i - 1];
        amplitudes.push(-prev * lengths[i] / lengths[i - 1]);
    }
    let f = LipschitzNonlinearity::two_slope(a, b)?;
    let mut inst = HalflineInstance {
        k,
        a,
        b,
        lengths,
        junctions,
        amplitudes,
        grid,
        psi: GridFunction::zeros(grid),
        f,
    };
    inst.psi = GridFunction::from_fn(grid, |x| inst.profile(x));
    Ok(inst)
}

impl HalflineInstance {
    /// The continuous profile at `x`.
    pub fn profile(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= PI {
            return 0.0;
        }
        let i = self.junctions[1..].partition_point(|&j| j <= x).min(self.k - 1);
        self.amplitudes[i] * (PI * (x - self.junctions[i]) / self.lengths[i]).sin()
    }

    /// `|sum of lengths - pi|`.
    pub fn length_residual(&self) -> f64 {
        (self.lengths.iter().sum::<f64>() - PI).abs()
    }

    pub fn summary(&self) -> HalflineSummary {
        HalflineSummary {
            k: self.k,
            a: self.a,
            b: self.b,
            lengths: self.lengths.clone(),
            junctions: self.junctions.clone(),
            amplitudes: self.amplitudes.clone(),
            length_residual: self.length_residual(),
        }
    }

    pub fn residual(&self, p: f64) -> f64 {
        apply_operator(&self.f, &self.psi.scaled(p)).norm_l2()
    }

    /// Largest mismatch of one-sided difference quotients across interior junctions.
    pub fn junction_mismatch(&self) -> f64 {
        let h = self.grid.h();
        let v = self.psi.values();
        let n = v.len();
        let at = |j: i64| if j < 0 || j >= n as i64 { 0.0 } else { v[j as usize] };
        let mut worst: f64 = 0.0;
        for &xj in &self.junctions[1..self.k] {
            // nodes j, j+1 straddle the junction
            let j = ((xj - self.grid.x0) / h).floor() as i64 - 1;
            let left = (at(j) - at(j - 1)) / h;
            let right = (at(j + 2) - at(j + 1)) / h;
            worst = worst.max((left - right).abs());
        }
        worst
    }

    /// Discrete counterpart: the slope `b_h` for which the three-point
    /// recurrence started from `(0, h)` returns to zero exactly at the right
    /// end, and the resulting profile. Multiples of it solve the discrete
    /// problem to round-off, giving an exact discrete half-line.
    pub fn grid_adapted(&self) -> Result<DiscreteHalfline> {
        let n = self.grid.n;
        let h = self.grid.h();
        let shoot = |b: f64| -> (f64, Vec<f64>) {
            let f = |x: f64| if x >= 0.0 { b * x } else { self.a * x };
            let mut u = vec![0.0; n + 2];
            u[1] = h;
            for j in 1..=n {
                u[j + 1] = 2.0 * u[j] - u[j - 1] - h * h * f(u[j]);
            }
            (u[n + 1], u)
        };
        let sign_changes = |u: &[f64]| u[1..=n].windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        let (mut lo, mut hi) = (self.b * 0.9, self.b * 1.1);
        let (mut flo, _) = shoot(lo);
        let (fhi, _) = shoot(hi);
        if flo * fhi > 0.0 {
            return Err(Error::NoSolution("discrete slope not bracketed".into()));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let (fm, _) = shoot(mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm * flo < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        let (end_lo, _) = shoot(lo);
        let (end_hi, _) = shoot(hi);
        let b_h = if end_lo.abs() <= end_hi.abs() { lo } else { hi };
        let (_, u) = shoot(b_h);
        if sign_changes(&u) + 1 != self.k {
            return Err(Error::NoSolution(format!(
                "discrete profile has {} arcs instead of {}",
                sign_changes(&u) + 1,
                self.k
            )));
        }
        // match the leading amplitude of the continuous profile
        let scale = PI / self.lengths[0];
        let values: Vec<f64> = u[1..=n].iter().map(|x| x * scale).collect();
        Ok(DiscreteHalfline {
            b_h,
            psi: GridFunction::new(self.grid, values)?,
            f: LipschitzNonlinearity::two_slope(self.a, b_h)?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct DiscreteHalfline {
    pub b_h: f64,
    pub psi: GridFunction,
    pub f: LipschitzNonlinearity,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RefinementRow {
    pub n: usize,
    pub h: f64,
    pub p: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RayHeight {
    pub n: usize,
    pub p: f64,
    pub t: f64,
    pub height: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HalflineReport {
    pub instance: HalflineSummary,
    pub rows: Vec<RefinementRow>,
    /// `(p, fitted order)` for every `p > 0`.
    pub orders: Vec<(f64, f64)>,
    pub decreasing: bool,
    /// Vertical band used for the height check along the ray.
    pub band: Option<(f64, f64)>,
    pub ray: Vec<RayHeight>,
    pub min_order: f64,
    pub passed: bool,
}

/// Band around `[a, b]` for the ray check, widened slightly and kept away
/// from eigenvalues.
fn ray_band(a: f64, b: f64) -> (f64, f64) {
    let w = b - a;
    (a - 0.01 * w, b + 0.05 * w)
}

/// Refinement study of `||F(p psi)||_0` and the height along the ray
/// `p t(psi)` on the fiber over 0.
pub fn verify_halfline(k: usize, a: f64, ns: &[usize], ps: &[f64]) -> Result<HalflineReport> {
    if ns.len() < 3 {
        return Err(Error::InvalidArgument("at least three refinements are needed".into()));
    }
    let mut rows = Vec::new();
    let mut ray = Vec::new();
    let mut summary = None;
    let mut band = None;
    for &n in ns {
        let inst = build_halfline(k, a, Interval1D::unit_pi(n)?)?;
        let h = inst.grid.h();
        for &p in ps {
            rows.push(RefinementRow {
                n,
                h,
                p,
                residual: inst.residual(p),
            });
        }
        let (ba, bb) = ray_band(inst.a, inst.b);
        if let Ok(d) = IDecomposition::build(SpectralBasis::shared(inst.grid), ba, bb, None) {
            band = Some((ba, bb));
            let zero = GridFunction::zeros(inst.grid);
            let fiber = Fiber::new(&d, &inst.f, &zero, SolverParams::with_tol(1e-12))?;
            let t1 = d.vertical_coords(&d.basis().to_coeffs(&inst.psi)?);
            for &p in ps {
                let t: Vec<f64> = t1.iter().map(|x| p * x).collect();
                let pt = fiber.point(&t, None)?;
                ray.push(RayHeight {
                    n,
                    p,
                    t: t.first().copied().unwrap_or(0.0),
                    height: pt.height_norm(),
                    bound: 10.0 * h,
                });
            }
        }
        summary = Some(inst.summary());
    }
    let mut orders = Vec::new();
    let mut decreasing = true;
    for &p in ps {
        let series: Vec<(f64, f64)> = rows.iter().filter(|r| r.p == p).map(|r| (r.h, r.residual)).collect();
        if p == 0.0 {
            decreasing &= series.iter().all(|s| s.1 == 0.0);
            continue;
        }
        decreasing &= series.windows(2).all(|w| w[1].1 < w[0].1);
        orders.push((p, fitted_order(&series)));
    }
    let min_order = orders.iter().map(|o| o.1).fold(f64::INFINITY, f64::min);
    let ray_ok = ray.iter().all(|r| r.height <= r.bound);
    Ok(HalflineReport {
        instance: summary.expect("at least one refinement"),
        passed: decreasing && min_order >= 1.0 && ray_ok,
        rows,
        orders,
        decreasing,
        band,
        ray,
        min_order,
    })
}

// ---------------------------------------------------------------------------
// separable extension

#[derive(Clone, Debug)]
pub struct Separable2D {
    /// `f + x`, slopes `[a + 1, b + 1]`.
    pub f: LipschitzNonlinearity,
    /// `sin(x) psi(y)`.
    pub psi: GridFunction,
    pub halfline: HalflineInstance,
}

pub fn build_separable_2d(k: usize, a: f64, grid: Rect2D) -> Result<Separable2D> {
    if grid.x.n != grid.y.n {
        return Err(Error::InvalidGrid("the separable instance needs a square grid".into()));
    }
    require_unit_pi(&grid.x)?;
    let halfline = build_halfline(k, a, grid.y)?;
    let f = halfline.f.plus_linear(1.0);
    // sin x is the discrete ground state up to normalization, with -phi'' = phi
    let psi = GridFunction::from_fn_2d(grid, |x, y| x.sin() * halfline.profile(y));
    Ok(Separable2D { f, psi, halfline })
}

impl Separable2D {
    pub fn residual(&self, p: f64) -> f64 {
        apply_operator(&self.f, &self.psi.scaled(p)).norm_l2()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparableReport {
    pub k: usize,
    pub a: f64,
    pub b: f64,
    pub slope_range: (f64, f64),
    pub rows: Vec<RefinementRow>,
    pub orders: Vec<(f64, f64)>,
    /// Largest `|r(p) / (p r(1)) - 1|` over the tested `p`.
    pub scaling_defect: f64,
    pub min_order: f64,
    pub passed: bool,
}

pub fn verify_separable_2d(k: usize, a: f64, ns: &[usize], ps: &[f64]) -> Result<SeparableReport> {
    if ns.len() < 3 {
        return Err(Error::InvalidArgument("at least three refinements are needed".into()));
    }
    let mut rows = Vec::new();
    let mut scaling_defect: f64 = 0.0;
    let mut last = None;
    for &n in ns {
        let line = Interval1D::unit_pi(n)?;
        let inst = build_separable_2d(k, a, Rect2D::new(line, line)?)?;
        let r1 = inst.residual(1.0);
        for &p in ps {
            let r = inst.residual(p);
            if p > 0.0 {
                scaling_defect = scaling_defect.max((r / (p * r1) - 1.0).abs());
            }
            rows.push(RefinementRow {
                n,
                h: line.h(),
                p,
                residual: r,
            });
        }
        last = Some(inst);
    }
    let inst = last.expect("at least one refinement");
    let orders: Vec<(f64, f64)> = ps
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| {
            let series: Vec<(f64, f64)> = rows.iter().filter(|r| r.p == p).map(|r| (r.h, r.residual)).collect();
            (p, fitted_order(&series))
        })
        .collect();
    let min_order = orders.iter().map(|o| o.1).fold(f64::INFINITY, f64::min);
    Ok(SeparableReport {
        k,
        a,
        b: inst.halfline.b,
        slope_range: inst.f.slope_range(),
        passed: min_order >= 1.0 && scaling_defect <= 1e-8,
        rows,
        orders,
        scaling_defect,
        min_order,
    })
}

// ---------------------------------------------------------------------------
// symmetric example

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymmetricRow {
    pub t: f64,
    /// `<F(t phi_2), phi_2>_0`.
    pub inner: f64,
    pub norm_f: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymmetricReport {
    pub lambda2: f64,
    pub beta: f64,
    pub rows: Vec<SymmetricRow>,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct SymmetricExample {
    /// `e + lambda_2^h x` with even `e`.
    pub f: LipschitzNonlinearity,
    pub lambda2: f64,
    pub phi2: GridFunction,
    pub report: SymmetricReport,
}

pub const SYMMETRIC_TS: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];

/// `<F(t phi_2), phi_2>_0` for each `t`, relative bound `1e-9 (1 + ||F||_0)`.
pub fn symmetric_rows(f: &LipschitzNonlinearity, phi2: &GridFunction, ts: &[f64]) -> Result<Vec<SymmetricRow>> {
    ts.iter()
        .map(|&t| {
            let ft = apply_operator(f, &phi2.scaled(t));
            let inner = ft.inner_l2(phi2)?;
            let norm_f = ft.norm_l2();
            Ok(SymmetricRow {
                t,
                inner,
                norm_f,
                passed: inner.abs() <= 1e-9 * (1.0 + norm_f),
            })
        })
        .collect()
}

/// `f = e + lambda_2^h x` on a grid over `[-pi/2, pi/2]`, with the even
/// `e(x) = e0 + beta (sqrt(1 + x^2) - 1)`.
pub fn build_symmetric_example(grid: Interval1D, beta: f64, e0: f64) -> Result<SymmetricExample> {
    if (grid.x0 + PI / 2.0).abs() > 1e-12 || (grid.x1 - PI / 2.0).abs() > 1e-12 {
        return Err(Error::InvalidGrid(format!(
            "expected the interval [-pi/2, pi/2], got [{}, {}]",
            grid.x0, grid.x1
        )));
    }
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!("beta must lie in [0, 1), got {beta}")));
    }
    let (lambda2, phi2) = SpectralBasis::new(grid).eigenpair(2)?;
    let f = LipschitzNonlinearity::smooth_slope(lambda2, beta, 0.0, e0)?;
    let rows = symmetric_rows(&f, &phi2, &SYMMETRIC_TS)?;
    let passed = rows.iter().all(|r| r.passed);
    Ok(SymmetricExample {
        f,
        lambda2,
        phi2,
        report: SymmetricReport {
            lambda2,
            beta,
            rows,
            passed,
        },
    })
}

/// Same construction with the odd `e` that is `beta x` on `[-1, 1]` and
/// constant outside; the inner products no longer vanish.
pub fn symmetric_negative_control(grid: Interval1D, beta: f64) -> Result<Vec<SymmetricRow>> {
    let (lambda2, phi2) = SpectralBasis::new(grid).eigenpair(2)?;
    let f = LipschitzNonlinearity::piecewise_linear(vec![-1.0, 1.0], vec![lambda2, lambda2 + beta, lambda2], 0.0)?;
    symmetric_rows(&f, &phi2, &SYMMETRIC_TS)
}
