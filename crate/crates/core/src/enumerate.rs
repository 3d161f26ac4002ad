//! Enumeration of solutions of `F(u) = g` through zeros of the height map on
//! the fiber over `P g`, plus an independent damped-Newton multistart oracle
//! on the full discrete system.
//!
//! Fiber dimension 1 is handled by sign-change bracketing (Brent) with a
//! second pass for tangential roots, dimension 2 by dense sampling followed by
//! quasi-Newton refinement, and higher dimensions only from user seeds.
//! Runs of near-zero height are reported as continua instead of roots.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomp::{norm, IDecomposition};
use crate::error::{Error, Result};
use crate::fiber::{apply_operator, Fiber, FiberPoint, SolverParams};
use crate::grid::{GridFunction, SpectralBasis};
use crate::nonlin::LipschitzNonlinearity;

/// Tolerances for enumeration. `None` entries scale with `||g||_0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub solver_tol: f64,
    /// Defaults to `1e-8 (1 + ||g||_0)`.
    #[serde(default)]
    pub accept_tol: Option<f64>,
    /// Defaults to `1e-7 (1 + ||g||_0)`.
    #[serde(default)]
    pub degenerate_tol: Option<f64>,
    /// Relative bracket width, `|t - t'| <= t_tol (1 + |t|)`.
    pub t_tol: f64,
    /// Roots closer than `merge_tol (1 + |t|)` are merged.
    pub merge_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            solver_tol: 1e-11,
            accept_tol: None,
            degenerate_tol: None,
            t_tol: 1e-11,
            merge_tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Resolved {
    accept: f64,
    degenerate: f64,
    t_tol: f64,
    merge: f64,
}

impl Tolerances {
    fn resolve(&self, g: &GridFunction) -> Resolved {
        let s = 1.0 + g.norm_l2();
        Resolved {
            accept: self.accept_tol.unwrap_or(1e-8 * s),
            degenerate: self.degenerate_tol.unwrap_or(1e-7 * s),
            t_tol: self.t_tol,
            merge: self.merge_tol,
        }
    }

    fn solver(&self) -> SolverParams {
        SolverParams::with_tol(self.solver_tol)
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub u: GridFunction,
    /// Vertical coordinates; empty for oracle solutions.
    pub t: Vec<f64>,
    /// `||F(u) - g||_0`, recomputed from scratch.
    pub residual: f64,
    /// Found by the local-minimum pass or by merging two close sign changes.
    pub tangential: bool,
    /// Final sign-change bracket in 1D.
    pub bracket: Option<[f64; 2]>,
}

/// A stretch (1D) or box (2D) of the fiber on which the height is numerically zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Continuum {
    pub t_lo: Vec<f64>,
    pub t_hi: Vec<f64>,
    pub max_abs_height: f64,
    pub samples: usize,
}

impl Continuum {
    fn contains(&self, t: &[f64], pad: &[f64]) -> bool {
        t.iter()
            .zip(&self.t_lo)
            .zip(&self.t_hi)
            .zip(pad)
            .all(|(((x, lo), hi), p)| *x >= lo - p && *x <= hi + p)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanMetadata {
    pub method: String,
    pub t_min: Vec<f64>,
    pub t_max: Vec<f64>,
    pub resolution: usize,
    pub accept_tol: f64,
    pub degenerate_tol: f64,
    pub t_tol: f64,
    pub solver_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_starts: Option<usize>,
    /// Seeds or starts that did not converge.
    pub failures: usize,
    /// Converged candidates whose recomputed residual exceeded `accept_tol`.
    pub rejected: usize,
}

#[derive(Clone, Debug, Default)]
pub struct SolutionSet {
    pub solutions: Vec<Solution>,
    pub continua: Vec<Continuum>,
    pub meta: ScanMetadata,
}

/// Outcome of matching two solution sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub count_a: usize,
    pub count_b: usize,
    /// Largest matched `||u - u'||_0`; `None` when counts differ.
    pub max_distance: Option<f64>,
    pub agree: bool,
}

impl SolutionSet {
    pub fn count(&self) -> usize {
        self.solutions.len()
    }

    pub fn has_continuum(&self) -> bool {
        !self.continua.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.solutions.iter().map(|s| s.residual).fold(0.0, f64::max)
    }

    /// Greedy nearest matching in `||.||_0`; agreement needs equal counts and
    /// every matched distance within `tol`.
    pub fn compare(&self, other: &SolutionSet, tol: f64) -> Comparison {
        let (na, nb) = (self.count(), other.count());
        if na != nb {
            return Comparison {
                count_a: na,
                count_b: nb,
                max_distance: None,
                agree: false,
            };
        }
        let mut pairs = Vec::with_capacity(na * nb);
        for (i, a) in self.solutions.iter().enumerate() {
            for (j, b) in other.solutions.iter().enumerate() {
                let dist = a.u.sub(&b.u).map(|d| d.norm_l2()).unwrap_or(f64::INFINITY);
                pairs.push((dist, i, j));
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut used_a = vec![false; na];
        let mut used_b = vec![false; nb];
        let mut worst: f64 = 0.0;
        for (dist, i, j) in pairs {
            if !used_a[i] && !used_b[j] {
                used_a[i] = true;
                used_b[j] = true;
                worst = worst.max(dist);
            }
        }
        Comparison {
            count_a: na,
            count_b: nb,
            max_distance: Some(worst),
            agree: worst <= tol,
        }
    }
}

/// Default symmetric scan half-width `5 (1 + ||g||_0 / gap)`, where `gap` is the
/// distance from the spectrum to the band endpoints.
pub fn default_t_range(d: &IDecomposition, g: &GridFunction) -> f64 {
    let gap = d
        .basis()
        .eigenvalues()
        .iter()
        .map(|l| (l - d.a()).abs().min((l - d.b()).abs()))
        .fold(f64::INFINITY, f64::min);
    5.0 * (1.0 + g.norm_l2() / gap)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Evaluates shifted heights `H(t) + offset` with warm starts.
struct Reduced<'a, 'b> {
    fiber: &'b Fiber<'a>,
    offset: Vec<f64>,
}

impl Reduced<'_, '_> {
    fn eval(&self, t: &[f64], warm: Option<&[f64]>) -> Result<(Vec<f64>, FiberPoint)> {
        let p = self.fiber.point(t, warm)?;
        let h = p.height.iter().zip(&self.offset).map(|(h, o)| h + o).collect();
        Ok((h, p))
    }
}

fn verify(f: &LipschitzNonlinearity, g: &GridFunction, p: &FiberPoint) -> Result<f64> {
    Ok(apply_operator(f, &p.u).sub(g)?.norm_l2())
}

fn check_dim(d: &IDecomposition, expected: usize) -> Result<()> {
    if d.fiber_dim() != expected {
        return Err(Error::FiberDimMismatch {
            expected,
            actual: d.fiber_dim(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// dimension 0

/// Fiber dimension 0: the horizontal inversion is the whole solve.
pub fn solve_dim0(d: &IDecomposition, f: &LipschitzNonlinearity, g: &GridFunction, tols: &Tolerances) -> Result<SolutionSet> {
    check_dim(d, 0)?;
    let r = tols.resolve(g);
    let fiber = Fiber::new(d, f, g, tols.solver())?;
    let p = fiber.point(&[], None)?;
    let residual = verify(f, g, &p)?;
    let mut meta = metadata("dim0", &[], &[], 1, &r, tols);
    let mut solutions = Vec::new();
    if residual <= r.accept {
        solutions.push(Solution {
            u: p.u,
            t: Vec::new(),
            residual,
            tangential: false,
            bracket: None,
        });
    } else {
        meta.rejected = 1;
    }
    Ok(SolutionSet {
        solutions,
        continua: Vec::new(),
        meta,
    })
}

fn metadata(method: &str, t_min: &[f64], t_max: &[f64], resolution: usize, r: &Resolved, tols: &Tolerances) -> ScanMetadata {
    ScanMetadata {
        method: method.into(),
        t_min: t_min.to_vec(),
        t_max: t_max.to_vec(),
        resolution,
        accept_tol: r.accept,
        degenerate_tol: r.degenerate,
        t_tol: r.t_tol,
        solver_tol: tols.solver_tol,
        ..Default::default()
    }
}

// ---------------------------------------------------------------------------
// dimension 1

pub fn solve_on_fiber_1d(
    d: &IDecomposition,
    f: &LipschitzNonlinearity,
    g: &GridFunction,
    t_min: f64,
    t_max: f64,
    n_samples: usize,
    tols: &Tolerances,
) -> Result<SolutionSet> {
    check_dim(d, 1)?;
    if !(t_min < t_max) || n_samples < 16 {
        return Err(Error::InvalidArgument(format!(
            "need t_min < t_max and at least 16 samples, got [{t_min}, {t_max}] with {n_samples}"
        )));
    }
    let fiber = Fiber::new(d, f, g, tols.solver())?;
    let ts: Vec<Vec<f64>> = linspace(t_min, t_max, n_samples).into_iter().map(|t| vec![t]).collect();
    let trace = fiber.trace(&ts)?;
    enumerate_1d(&fiber, &trace.samples, 0.0, g, tols)
}

struct Candidate {
    t: f64,
    h: f64,
    tangential: bool,
    bracket: Option<[f64; 2]>,
}

fn enumerate_1d(
    fiber: &Fiber<'_>,
    samples: &[FiberPoint],
    offset: f64,
    g_eff: &GridFunction,
    tols: &Tolerances,
) -> Result<SolutionSet> {
    let r = tols.resolve(g_eff);
    let red = Reduced {
        fiber,
        offset: vec![offset],
    };
    let ts: Vec<f64> = samples.iter().map(|p| p.t[0]).collect();
    let hs: Vec<f64> = samples.iter().map(|p| p.height[0] + offset).collect();
    let n = ts.len();
    let spacing = (ts[n - 1] - ts[0]) / (n - 1) as f64;
    let warm_for = |t: f64| -> Option<&[f64]> {
        let i = ts.partition_point(|&x| x < t).min(n - 1);
        let j = if i > 0 && (t - ts[i - 1]).abs() < (ts[i] - t).abs() { i - 1 } else { i };
        Some(samples[j].z.as_slice())
    };
    let h_at = |t: f64| -> Result<f64> { Ok(red.eval(&[t], warm_for(t))?.0[0]) };

    // continua: runs of at least three near-zero samples
    let mut in_cont = vec![false; n];
    let mut continua = Vec::new();
    let mut i = 0;
    while i < n {
        if hs[i].abs() <= r.degenerate {
            let start = i;
            while i < n && hs[i].abs() <= r.degenerate {
                i += 1;
            }
            if i - start >= 3 {
                in_cont[start..i].iter_mut().for_each(|c| *c = true);
                continua.push(Continuum {
                    t_lo: vec![ts[start]],
                    t_hi: vec![ts[i - 1]],
                    max_abs_height: hs[start..i].iter().fold(0.0, |m, h| m.max(h.abs())),
                    samples: i - start,
                });
            }
        } else {
            i += 1;
        }
    }

    let mut cands: Vec<Candidate> = Vec::new();
    let mut failures = 0;
    for i in 0..n {
        if in_cont[i] {
            continue;
        }
        if hs[i] == 0.0 {
            cands.push(Candidate {
                t: ts[i],
                h: 0.0,
                tangential: false,
                bracket: Some([ts[i], ts[i]]),
            });
        } else if i + 1 < n && !in_cont[i + 1] && hs[i] * hs[i + 1] < 0.0 {
            match brent(&h_at, ts[i], hs[i], ts[i + 1], hs[i + 1], &r) {
                Ok(c) => cands.push(c),
                Err(_) => failures += 1,
            }
        }
    }

    // tangential pass: local minima of |h| without a sign change
    let thresh = r.accept.sqrt();
    for i in 1..n.saturating_sub(1) {
        if in_cont[i - 1] || in_cont[i] || in_cont[i + 1] {
            continue;
        }
        let (h0, h1, h2) = (hs[i - 1], hs[i], hs[i + 1]);
        if h1 == 0.0 || h0 * h1 <= 0.0 || h1 * h2 <= 0.0 || h1.abs() > h0.abs() || h1.abs() > h2.abs() {
            continue;
        }
        let vertex = parabola_min(ts[i - 1], h0, ts[i], h1, ts[i + 1], h2);
        if !(h1.abs() <= thresh || vertex * h1 <= 0.0 || vertex.abs() <= thresh) {
            continue;
        }
        match golden_signed(&h_at, ts[i - 1], ts[i + 1], h1.signum(), &r)? {
            Golden::Flip(tf, hf) => {
                for (lo, hlo, hi, hhi) in [(ts[i - 1], h0, tf, hf), (tf, hf, ts[i + 1], h2)] {
                    match brent(&h_at, lo, hlo, hi, hhi, &r) {
                        Ok(c) => cands.push(c),
                        Err(_) => failures += 1,
                    }
                }
            }
            Golden::Min(tm, hm) => {
                if hm.abs() <= 0.5 * r.accept {
                    cands.push(Candidate {
                        t: tm,
                        h: hm,
                        tangential: true,
                        bracket: None,
                    });
                }
            }
        }
    }

    cands.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut merged: Vec<Candidate> = Vec::new();
    for c in cands {
        if let Some(last) = merged.last_mut() {
            if (c.t - last.t).abs() <= r.merge * (1.0 + c.t.abs()) {
                let tangential = true;
                if c.h.abs() < last.h.abs() {
                    *last = c;
                }
                last.tangential = tangential;
                continue;
            }
        }
        merged.push(c);
    }

    let mut solutions = Vec::new();
    let mut rejected = 0;
    for c in merged {
        if continua.iter().any(|k| k.contains(&[c.t], &[spacing])) {
            continue;
        }
        let (_, p) = red.eval(&[c.t], warm_for(c.t))?;
        let residual = verify(fiber.nonlinearity(), g_eff, &p)?;
        if residual <= r.accept {
            solutions.push(Solution {
                u: p.u,
                t: vec![c.t],
                residual,
                tangential: c.tangential,
                bracket: c.bracket,
            });
        } else {
            rejected += 1;
        }
    }
    let mut meta = metadata("fiber_1d", &[ts[0]], &[ts[n - 1]], n, &r, tols);
    meta.failures = failures;
    meta.rejected = rejected;
    Ok(SolutionSet {
        solutions,
        continua,
        meta,
    })
}

fn parabola_min(x0: f64, y0: f64, x1: f64, y1: f64, x2: f64, y2: f64) -> f64 {
    let d0 = (y1 - y0) / (x1 - x0);
    let d1 = (y2 - y1) / (x2 - x1);
    let a = (d1 - d0) / (x2 - x0);
    if a == 0.0 {
        return y1;
    }
    let b = d0 - a * (x0 + x1);
    let xv = (-b / (2.0 * a)).clamp(x0, x2);
    y0 + d0 * (xv - x0) + a * (xv - x0) * (xv - x1)
}

/// Brent's method on a sign-change bracket, run down to the t-tolerance.
fn brent(h: &impl Fn(f64) -> Result<f64>, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64, r: &Resolved) -> Result<Candidate> {
    let mut c = b;
    let mut fc = fb;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if (fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * r.t_tol * (1.0 + b.abs());
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(Candidate {
                t: b,
                h: fb,
                tangential: false,
                bracket: Some([b.min(c), b.max(c)]),
            });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let rr = fb / fc;
                p = s * (2.0 * xm * qq * (qq - rr) - (b - a) * (rr - 1.0));
                q = (qq - 1.0) * (rr - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = h(b)?;
    }
    Err(Error::NoSolution("bracket refinement did not converge".into()))
}

enum Golden {
    Flip(f64, f64),
    Min(f64, f64),
}

/// Golden-section minimization of `sign * h` on `[lo, hi]`; stops early when
/// `h` changes sign.
fn golden_signed(h: &impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, sign: f64, r: &Resolved) -> Result<Golden> {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = h(x1)?;
    let mut f2 = h(x2)?;
    for _ in 0..200 {
        for (x, fx) in [(x1, f1), (x2, f2)] {
            if sign * fx < 0.0 {
                return Ok(Golden::Flip(x, fx));
            }
        }
        if (b - a) <= r.t_tol * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if sign * f1 < sign * f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = h(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = h(x2)?;
        }
    }
    Ok(if f1.abs() <= f2.abs() { Golden::Min(x1, f1) } else { Golden::Min(x2, f2) })
}

/// Fiber points `t` (1D fiber, right-hand side `h0`) at which the height has a
/// local extremum, with the shift `s` that makes `h0 - s phi_1` tangent there.
pub fn fold_values_1d(
    d: &IDecomposition,
    f: &LipschitzNonlinearity,
    h0: &GridFunction,
    t_min: f64,
    t_max: f64,
    n_samples: usize,
    tols: &Tolerances,
) -> Result<Vec<(f64, f64)>> {
    check_dim(d, 1)?;
    let q = phi1_vertical(d)?;
    let fiber = Fiber::new(d, f, h0, tols.solver())?;
    let ts: Vec<Vec<f64>> = linspace(t_min, t_max, n_samples).into_iter().map(|t| vec![t]).collect();
    let trace = fiber.trace(&ts)?;
    let r = tols.resolve(h0);
    let hs: Vec<f64> = trace.samples.iter().map(|p| p.height[0]).collect();
    let tt: Vec<f64> = trace.samples.iter().map(|p| p.t[0]).collect();
    let mut out = Vec::new();
    for i in 1..hs.len() - 1 {
        let slope_in = hs[i] - hs[i - 1];
        let slope_out = hs[i + 1] - hs[i];
        if slope_in * slope_out >= 0.0 {
            continue;
        }
        // maximum if slopes go + then -, minimum otherwise
        let sign = if slope_in > 0.0 { -1.0 } else { 1.0 };
        let h = |t: f64| -> Result<f64> { Ok(fiber.point(&[t], Some(&trace.samples[i].z))?.height[0]) };
        let (ts_, hs_) = golden_extremum(&h, tt[i - 1], tt[i + 1], sign, &r)?;
        out.push((ts_, -hs_ / q[0]));
    }
    Ok(out)
}

fn golden_extremum(h: &impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, sign: f64, r: &Resolved) -> Result<(f64, f64)> {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = sign * h(x1)?;
    let mut f2 = sign * h(x2)?;
    while (b - a) > r.t_tol * (1.0 + a.abs().max(b.abs())) {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = sign * h(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = sign * h(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, sign * f1) } else { (x2, sign * f2) })
}

/// Vertical coordinates of the discrete ground state; errors if it is not vertical.
fn phi1_vertical(d: &IDecomposition) -> Result<Vec<f64>> {
    let mut e1 = vec![0.0; d.basis().len()];
    e1[0] = 1.0;
    let q = d.vertical_coords(&e1);
    let mut rest = e1;
    d.remove_vertical(&mut rest);
    if norm(&rest) > 1e-12 {
        return Err(Error::InvalidArgument(
            "the ground state must lie in the vertical space for a shift scan".into(),
        ));
    }
    Ok(q)
}

// ---------------------------------------------------------------------------
// dimension 2 and seeded refinement

struct NewtonOutcome {
    t: Vec<f64>,
    h: Vec<f64>,
    point: FiberPoint,
    singular: Option<Vec<f64>>,
}

fn pinv_step(j: &DMatrix<f64>, h: &[f64], rcond: f64) -> Vec<f64> {
    let svd = j.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cut = rcond * smax;
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let hv = DVector::from_column_slice(h);
    let mut step = DVector::zeros(j.ncols());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cut && s > 0.0 {
            let coef = u.column(k).dot(&hv) / s;
            step -= vt.row(k).transpose() * coef;
        }
    }
    step.iter().copied().collect()
}

impl Reduced<'_, '_> {
    fn jacobian(&self, t: &[f64], h: &[f64], warm: &[f64]) -> Result<DMatrix<f64>> {
        let k = t.len();
        let scale = 1.0 + t.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let delta = 1e-7 * scale;
        let mut j = DMatrix::zeros(k, k);
        for col in 0..k {
            let mut tp = t.to_vec();
            tp[col] += delta;
            let (hp, _) = self.eval(&tp, Some(warm))?;
            for row in 0..k {
                j[(row, col)] = (hp[row] - h[row]) / delta;
            }
        }
        Ok(j)
    }

    /// Damped Gauss-Newton with a finite-difference Jacobian and an SVD solve.
    fn newton(&self, t0: &[f64], warm: Option<&[f64]>, target: f64, max_iter: usize) -> Result<Option<NewtonOutcome>> {
        let (mut h, mut p) = self.eval(t0, warm)?;
        let mut t = t0.to_vec();
        let mut j = self.jacobian(&t, &h, &p.z)?;
        // keep polishing below the target until the line search stalls
        for _ in 0..max_iter {
            let hn = norm(&h);
            if hn <= 1e-3 * target {
                break;
            }
            let mut accepted = false;
            for rcond in [1e-12, 1e-6] {
                let step = pinv_step(&j, &h, rcond);
                let mut lambda = 1.0;
                for _ in 0..30 {
                    let tn: Vec<f64> = t.iter().zip(&step).map(|(a, s)| a + lambda * s).collect();
                    let (hn2, pn) = self.eval(&tn, Some(&p.z))?;
                    if norm(&hn2) < (1.0 - 1e-4 * lambda) * hn {
                        t = tn;
                        h = hn2;
                        p = pn;
                        accepted = true;
                        break;
                    }
                    lambda *= 0.5;
                }
                if accepted {
                    break;
                }
            }
            if !accepted {
                break;
            }
            j = self.jacobian(&t, &h, &p.z)?;
        }
        if norm(&h) > target {
            return Ok(None);
        }
        let singular = null_direction(&j);
        Ok(Some(NewtonOutcome { t, h, point: p, singular }))
    }
}

/// Unit null direction of `j` when it is numerically rank deficient.
fn null_direction(j: &DMatrix<f64>) -> Option<Vec<f64>> {
    let svd = j.clone().svd(false, true);
    let s = &svd.singular_values;
    let smax = s.max();
    let (imin, smin) = s.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    if smax > 0.0 && smin > 1e-5 * smax {
        return None;
    }
    let vt = svd.v_t.as_ref().unwrap();
    Some(vt.row(imin).iter().copied().collect())
}

struct Root {
    t: Vec<f64>,
    h: Vec<f64>,
    point: FiberPoint,
    singular: Option<Vec<f64>>,
}

fn same_root(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = 1.0 + a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
}

fn refine_seeds(red: &Reduced<'_, '_>, seeds: &[(Vec<f64>, Option<Vec<f64>>)], r: &Resolved) -> Result<(Vec<Root>, usize)> {
    let mut roots: Vec<Root> = Vec::new();
    let mut failures = 0;
    for (t0, warm) in seeds {
        match red.newton(t0, warm.as_deref(), 0.1 * r.accept, 60) {
            Ok(Some(out)) => {
                if let Some(existing) = roots.iter_mut().find(|x| same_root(&x.t, &out.t, r.merge)) {
                    if norm(&out.h) < norm(&existing.h) {
                        *existing = Root {
                            t: out.t,
                            h: out.h,
                            point: out.point,
                            singular: out.singular,
                        };
                    }
                } else {
                    roots.push(Root {
                        t: out.t,
                        h: out.h,
                        point: out.point,
                        singular: out.singular,
                    });
                }
            }
            Ok(None) | Err(Error::MaxIterExceeded { .. }) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((roots, failures))
}

/// Seeded solve for any fiber dimension.
pub fn solve_from_seeds(
    d: &IDecomposition,
    f: &LipschitzNonlinearity,
    g: &GridFunction,
    seeds: &[Vec<f64>],
    tols: &Tolerances,
) -> Result<SolutionSet> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no seed points".into()));
    }
    for s in seeds {
        if s.len() != d.fiber_dim() {
            return Err(Error::FiberDimMismatch {
                expected: d.fiber_dim(),
                actual: s.len(),
            });
        }
    }
    let r = tols.resolve(g);
    let fiber = Fiber::new(d, f, g, tols.solver())?;
    let red = Reduced {
        fiber: &fiber,
        offset: vec![0.0; d.fiber_dim()],
    };
    let seeds: Vec<_> = seeds.iter().map(|s| (s.clone(), None)).collect();
    let (roots, failures) = refine_seeds(&red, &seeds, &r)?;
    let mut set = finish_roots(&fiber, roots, Vec::new(), g, &r, &[], "seeds")?;
    set.meta = ScanMetadata {
        failures: set.meta.failures + failures,
        resolution: seeds.len(),
        ..metadata("seeds", &[], &[], seeds.len(), &r, tols)
    };
    Ok(set)
}

fn finish_roots(
    fiber: &Fiber<'_>,
    mut roots: Vec<Root>,
    continua: Vec<Continuum>,
    g_eff: &GridFunction,
    r: &Resolved,
    pad: &[f64],
    _method: &str,
) -> Result<SolutionSet> {
    roots.sort_by(|a, b| {
        a.t.iter()
            .zip(&b.t)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut solutions = Vec::new();
    let mut rejected = 0;
    for root in roots {
        if !pad.is_empty() && continua.iter().any(|c| c.contains(&root.t, pad)) {
            continue;
        }
        let residual = verify(fiber.nonlinearity(), g_eff, &root.point)?;
        if residual <= r.accept {
            solutions.push(Solution {
                u: root.point.u,
                t: root.t,
                residual,
                tangential: root.singular.is_some(),
                bracket: None,
            });
        } else {
            rejected += 1;
        }
    }
    Ok(SolutionSet {
        solutions,
        continua,
        meta: ScanMetadata {
            rejected,
            ..Default::default()
        },
    })
}

/// `t_box` is `[[lo_1, hi_1], [lo_2, hi_2]]`.
pub fn solve_on_fiber_2d(
    d: &IDecomposition,
    f: &LipschitzNonlinearity,
    g: &GridFunction,
    t_box: [[f64; 2]; 2],
    resolution: usize,
    tols: &Tolerances,
) -> Result<SolutionSet> {
    check_dim(d, 2)?;
    let fiber = Fiber::new(d, f, g, tols.solver())?;
    let samples = sample_box(&fiber, t_box, resolution)?;
    enumerate_2d(&fiber, &samples, [0.0, 0.0], g, tols)
}

struct BoxSamples {
    box_: [[f64; 2]; 2],
    res: usize,
    t0: Vec<f64>,
    t1: Vec<f64>,
    /// `points[i * res + j]` sits at `(t0[i], t1[j])`.
    points: Vec<FiberPoint>,
}

fn sample_box(fiber: &Fiber<'_>, t_box: [[f64; 2]; 2], res: usize) -> Result<BoxSamples> {
    if res < 3 || !(t_box[0][0] < t_box[0][1]) || !(t_box[1][0] < t_box[1][1]) {
        return Err(Error::InvalidArgument("t-box needs lo < hi and resolution >= 3".into()));
    }
    let t0 = linspace(t_box[0][0], t_box[0][1], res);
    let t1 = linspace(t_box[1][0], t_box[1][1], res);
    let mut points: Vec<Option<FiberPoint>> = vec![None; res * res];
    let mut warm: Option<Vec<f64>> = None;
    // snake order keeps consecutive samples adjacent for warm starts
    for i in 0..res {
        for jj in 0..res {
            let j = if i % 2 == 0 { jj } else { res - 1 - jj };
            let p = fiber.point(&[t0[i], t1[j]], warm.as_deref())?;
            warm = Some(p.z.clone());
            points[i * res + j] = Some(p);
        }
    }
    Ok(BoxSamples {
        box_: t_box,
        res,
        t0,
        t1,
        points: points.into_iter().map(|p| p.unwrap()).collect(),
    })
}

fn enumerate_2d(fiber: &Fiber<'_>, s: &BoxSamples, offset: [f64; 2], g_eff: &GridFunction, tols: &Tolerances) -> Result<SolutionSet> {
    let r = tols.resolve(g_eff);
    let res = s.res;
    let red = Reduced {
        fiber,
        offset: offset.to_vec(),
    };
    let hs: Vec<[f64; 2]> = s
        .points
        .iter()
        .map(|p| [p.height[0] + offset[0], p.height[1] + offset[1]])
        .collect();
    let mag: Vec<f64> = hs.iter().map(|h| h[0].hypot(h[1])).collect();
    let idx = |i: usize, j: usize| i * res + j;
    let step = [s.t0[1] - s.t0[0], s.t1[1] - s.t1[0]];

    // continua from connected near-zero regions
    let mut low = vec![false; res * res];
    for k in 0..res * res {
        low[k] = mag[k] <= r.degenerate;
    }
    let mut continua = Vec::new();
    let mut seen = vec![false; res * res];
    for start in 0..res * res {
        if !low[start] || seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut members = Vec::new();
        while let Some(k) = stack.pop() {
            members.push(k);
            let (i, j) = (k / res, k % res);
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= res as i64 || nj >= res as i64 {
                        continue;
                    }
                    let nk = idx(ni as usize, nj as usize);
                    if low[nk] && !seen[nk] {
                        seen[nk] = true;
                        stack.push(nk);
                    }
                }
            }
        }
        if members.len() >= 3 {
            let pts: Vec<Vec<f64>> = members.iter().map(|&k| s.points[k].t.clone()).collect();
            let max_h = members.iter().map(|&k| mag[k]).fold(0.0, f64::max);
            continua.push(bounding(&pts, max_h));
        }
    }
    let in_low_region = |k: usize| low[k] && continua.iter().any(|c| c.contains(&s.points[k].t, &[0.0, 0.0]));

    // seeds: sign-change cells and local minima of |H|
    let mut seeds: Vec<(Vec<f64>, Option<Vec<f64>>)> = Vec::new();
    for i in 0..res - 1 {
        for j in 0..res - 1 {
            let corners = [idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1)];
            if corners.iter().any(|&k| in_low_region(k)) {
                continue;
            }
            let changes = |c: usize| {
                let lo = corners.iter().map(|&k| hs[k][c]).fold(f64::INFINITY, f64::min);
                let hi = corners.iter().map(|&k| hs[k][c]).fold(f64::NEG_INFINITY, f64::max);
                lo <= 0.0 && hi >= 0.0
            };
            if changes(0) && changes(1) {
                let best = *corners.iter().min_by(|&&a, &&b| mag[a].total_cmp(&mag[b])).unwrap();
                seeds.push((s.points[best].t.clone(), Some(s.points[best].z.clone())));
            }
        }
    }
    for i in 1..res - 1 {
        for j in 1..res - 1 {
            let k = idx(i, j);
            if in_low_region(k) {
                continue;
            }
            let is_min = (-1i64..=1).all(|di| {
                (-1i64..=1).all(|dj| (di == 0 && dj == 0) || mag[k] < mag[idx((i as i64 + di) as usize, (j as i64 + dj) as usize)])
            });
            if is_min {
                seeds.push((s.points[k].t.clone(), Some(s.points[k].z.clone())));
            }
        }
    }

    let (mut roots, failures) = refine_seeds(&red, &seeds, &r)?;
    let pad = [step[0], step[1]];
    roots.retain(|root| {
        root.t[0] >= s.box_[0][0] - pad[0]
            && root.t[0] <= s.box_[0][1] + pad[0]
            && root.t[1] >= s.box_[1][0] - pad[1]
            && root.t[1] <= s.box_[1][1] + pad[1]
    });

    // follow the null direction from singular roots
    let ds = step[0].hypot(step[1]);
    let mut followed: Vec<Continuum> = Vec::new();
    for root in &roots {
        let Some(dir) = &root.singular else { continue };
        if followed.iter().chain(&continua).any(|c| c.contains(&root.t, &pad)) {
            continue;
        }
        let mut pts = vec![root.t.clone()];
        let mut max_h = norm(&root.h);
        for sign in [1.0, -1.0] {
            let mut cur = root.t.clone();
            let mut dirc: Vec<f64> = dir.iter().map(|x| sign * x).collect();
            let mut warm = root.point.z.clone();
            for _ in 0..4 * res {
                let pred: Vec<f64> = cur.iter().zip(&dirc).map(|(c, d)| c + ds * d).collect();
                if pred[0] < s.box_[0][0] || pred[0] > s.box_[0][1] || pred[1] < s.box_[1][0] || pred[1] > s.box_[1][1] {
                    break;
                }
                let Some(out) = red.newton(&pred, Some(&warm), 0.1 * r.accept, 10)? else { break };
                let moved = out.t.iter().zip(&pred).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                if moved > 0.5 * ds || norm(&out.h) > r.degenerate {
                    break;
                }
                let delta: Vec<f64> = out.t.iter().zip(&cur).map(|(a, b)| a - b).collect();
                let len = norm(&delta);
                if len < 0.25 * ds {
                    break;
                }
                dirc = delta.iter().map(|x| x / len).collect();
                max_h = max_h.max(norm(&out.h));
                warm = out.point.z.clone();
                cur = out.t.clone();
                pts.push(out.t);
            }
        }
        if pts.len() >= 3 {
            followed.push(bounding(&pts, max_h));
        }
    }
    continua.extend(followed);

    let mut set = finish_roots(fiber, roots, continua, g_eff, &r, &pad, "fiber_2d")?;
    let rejected = set.meta.rejected;
    set.meta = ScanMetadata {
        failures,
        rejected,
        ..metadata(
            "fiber_2d",
            &[s.box_[0][0], s.box_[1][0]],
            &[s.box_[0][1], s.box_[1][1]],
            res,
            &r,
            tols,
        )
    };
    Ok(set)
}

fn bounding(pts: &[Vec<f64>], max_abs_height: f64) -> Continuum {
    let k = pts[0].len();
    let mut lo = vec![f64::INFINITY; k];
    let mut hi = vec![f64::NEG_INFINITY; k];
    for p in pts {
        for i in 0..k {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    Continuum {
        t_lo: lo,
        t_hi: hi,
        max_abs_height,
        samples: pts.len(),
    }
}

// ---------------------------------------------------------------------------
// dispatch

/// Scan settings; missing ranges fall back to [`default_t_range`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    #[serde(default)]
    pub t_min: Option<Vec<f64>>,
    #[serde(default)]
    pub t_max: Option<Vec<f64>>,
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default)]
    pub seeds: Vec<Vec<f64>>,
}

impl ScanParams {
    pub fn ranges(&self, d: &IDecomposition, g: &GridFunction) -> (Vec<f64>, Vec<f64>) {
        let k = d.fiber_dim();
        let t = default_t_range(d, g);
        let lo = self.t_min.clone().unwrap_or_else(|| vec![-t; k]);
        let hi = self.t_max.clone().unwrap_or_else(|| vec![t; k]);
        (lo, hi)
    }

    pub fn resolution_for(&self, dim: usize) -> usize {
        self.resolution.unwrap_or(if dim <= 1 { 201 } else { 41 })
    }
}

/// Picks the enumerator matching the fiber dimension.
pub fn solve(d: &IDecomposition, f: &LipschitzNonlinearity, g: &GridFunction, scan: &ScanParams, tols: &Tolerances) -> Result<SolutionSet> {
    let dim = d.fiber_dim();
    if !scan.seeds.is_empty() {
        return solve_from_seeds(d, f, g, &scan.seeds, tols);
    }
    let (lo, hi) = scan.ranges(d, g);
    if lo.len() != dim || hi.len() != dim {
        return Err(Error::FiberDimMismatch {
            expected: dim,
            actual: lo.len().max(hi.len()),
        });
    }
    match dim {
        0 => solve_dim0(d, f, g, tols),
        1 => solve_on_fiber_1d(d, f, g, lo[0], hi[0], scan.resolution_for(1), tols),
        2 => solve_on_fiber_2d(d, f, g, [[lo[0], hi[0]], [lo[1], hi[1]]], scan.resolution_for(2), tols),
        _ => Err(Error::InvalidArgument(format!(
            "fiber dimension {dim} needs explicit seed points"
        ))),
    }
}

// ---------------------------------------------------------------------------
// shift scans

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub s: f64,
    pub count: usize,
    pub continuum: bool,
}

/// Solutions of `F(u) = h0 - s phi_1` for each `s`. Since the ground state is
/// vertical, every right-hand side shares the fiber of `h0`; it is sampled
/// once and only the height offset changes with `s`.
pub fn ap_scan(
    d: &IDecomposition,
    f: &LipschitzNonlinearity,
    h0: &GridFunction,
    s_values: &[f64],
    scan: &ScanParams,
    tols: &Tolerances,
) -> Result<Vec<(ScanPoint, SolutionSet)>> {
    let dim = d.fiber_dim();
    if dim != 1 && dim != 2 {
        return Err(Error::FiberDimMismatch {
            expected: 1,
            actual: dim,
        });
    }
    let q = phi1_vertical(d)?;
    let (_, phi1) = d.basis().eigenpair(1)?;
    let fiber = Fiber::new(d, f, h0, tols.solver())?;
    let (lo, hi) = scan.ranges(d, h0);
    let res = scan.resolution_for(dim);
    let sets: Vec<Result<SolutionSet>> = if dim == 1 {
        if res < 16 {
            return Err(Error::InvalidArgument("at least 16 samples needed".into()));
        }
        let ts: Vec<Vec<f64>> = linspace(lo[0], hi[0], res).into_iter().map(|t| vec![t]).collect();
        let trace = fiber.trace(&ts)?;
        s_values
            .par_iter()
            .map(|&s| {
                let g = h0.add_scaled(-s, &phi1)?;
                enumerate_1d(&fiber, &trace.samples, s * q[0], &g, tols)
            })
            .collect()
    } else {
        let samples = sample_box(&fiber, [[lo[0], hi[0]], [lo[1], hi[1]]], res)?;
        s_values
            .par_iter()
            .map(|&s| {
                let g = h0.add_scaled(-s, &phi1)?;
                enumerate_2d(&fiber, &samples, [s * q[0], s * q[1]], &g, tols)
            })
            .collect()
    };
    s_values
        .iter()
        .zip(sets)
        .map(|(&s, set)| {
            let set = set?;
            Ok((
                ScanPoint {
                    s,
                    count: set.count(),
                    continuum: set.has_continuum(),
                },
                set,
            ))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Newton oracle

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    pub n_starts: usize,
    pub seed: u64,
    pub box_scale: f64,
    /// Number of low sine modes that receive random start coefficients; mode
    /// `k` is drawn from `box_scale * U(-1, 1) / k`.
    pub modes: usize,
    pub max_iter: usize,
    /// Defaults to `1e-8 (1 + ||g||_0)`.
    #[serde(default)]
    pub accept_tol: Option<f64>,
    /// Two converged iterates closer than this in `||.||_0` are the same solution.
    pub dedup_tol: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            n_starts: 200,
            seed: 0,
            box_scale: 10.0,
            modes: 8,
            max_iter: 200,
            accept_tol: None,
            dedup_tol: 1e-6,
        }
    }
}

/// Solves the tridiagonal system `J x = r` by Gaussian elimination with
/// partial pivoting. `sub[i]` is `J[i+1][i]`, `sup[i]` is `J[i][i+1]`.
fn tridiagonal_solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    // row i holds entries at columns i, i+1, i+2 after pivoting
    let mut a = vec![[0.0f64; 3]; n];
    let mut r = rhs.to_vec();
    for i in 0..n {
        a[i][0] = diag[i];
        if i + 1 < n {
            a[i][1] = sup[i];
        }
    }
    let mut below: Vec<f64> = sub.to_vec();
    for i in 0..n {
        if i + 1 < n && below[i].abs() > a[i][0].abs() {
            // swap row i and row i+1 (row i+1 starts at column i)
            let next = [below[i], a[i + 1][0], a[i + 1][1]];
            let cur = a[i];
            a[i] = next;
            below[i] = cur[0];
            a[i + 1] = [cur[1], cur[2], 0.0];
            r.swap(i, i + 1);
        }
        let piv = a[i][0];
        if piv == 0.0 || !piv.is_finite() {
            return None;
        }
        if i + 1 < n {
            let m = below[i] / piv;
            a[i + 1][0] -= m * a[i][1];
            a[i + 1][1] -= m * a[i][2];
            r[i + 1] -= m * r[i];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = r[i];
        if i + 1 < n {
            s -= a[i][1] * x[i + 1];
        }
        if i + 2 < n {
            s -= a[i][2] * x[i + 2];
        }
        x[i] = s / a[i][0];
    }
    Some(x)
}

struct NewtonRun {
    u: Vec<f64>,
    residual: f64,
}

fn oracle_newton(
    f: &LipschitzNonlinearity,
    g: &GridFunction,
    u0: Vec<f64>,
    h: f64,
    weight: f64,
    tight: f64,
    max_iter: usize,
) -> NewtonRun {
    let n = u0.len();
    let inv_h2 = 1.0 / (h * h);
    let residual_vec = |u: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|j| {
                let left = if j > 0 { u[j - 1] } else { 0.0 };
                let right = if j + 1 < n { u[j + 1] } else { 0.0 };
                (2.0 * u[j] - left - right) * inv_h2 - f.eval(u[j]) - g.values()[j]
            })
            .collect()
    };
    let wnorm = |r: &[f64]| (weight * r.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let mut u = u0;
    let mut r = residual_vec(&u);
    let mut rn = wnorm(&r);
    for _ in 0..max_iter {
        if rn <= tight || !rn.is_finite() {
            break;
        }
        let diag: Vec<f64> = u.iter().map(|&x| 2.0 * inv_h2 - f.slope(x)).collect();
        let off = vec![-inv_h2; n - 1];
        let neg: Vec<f64> = r.iter().map(|x| -x).collect();
        let Some(step) = tridiagonal_solve(&off, &diag, &off, &neg) else { break };
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let un: Vec<f64> = u.iter().zip(&step).map(|(a, s)| a + lambda * s).collect();
            let rnew = residual_vec(&un);
            let rnn = wnorm(&rnew);
            if rnn <= (1.0 - 1e-4 * lambda) * rn {
                u = un;
                r = rnew;
                rn = rnn;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    NewtonRun { u, residual: rn }
}

/// Damped Newton from seeded random starts on the full discrete system of a
/// 1D grid. The generalized Jacobian uses the right-hand slope at kinks.
pub fn newton_multistart_oracle(
    basis: &SpectralBasis,
    f: &LipschitzNonlinearity,
    g: &GridFunction,
    params: &OracleParams,
) -> Result<SolutionSet> {
    let line = basis
        .grid()
        .as_line()
        .ok_or_else(|| Error::InvalidArgument("the Newton oracle supports 1D grids only".into()))?;
    if g.grid() != basis.grid() {
        return Err(Error::GridMismatch);
    }
    if params.n_starts == 0 {
        return Err(Error::InvalidArgument("n_starts must be at least 1".into()));
    }
    let n = line.n;
    let h = line.h();
    let gn = g.norm_l2();
    let accept = params.accept_tol.unwrap_or(1e-8 * (1.0 + gn));
    let tight = 1e-13 * (1.0 + gn);
    let modes = params.modes.clamp(1, n);
    let runs: Vec<NewtonRun> = (0..params.n_starts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(i as u64);
            let mut c = vec![0.0; n];
            // decaying amplitudes keep starts smooth, so sign patterns dominated
            // by the low modes (e.g. one-signed starts) are sampled often
            for (k, ck) in c.iter_mut().take(modes).enumerate() {
                *ck = params.box_scale * rng.random_range(-1.0..1.0) / (k + 1) as f64;
            }
            let u0 = basis.inverse(&c);
            oracle_newton(f, g, u0, h, h, tight, params.max_iter)
        })
        .collect();

    let mut solutions: Vec<Solution> = Vec::new();
    let mut failures = 0;
    for run in runs {
        if !(run.residual <= accept) {
            failures += 1;
            continue;
        }
        let u = GridFunction::new(*line, run.u)?;
        // slow convergence near a fold leaves error of order sqrt(residual)
        let radius = |a: f64, b: f64| params.dedup_tol + 100.0 * a.max(b).sqrt();
        if let Some(existing) = solutions
            .iter_mut()
            .find(|s| s.u.sub(&u).map(|d| d.norm_l2()).unwrap_or(f64::INFINITY) <= radius(s.residual, run.residual))
        {
            if run.residual < existing.residual {
                existing.u = u;
                existing.residual = run.residual;
            }
            continue;
        }
        solutions.push(Solution {
            u,
            t: Vec::new(),
            residual: run.residual,
            tangential: false,
            bracket: None,
        });
    }
    // report the exact residual of the kept iterates
    for s in &mut solutions {
        s.residual = apply_operator(f, &s.u).sub(g)?.norm_l2();
    }
    solutions.sort_by(|a, b| a.u.values()[n / 2].total_cmp(&b.u.values()[n / 2]));
    Ok(SolutionSet {
        solutions,
        continua: Vec::new(),
        meta: ScanMetadata {
            method: "newton_oracle".into(),
            resolution: n,
            accept_tol: accept,
            seed: Some(params.seed),
            n_starts: Some(params.n_starts),
            failures,
            ..Default::default()
        },
    })
}

/// Largest relative component of pairwise differences orthogonal to `psi`:
/// zero when all solutions lie on one line parallel to `psi`.
pub fn collinearity_defect(solutions: &[Solution], psi: &GridFunction) -> Result<f64> {
    let pp = psi.inner_l2(psi)?;
    let mut worst: f64 = 0.0;
    for (i, a) in solutions.iter().enumerate() {
        for b in &solutions[i + 1..] {
            let diff = a.u.sub(&b.u)?;
            let dn = diff.norm_l2();
            if dn == 0.0 {
                continue;
            }
            let along = diff.inner_l2(psi)? / pp;
            let perp = diff.add_scaled(-along, psi)?.norm_l2();
            worst = worst.max(perp / dn);
        }
    }
    Ok(worst)
}
