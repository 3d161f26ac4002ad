//! The splitting `X = W + V`, `Y = W + V` induced by a slope band `(a, b)`.
//!
//! `V` is spanned by the eigenvectors whose discrete eigenvalues lie inside the
//! band and `W` is its orthogonal complement. Both the L2 and the H2-type inner
//! products are diagonal in the sine basis, so one pair of projectors serves
//! domain and codomain. All work happens in coefficient space.
//!
//! A decomposition can also carry a rotated vertical space (see
//! [`IDecomposition::perturb_vertical`]) to model approximate eigenvectors. The
//! horizontal operator is then `A = P T' P` on the rotated `W`, where `T'`
//! equals `T = -Delta - gamma` off the band, and is inverted by a bordered solve.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, SpectralBasis};

/// JSON summary consumed by the CLI `info` command and written next to solve runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompSummary {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    /// 1-based eigen-indices spanning the vertical space.
    pub indices: Vec<usize>,
    pub lambda: Vec<f64>,
    pub c: f64,
    pub fiber_dim: usize,
    pub lambda_m_dist: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
enum Splitting {
    Exact,
    Rotated(Box<Rotated>),
}

#[derive(Clone, Debug)]
struct Rotated {
    eps: f64,
    /// Orthonormal coefficient vectors spanning the rotated vertical space.
    vertical: Vec<Vec<f64>>,
    /// `D^{-1} q_i`.
    dinv_q: Vec<Vec<f64>>,
    /// Inverse of the border matrix `Q^T D^{-1} Q`.
    border_inv: DMatrix<f64>,
    /// Vertical diagonal entries of `T - T'`.
    vertical_defect: Vec<f64>,
    /// Sine of the largest principal angle to the exact vertical space.
    sin_max: f64,
    inverse_norm: f64,
}

#[derive(Clone, Debug)]
pub struct IDecomposition {
    basis: Arc<SpectralBasis>,
    a: f64,
    b: f64,
    gamma: f64,
    gap_tol: f64,
    /// 0-based mode slots inside the band.
    slots: Vec<usize>,
    lambda_m_dist: f64,
    c: f64,
    /// Diagonal of `T'`: `lambda_k - gamma` off the band, `+-lambda_m_dist` on it.
    t_diag: Vec<f64>,
    splitting: Splitting,
    warnings: Vec<String>,
}

impl IDecomposition {
    /// Builds the decomposition for the band `(a, b)`; `gap_tol` defaults to `1e-6 (b - a)`.
    pub fn build(basis: Arc<SpectralBasis>, a: f64, b: f64, gap_tol: Option<f64>) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidBand { a, b });
        }
        let gap_tol = gap_tol.unwrap_or(1e-6 * (b - a));
        let lam = basis.eigenvalues();
        for (slot, &l) in lam.iter().enumerate() {
            for endpoint in [a, b] {
                if (l - endpoint).abs() <= gap_tol {
                    return Err(Error::EigenvalueOnBoundary {
                        index: slot + 1,
                        lambda: l,
                        endpoint,
                        gap_tol,
                    });
                }
            }
        }
        let gamma = 0.5 * (a + b);
        let slots: Vec<usize> = (0..lam.len()).filter(|&k| lam[k] > a && lam[k] < b).collect();
        let lambda_m_dist = (0..lam.len())
            .filter(|k| !slots.contains(k))
            .map(|k| (lam[k] - gamma).abs())
            .fold(f64::INFINITY, f64::min);
        if !lambda_m_dist.is_finite() {
            return Err(Error::InvalidArgument(
                "band contains every discrete eigenvalue; refine the grid".into(),
            ));
        }
        let c = (b - gamma) / lambda_m_dist;
        let t_diag = lam
            .iter()
            .enumerate()
            .map(|(k, &l)| {
                if slots.contains(&k) {
                    if l >= gamma {
                        lambda_m_dist
                    } else {
                        -lambda_m_dist
                    }
                } else {
                    l - gamma
                }
            })
            .collect();
        let warnings = classification_warnings(&basis, a, b);
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(Self {
            basis,
            a,
            b,
            gamma,
            gap_tol,
            slots,
            lambda_m_dist,
            c,
            t_diag,
            splitting: Splitting::Exact,
            warnings,
        })
    }

    pub fn basis(&self) -> &Arc<SpectralBasis> {
        &self.basis
    }

    pub fn grid(&self) -> &Grid {
        self.basis.grid()
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gap_tol(&self) -> f64 {
        self.gap_tol
    }

    /// Contraction constant of the horizontal fixed-point map.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// `min |lambda_k - gamma|` over eigenvalues outside the band.
    pub fn lambda_m_dist(&self) -> f64 {
        self.lambda_m_dist
    }

    pub fn fiber_dim(&self) -> usize {
        self.slots.len()
    }

    /// 1-based eigen-indices of the vertical space.
    pub fn indices(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s + 1).collect()
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn perturbation(&self) -> Option<f64> {
        match &self.splitting {
            Splitting::Exact => None,
            Splitting::Rotated(r) => Some(r.eps),
        }
    }

    pub fn summary(&self) -> DecompSummary {
        DecompSummary {
            a: self.a,
            b: self.b,
            gamma: self.gamma,
            indices: self.indices(),
            lambda: self.slots.iter().map(|&s| self.basis.eigenvalues()[s]).collect(),
            c: self.c,
            fiber_dim: self.fiber_dim(),
            lambda_m_dist: self.lambda_m_dist,
            perturbation: self.perturbation(),
            warnings: self.warnings.clone(),
        }
    }

    /// Coefficient vector of the i-th vertical basis function.
    pub fn vertical_vector(&self, i: usize) -> Vec<f64> {
        match &self.splitting {
            Splitting::Exact => {
                let mut e = vec![0.0; self.basis.len()];
                e[self.slots[i]] = 1.0;
                e
            }
            Splitting::Rotated(r) => r.vertical[i].clone(),
        }
    }

    /// Coordinates `t_i = <q_i, c>` of the vertical part of a coefficient vector.
    pub fn vertical_coords(&self, c: &[f64]) -> Vec<f64> {
        match &self.splitting {
            Splitting::Exact => self.slots.iter().map(|&s| c[s]).collect(),
            Splitting::Rotated(r) => r.vertical.iter().map(|q| dot(q, c)).collect(),
        }
    }

    /// `sum_i t_i q_i` as a coefficient vector.
    pub fn embed_vertical(&self, t: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.basis.len()];
        match &self.splitting {
            Splitting::Exact => {
                for (&s, &ti) in self.slots.iter().zip(t) {
                    out[s] = ti;
                }
            }
            Splitting::Rotated(r) => {
                for (q, &ti) in r.vertical.iter().zip(t) {
                    axpy(ti, q, &mut out);
                }
            }
        }
        out
    }

    /// In-place horizontal projection `c <- P c`.
    pub fn remove_vertical(&self, c: &mut [f64]) {
        match &self.splitting {
            Splitting::Exact => {
                for &s in &self.slots {
                    c[s] = 0.0;
                }
            }
            Splitting::Rotated(r) => {
                for q in &r.vertical {
                    let d = dot(q, c);
                    axpy(-d, q, c);
                }
            }
        }
    }

    /// `Q u`.
    pub fn project_vertical(&self, u: &GridFunction) -> Result<GridFunction> {
        let c = self.basis.to_coeffs(u)?;
        self.basis.from_coeffs(&self.embed_vertical(&self.vertical_coords(&c)))
    }

    /// `P u`.
    pub fn project_horizontal(&self, u: &GridFunction) -> Result<GridFunction> {
        let mut c = self.basis.to_coeffs(u)?;
        self.remove_vertical(&mut c);
        self.basis.from_coeffs(&c)
    }

    /// Horizontal operator on coefficients (input is projected first).
    pub fn apply_t_coeffs(&self, w: &[f64]) -> Vec<f64> {
        let mut w = w.to_vec();
        self.remove_vertical(&mut w);
        let mut out: Vec<f64> = w.iter().zip(&self.t_diag).map(|(x, d)| x * d).collect();
        self.remove_vertical(&mut out);
        out
    }

    /// Inverse of the horizontal operator on coefficients (input is projected first).
    pub fn apply_t_inverse_coeffs(&self, z: &[f64]) -> Vec<f64> {
        let mut r = z.to_vec();
        self.remove_vertical(&mut r);
        self.solve_horizontal(&r)
    }

    /// `T = -Delta - gamma` restricted to `W`.
    pub fn apply_t(&self, w: &GridFunction) -> Result<GridFunction> {
        let c = self.basis.to_coeffs(w)?;
        self.basis.from_coeffs(&self.apply_t_coeffs(&c))
    }

    pub fn apply_t_inverse(&self, z: &GridFunction) -> Result<GridFunction> {
        let c = self.basis.to_coeffs(z)?;
        self.basis.from_coeffs(&self.apply_t_inverse_coeffs(&c))
    }

    /// Solves `A w = r` for `r` already in `W`.
    pub(crate) fn solve_horizontal(&self, r: &[f64]) -> Vec<f64> {
        let mut w: Vec<f64> = r.iter().zip(&self.t_diag).map(|(x, d)| x / d).collect();
        match &self.splitting {
            Splitting::Exact => {
                for &s in &self.slots {
                    w[s] = 0.0;
                }
            }
            Splitting::Rotated(rot) => {
                let rhs = DVector::from_iterator(rot.vertical.len(), rot.vertical.iter().map(|q| dot(q, &w)));
                let mu = &rot.border_inv * rhs;
                for (dq, m) in rot.dinv_q.iter().zip(mu.iter()) {
                    axpy(-m, dq, &mut w);
                }
            }
        }
        w
    }

    /// `P T v` for vertical `v` (zero for the exact splitting).
    pub(crate) fn horizontal_part_of_tv(&self, v: &[f64]) -> Option<Vec<f64>> {
        match &self.splitting {
            Splitting::Exact => None,
            Splitting::Rotated(_) => {
                let mut out: Vec<f64> = v
                    .iter()
                    .zip(self.basis.eigenvalues())
                    .map(|(x, l)| x * (l - self.gamma))
                    .collect();
                self.remove_vertical(&mut out);
                Some(out)
            }
        }
    }

    /// `P (T - T') w` for horizontal `w` (zero for the exact splitting).
    pub(crate) fn vertical_defect(&self, w: &[f64]) -> Option<Vec<f64>> {
        match &self.splitting {
            Splitting::Exact => None,
            Splitting::Rotated(rot) => {
                let mut out = vec![0.0; w.len()];
                for (&s, &d) in self.slots.iter().zip(&rot.vertical_defect) {
                    out[s] = d * w[s];
                }
                self.remove_vertical(&mut out);
                Some(out)
            }
        }
    }

    /// Same band, vertical space spanned by `phi_k + eps r_k` (orthonormalized),
    /// with `r_k` seeded random unit vectors orthogonal to the exact `V`.
    ///
    /// The perturbation directions have coefficients decaying like `1/j`, which
    /// mimics the smooth error of approximate eigenfunctions. The returned
    /// decomposition's `c` is an estimate of the contraction constant for the
    /// rotated splitting.
    pub fn perturb_vertical(&self, eps: f64, seed: u64) -> Result<Self> {
        if !(0.0..0.1).contains(&eps) {
            return Err(Error::InvalidArgument(format!("perturbation must lie in [0, 0.1), got {eps}")));
        }
        let mut exact = self.clone();
        exact.splitting = Splitting::Exact;
        exact.c = (self.b - self.gamma) / self.lambda_m_dist;
        if eps == 0.0 || self.slots.is_empty() {
            return Ok(exact);
        }
        let n = self.basis.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vertical: Vec<Vec<f64>> = Vec::with_capacity(self.slots.len());
        for &s in &self.slots {
            let mut r: Vec<f64> = (0..n)
                .map(|j| {
                    if self.slots.contains(&j) {
                        0.0
                    } else {
                        rng.random_range(-1.0..1.0) / (j + 1) as f64
                    }
                })
                .collect();
            let rn = norm(&r);
            r.iter_mut().for_each(|x| *x /= rn);
            let mut q: Vec<f64> = r.iter().map(|x| eps * x).collect();
            q[s] += 1.0;
            for prev in &vertical {
                let d = dot(prev, &q);
                axpy(-d, prev, &mut q);
            }
            let qn = norm(&q);
            q.iter_mut().for_each(|x| *x /= qn);
            vertical.push(q);
        }
        let dinv_q: Vec<Vec<f64>> = vertical
            .iter()
            .map(|q| q.iter().zip(&self.t_diag).map(|(x, d)| x / d).collect())
            .collect();
        let k = vertical.len();
        let border = DMatrix::from_fn(k, k, |i, j| dot(&vertical[i], &dinv_q[j]));
        let border_inv = border
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("singular border matrix in perturbed splitting".into()))?;
        let vertical_defect: Vec<f64> = self
            .slots
            .iter()
            .map(|&s| self.basis.eigenvalues()[s] - self.gamma - self.t_diag[s])
            .collect();
        let overlap = DMatrix::from_fn(k, k, |i, j| vertical[i][self.slots[j]]);
        let cos_min = overlap
            .singular_values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
            .min(1.0);
        let sin_max = (1.0 - cos_min * cos_min).max(0.0).sqrt();

        let mut out = exact;
        out.splitting = Splitting::Rotated(Box::new(Rotated {
            eps,
            vertical,
            dinv_q,
            border_inv,
            vertical_defect,
            sin_max,
            inverse_norm: 0.0,
        }));
        let inverse_norm = out.estimate_inverse_norm(seed);
        let defect = out.rotated().vertical_defect.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        out.c = ((self.b - self.gamma) + defect * sin_max * sin_max) * inverse_norm;
        if let Splitting::Rotated(r) = &mut out.splitting {
            r.inverse_norm = inverse_norm;
        }
        if out.c >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "perturbation {eps} destroys the contraction (estimated c = {})",
                out.c
            )));
        }
        Ok(out)
    }

    fn rotated(&self) -> &Rotated {
        match &self.splitting {
            Splitting::Rotated(r) => r,
            Splitting::Exact => unreachable!("exact splitting"),
        }
    }

    /// Power iteration for the norm of the horizontal inverse.
    fn estimate_inverse_norm(&self, seed: u64) -> f64 {
        let n = self.basis.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        self.remove_vertical(&mut x);
        let mut est = 0.0;
        for _ in 0..2000 {
            let xn = norm(&x);
            x.iter_mut().for_each(|v| *v /= xn);
            let mut y = self.solve_horizontal(&x);
            self.remove_vertical(&mut y);
            let next = norm(&y);
            let done = (next - est).abs() <= 1e-12 * next;
            est = next;
            x = y;
            if done {
                break;
            }
        }
        est * (1.0 + 1e-9)
    }

    /// Largest principal angle between this vertical space and the exact one.
    pub fn max_principal_angle(&self) -> f64 {
        match &self.splitting {
            Splitting::Exact => 0.0,
            Splitting::Rotated(r) => r.sin_max.asin(),
        }
    }

    /// Norm of the horizontal inverse (`1/lambda_m_dist` for the exact splitting).
    pub fn inverse_norm(&self) -> f64 {
        match &self.splitting {
            Splitting::Exact => 1.0 / self.lambda_m_dist,
            Splitting::Rotated(r) => r.inverse_norm,
        }
    }
}

fn classification_warnings(basis: &SpectralBasis, a: f64, b: f64) -> Vec<String> {
    let inside = |l: f64| l > a && l < b;
    let mut out = Vec::new();
    for (slot, &l) in basis.eigenvalues().iter().enumerate() {
        let cont = basis.continuum_eigenvalue(slot);
        if l > b && cont > b {
            // discrete eigenvalues sit below their continuum limits
            break;
        }
        if inside(l) != inside(cont) {
            let needed = resolving_n(basis, slot, a, b);
            out.push(format!(
                "eigen-index {}: discrete lambda {l:.6} and continuum lambda {cont:.6} disagree on band ({a}, {b}); {}",
                slot + 1,
                match needed {
                    Some(n) => format!("about n = {n} nodes per axis resolve it"),
                    None => "no resolving refinement found".to_string(),
                }
            ));
        }
    }
    out
}

fn resolving_n(basis: &SpectralBasis, slot: usize, a: f64, b: f64) -> Option<usize> {
    let inside = |l: f64| l > a && l < b;
    let cont = inside(basis.continuum_eigenvalue(slot));
    let (i, j) = basis.mode(slot);
    let mut factor = 2usize;
    while factor <= 1 << 16 {
        let lam = match basis.grid() {
            Grid::Line(g) => {
                let g2 = crate::grid::Interval1D { n: (g.n + 1) * factor - 1, ..*g };
                g2.discrete_eigenvalue(i)
            }
            Grid::Rect(r) => {
                let gx = crate::grid::Interval1D { n: (r.x.n + 1) * factor - 1, ..r.x };
                let gy = crate::grid::Interval1D { n: (r.y.n + 1) * factor - 1, ..r.y };
                gx.discrete_eigenvalue(i) + gy.discrete_eigenvalue(j)
            }
        };
        if inside(lam) == cont {
            let n = match basis.grid() {
                Grid::Line(g) => (g.n + 1) * factor - 1,
                Grid::Rect(r) => (r.x.n.max(r.y.n) + 1) * factor - 1,
            };
            return Some(n);
        }
        factor *= 2;
    }
    None
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}
