//! Inversion of the horizontal restriction of `F(u) = -Delta u - f(u)` and the
//! fiber / sheet machinery built on it.
//!
//! For vertical `v`, the map `w -> P F(w + v)` on horizontal `w` is inverted
//! through the fixed point `z = z_target + P f~(T^{-1} z + v)`, where
//! `f~(x) = f(x) - gamma x` and `T = -Delta - gamma`. The map on the right is a
//! contraction with constant `c` from the decomposition, so plain Picard
//! iteration converges at a certified rate. All iteration happens in sine
//! coefficient space; node space is entered only to evaluate `f`.

use serde::{Deserialize, Serialize};

use crate::decomp::{axpy, norm, DecompSummary, IDecomposition};
use crate::error::{Error, Result};
use crate::grid::{laplacian_apply, GridFunction};
use crate::nonlin::LipschitzNonlinearity;

/// Stopping rule for the Picard iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub tol: f64,
    /// Defaults to `ceil(log(tol (1 - c)) / log c) + 10`.
    #[serde(default)]
    pub max_iter: Option<usize>,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

impl SolverParams {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, max_iter: None }
    }

    /// Iterations predicted by the contraction rate for an O(1) initial step.
    pub fn predicted_iterations(&self, c: f64) -> usize {
        if c <= 0.0 {
            return 1;
        }
        ((self.tol * (1.0 - c)).ln() / c.ln()).ceil().max(1.0) as usize
    }

    pub fn max_iter_for(&self, c: f64) -> usize {
        self.max_iter.unwrap_or_else(|| self.predicted_iterations(c) + 10)
    }
}

/// `F(u) = -Delta_h u - f(u)`.
pub fn apply_operator(f: &LipschitzNonlinearity, u: &GridFunction) -> GridFunction {
    let mut out = laplacian_apply(u);
    for (o, &x) in out.values_mut().iter_mut().zip(u.values()) {
        *o -= f.eval(x);
    }
    out
}

/// Result of one horizontal inversion.
#[derive(Clone, Debug)]
pub struct Inversion {
    pub w: GridFunction,
    pub w_coeffs: Vec<f64>,
    /// Converged fixed-point variable `z = T w`; pass it back as a warm start.
    pub z: Vec<f64>,
    pub iterations: usize,
    /// `||P F(w + v) - z_target||_0`.
    pub residual: f64,
    /// Largest observed ratio of successive step lengths.
    pub max_rate: f64,
    /// Every step length, in order.
    pub steps: Vec<f64>,
}

/// One point `u = w(v) + v` of the fiber over `P g`.
#[derive(Clone, Debug)]
pub struct FiberPoint {
    pub t: Vec<f64>,
    pub w: GridFunction,
    pub u: GridFunction,
    /// Vertical coordinates of `F(u) - g`.
    pub height: Vec<f64>,
    pub iterations: usize,
    /// `||P (F(u) - g)||_0`.
    pub residual_horizontal: f64,
    pub max_rate: f64,
    pub z: Vec<f64>,
}

impl FiberPoint {
    pub fn height_norm(&self) -> f64 {
        norm(&self.height)
    }

    /// `||F(u) - g||_0` from the split residual.
    pub fn total_residual(&self) -> f64 {
        self.height_norm().hypot(self.residual_horizontal)
    }
}

#[derive(Clone, Debug)]
pub struct FiberTrace {
    pub g: GridFunction,
    pub decomposition: DecompSummary,
    pub params: SolverParams,
    /// Sorted lexicographically by `t`.
    pub samples: Vec<FiberPoint>,
}

impl FiberTrace {
    pub fn total_iterations(&self) -> usize {
        self.samples.iter().map(|s| s.iterations).sum()
    }
}

/// A right-hand side `g` together with everything needed to walk its fiber.
#[derive(Debug)]
pub struct Fiber<'a> {
    d: &'a IDecomposition,
    f: &'a LipschitzNonlinearity,
    f_shift: LipschitzNonlinearity,
    g: GridFunction,
    g_coeffs: Vec<f64>,
    z_target: Vec<f64>,
    params: SolverParams,
}

impl<'a> Fiber<'a> {
    pub fn new(
        d: &'a IDecomposition,
        f: &'a LipschitzNonlinearity,
        g: &GridFunction,
        params: SolverParams,
    ) -> Result<Self> {
        check_band(d, f)?;
        if params.tol <= 0.0 {
            return Err(Error::InvalidArgument(format!("solver tolerance must be positive, got {}", params.tol)));
        }
        let g_coeffs = d.basis().to_coeffs(g)?;
        let mut z_target = g_coeffs.clone();
        d.remove_vertical(&mut z_target);
        Ok(Self {
            d,
            f,
            f_shift: f.shifted(d.gamma()),
            g: g.clone(),
            g_coeffs,
            z_target,
            params,
        })
    }

    pub fn decomposition(&self) -> &IDecomposition {
        self.d
    }

    pub fn nonlinearity(&self) -> &LipschitzNonlinearity {
        self.f
    }

    pub fn g(&self) -> &GridFunction {
        &self.g
    }

    pub fn params(&self) -> SolverParams {
        self.params
    }

    /// Vertical coordinates of `g`.
    pub fn g_vertical(&self) -> Vec<f64> {
        self.d.vertical_coords(&self.g_coeffs)
    }

    /// Fiber point over the vertical coordinates `t`.
    pub fn point(&self, t: &[f64], warm_start: Option<&[f64]>) -> Result<FiberPoint> {
        let dim = self.d.fiber_dim();
        if t.len() != dim {
            return Err(Error::FiberDimMismatch {
                expected: dim,
                actual: t.len(),
            });
        }
        let v = self.d.embed_vertical(t);
        let inv = invert_coeffs(self.d, &self.f_shift, &v, &self.z_target, warm_start, &self.params)?;
        let mut u_c = inv.w_coeffs.clone();
        axpy(1.0, &v, &mut u_c);
        let basis = self.d.basis();
        let u = basis.from_coeffs(&u_c)?;
        let mut diff = operator_coeffs(self.d, self.f, &u_c, u.values());
        axpy(-1.0, &self.g_coeffs, &mut diff);
        let height = self.d.vertical_coords(&diff);
        self.d.remove_vertical(&mut diff);
        Ok(FiberPoint {
            t: t.to_vec(),
            w: inv.w,
            u,
            height,
            iterations: inv.iterations,
            residual_horizontal: norm(&diff),
            max_rate: inv.max_rate,
            z: inv.z,
        })
    }

    /// Walks the fiber through `t_grid`, warm-starting every solve from the
    /// previous sample's fixed-point variable.
    pub fn trace(&self, t_grid: &[Vec<f64>]) -> Result<FiberTrace> {
        self.trace_with(t_grid, true)
    }

    pub fn trace_with(&self, t_grid: &[Vec<f64>], warm: bool) -> Result<FiberTrace> {
        if t_grid.is_empty() {
            return Err(Error::InvalidArgument("empty t-grid".into()));
        }
        let mut samples: Vec<FiberPoint> = Vec::with_capacity(t_grid.len());
        for t in t_grid {
            let ws = if warm { samples.last().map(|p| p.z.as_slice()) } else { None };
            let p = self.point(t, ws)?;
            samples.push(p);
        }
        samples.sort_by(|a, b| {
            a.t.iter()
                .zip(&b.t)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Ok(FiberTrace {
            g: self.g.clone(),
            decomposition: self.d.summary(),
            params: self.params,
            samples,
        })
    }
}

fn check_band(d: &IDecomposition, f: &LipschitzNonlinearity) -> Result<()> {
    let (lo, hi) = f.slope_range();
    // slack for slopes assembled from the band ends, e.g. (a + b)/2 - (b - a)/2
    let slack = 1e-12 * (1.0 + d.a().abs().max(d.b().abs()));
    if lo < d.a() - slack || hi > d.b() + slack {
        return Err(Error::SlopeOutsideBand {
            lo,
            hi,
            a: d.a(),
            b: d.b(),
        });
    }
    Ok(())
}

/// Coefficients of `F(u)` given both representations of `u`.
fn operator_coeffs(d: &IDecomposition, f: &LipschitzNonlinearity, u_c: &[f64], u_nodes: &[f64]) -> Vec<f64> {
    let mut fu = vec![0.0; u_nodes.len()];
    f.compose_slice(u_nodes, &mut fu);
    let fc = d.basis().forward(&fu);
    u_c.iter()
        .zip(d.basis().eigenvalues())
        .zip(&fc)
        .map(|((c, l), fk)| l * c - fk)
        .collect()
}

/// Core Picard iteration on coefficients. `f_shift` is `f - gamma x`.
fn invert_coeffs(
    d: &IDecomposition,
    f_shift: &LipschitzNonlinearity,
    v: &[f64],
    z_target: &[f64],
    warm_start: Option<&[f64]>,
    params: &SolverParams,
) -> Result<Inversion> {
    let basis = d.basis();
    let c = d.c();
    let max_iter = params.max_iter_for(c);
    let scale = 1.0 + norm(z_target) + norm(v);
    let threshold = params.tol * scale * (1.0 - c) / c;
    // Steps this small are dominated by transform round-off; their ratios say nothing.
    let rate_floor = 1e-12 * scale;

    let mut constant = z_target.to_vec();
    if let Some(ptv) = d.horizontal_part_of_tv(v) {
        axpy(-1.0, &ptv, &mut constant);
    }

    let mut z = match warm_start {
        Some(ws) if ws.len() == z_target.len() => {
            let mut z = ws.to_vec();
            d.remove_vertical(&mut z);
            z
        }
        _ => z_target.to_vec(),
    };

    let mut u_nodes = vec![0.0; basis.len()];
    let mut steps = Vec::new();
    let mut max_rate: f64 = 0.0;
    let mut prev_step = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let w = d.solve_horizontal(&z);
        let mut u_c = w.clone();
        axpy(1.0, v, &mut u_c);
        let nodes = basis.inverse(&u_c);
        f_shift.compose_slice(&nodes, &mut u_nodes);
        let mut next = basis.forward(&u_nodes);
        d.remove_vertical(&mut next);
        axpy(1.0, &constant, &mut next);
        if let Some(defect) = d.vertical_defect(&w) {
            axpy(-1.0, &defect, &mut next);
        }
        let step = next.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if prev_step.is_finite() && prev_step > rate_floor && step > rate_floor {
            max_rate = max_rate.max(step / prev_step);
        }
        steps.push(step);
        prev_step = step;
        z = next;
        if step <= threshold {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::MaxIterExceeded {
            iterations,
            last_step: prev_step,
        });
    }

    let w_coeffs = d.solve_horizontal(&z);
    let mut u_c = w_coeffs.clone();
    axpy(1.0, v, &mut u_c);
    let nodes = basis.inverse(&u_c);
    let f = f_shift.shifted(-d.gamma());
    let mut residual_vec = operator_coeffs(d, &f, &u_c, &nodes);
    d.remove_vertical(&mut residual_vec);
    axpy(-1.0, z_target, &mut residual_vec);
    Ok(Inversion {
        w: basis.from_coeffs(&w_coeffs)?,
        w_coeffs,
        z,
        iterations,
        residual: norm(&residual_vec),
        max_rate,
        steps,
    })
}

fn ensure_vertical(d: &IDecomposition, v: &GridFunction) -> Result<Vec<f64>> {
    let c = d.basis().to_coeffs(v)?;
    let t = d.vertical_coords(&c);
    let mut rest = c;
    d.remove_vertical(&mut rest);
    if norm(&rest) > 1e-10 * (1.0 + v.norm_l2()) {
        return Err(Error::InvalidArgument("v does not lie in the vertical space".into()));
    }
    Ok(t)
}

/// Solves `P F(w + v) = P z_target` for horizontal `w`.
pub fn invert_fv(
    d: &IDecomposition,
    f: &LipschitzNonlinearity,
    v: &GridFunction,
    z_target: &GridFunction,
    warm_start: Option<&[f64]>,
    params: &SolverParams,
) -> Result<Inversion> {
    check_band(d, f)?;
    let t = ensure_vertical(d, v)?;
    let v_c = d.embed_vertical(&t);
    let mut z = d.basis().to_coeffs(z_target)?;
    d.remove_vertical(&mut z);
    invert_coeffs(d, &f.shifted(d.gamma()), &v_c, &z, warm_start, params)
}

pub fn fiber_point(
    d: &IDecomposition,
    f: &LipschitzNonlinearity,
    g: &GridFunction,
    t: &[f64],
    warm_start: Option<&[f64]>,
    params: &SolverParams,
) -> Result<FiberPoint> {
    Fiber::new(d, f, g, *params)?.point(t, warm_start)
}

pub fn trace_fiber(
    d: &IDecomposition,
    f: &LipschitzNonlinearity,
    g: &GridFunction,
    t_grid: &[Vec<f64>],
    params: &SolverParams,
) -> Result<FiberTrace> {
    Fiber::new(d, f, g, *params)?.trace(t_grid)
}

/// Vertical coordinates of `F(u) - g` at the fiber point over `t`; zero iff `F(u) = g` there.
pub fn height_map(
    d: &IDecomposition,
    f: &LipschitzNonlinearity,
    g: &GridFunction,
    t: &[f64],
    params: &SolverParams,
) -> Result<Vec<f64>> {
    Ok(fiber_point(d, f, g, t, None, params)?.height)
}

/// Samples the sheet `F(v + W)` as the graph `z -> sigma_v(z)`, returned as
/// vertical coordinate vectors.
pub fn sheet_sample(
    d: &IDecomposition,
    f: &LipschitzNonlinearity,
    t: &[f64],
    z_grid: &[GridFunction],
    params: &SolverParams,
) -> Result<Vec<(GridFunction, Vec<f64>)>> {
    check_band(d, f)?;
    if t.len() != d.fiber_dim() {
        return Err(Error::FiberDimMismatch {
            expected: d.fiber_dim(),
            actual: t.len(),
        });
    }
    let v = d.embed_vertical(t);
    let f_shift = f.shifted(d.gamma());
    let mut warm: Option<Vec<f64>> = None;
    let mut out = Vec::with_capacity(z_grid.len());
    for zg in z_grid {
        let mut z = d.basis().to_coeffs(zg)?;
        d.remove_vertical(&mut z);
        let inv = invert_coeffs(d, &f_shift, &v, &z, warm.as_deref(), params)?;
        let mut u_c = inv.w_coeffs.clone();
        axpy(1.0, &v, &mut u_c);
        let nodes = d.basis().inverse(&u_c);
        let fc = operator_coeffs(d, f, &u_c, &nodes);
        out.push((d.basis().from_coeffs(&z)?, d.vertical_coords(&fc)));
        warm = Some(inv.z);
    }
    Ok(out)
}

/// The change of variables `Phi(z + v) = F_v^{-1}(z) + v`.
pub fn phi_inverse_point(
    d: &IDecomposition,
    f: &LipschitzNonlinearity,
    z: &GridFunction,
    t: &[f64],
    params: &SolverParams,
) -> Result<GridFunction> {
    check_band(d, f)?;
    if t.len() != d.fiber_dim() {
        return Err(Error::FiberDimMismatch {
            expected: d.fiber_dim(),
            actual: t.len(),
        });
    }
    let v = d.embed_vertical(t);
    let mut zc = d.basis().to_coeffs(z)?;
    d.remove_vertical(&mut zc);
    let inv = invert_coeffs(d, &f.shifted(d.gamma()), &v, &zc, None, params)?;
    let mut u_c = inv.w_coeffs;
    axpy(1.0, &v, &mut u_c);
    d.basis().from_coeffs(&u_c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Interval1D, SpectralBasis};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize, a: f64, b: f64) -> IDecomposition {
        IDecomposition::build(SpectralBasis::shared(Interval1D::unit_pi(n).unwrap()), a, b, None).unwrap()
    }

    fn random_smooth(d: &IDecomposition, seed: u64, amp: f64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..d.basis().len())
            .map(|k| amp * rng.random_range(-1.0..1.0) / (1.0 + k as f64).powi(2))
            .collect();
        d.basis().from_coeffs(&c).unwrap()
    }

    #[test]
    fn operator_linear_cases() {
        let d = setup(50, 0.5, 2.0);
        let (l1, phi1) = d.basis().eigenpair(1).unwrap();
        let zero = LipschitzNonlinearity::linear(0.0, 0.0).unwrap();
        let u = random_smooth(&d, 1, 1.0);
        assert_eq!(apply_operator(&zero, &u), laplacian_apply(&u));
        let s = 0.7;
        let lin = LipschitzNonlinearity::linear(s, 0.3).unwrap();
        let fu = apply_operator(&lin, &phi1);
        let expect = phi1.scaled(l1 - s).map(|x| x - 0.3);
        assert!(fu.sub(&expect).unwrap().norm_l2() < 1e-12);
    }

    #[test]
    fn linear_gamma_slope_inverts_in_one_step() {
        let d = setup(60, 0.5, 2.0);
        let f = LipschitzNonlinearity::linear(d.gamma(), 0.0).unwrap();
        let z = d.project_horizontal(&random_smooth(&d, 2, 3.0)).unwrap();
        let v = d.basis().eigenpair(1).unwrap().1.scaled(1.7);
        let inv = invert_fv(&d, &f, &v, &z, None, &SolverParams::default()).unwrap();
        assert_eq!(inv.iterations, 1);
        let expect = d.apply_t_inverse(&z).unwrap();
        assert!(inv.w.sub(&expect).unwrap().norm_l2() < 1e-13);
    }

    #[test]
    fn inversion_meets_postcondition_and_rate() {
        let d = setup(99, 0.5, 5.0);
        let f = LipschitzNonlinearity::smooth_slope(2.75, 2.2, 0.4, 0.3).unwrap();
        let params = SolverParams::with_tol(1e-11);
        for seed in 0..5 {
            let z = d.project_horizontal(&random_smooth(&d, seed, 4.0)).unwrap();
            let v = d.project_vertical(&random_smooth(&d, seed + 100, 3.0)).unwrap();
            let inv = invert_fv(&d, &f, &v, &z, None, &params).unwrap();
            let scale = 1.0 + z.norm_l2() + v.norm_l2();
            assert!(inv.residual <= params.tol * scale, "residual {}", inv.residual);
            assert!(inv.max_rate <= d.c() + 0.01, "rate {} vs c {}", inv.max_rate, d.c());
            // independent residual check in node space
            let u = inv.w.add(&v).unwrap();
            let r = d.project_horizontal(&apply_operator(&f, &u)).unwrap().sub(&z).unwrap();
            assert!(r.norm_l2() <= 10.0 * params.tol * scale);
        }
    }

    #[test]
    fn inversion_rejects_non_vertical_v_and_wide_slopes() {
        let d = setup(40, 0.5, 2.0);
        let f = LipschitzNonlinearity::linear(1.0, 0.0).unwrap();
        let g = GridFunction::zeros(*d.grid());
        let (_, phi3) = d.basis().eigenpair(3).unwrap();
        assert!(invert_fv(&d, &f, &phi3, &g, None, &SolverParams::default()).is_err());
        let steep = LipschitzNonlinearity::linear(2.5, 0.0).unwrap();
        assert!(matches!(
            Fiber::new(&d, &steep, &g, SolverParams::default()),
            Err(Error::SlopeOutsideBand { .. })
        ));
    }

    #[test]
    fn max_iter_is_reported() {
        let d = setup(40, 0.5, 2.0);
        let f = LipschitzNonlinearity::smooth_slope(1.25, 0.7, 0.0, 0.0).unwrap();
        let g = random_smooth(&d, 3, 5.0);
        let params = SolverParams {
            tol: 1e-12,
            max_iter: Some(2),
        };
        assert!(matches!(
            fiber_point(&d, &f, &g, &[1.0], None, &params),
            Err(Error::MaxIterExceeded { iterations: 2, .. })
        ));
    }

    #[test]
    fn known_solution_lies_on_its_own_fiber() {
        let d = setup(99, 0.5, 2.0);
        let f = LipschitzNonlinearity::smooth_slope(1.25, 0.7, 0.2, -0.1).unwrap();
        let u_star = random_smooth(&d, 7, 2.0);
        let g = apply_operator(&f, &u_star);
        let t = d.vertical_coords(&d.basis().to_coeffs(&u_star).unwrap());
        let p = fiber_point(&d, &f, &g, &t, None, &SolverParams::with_tol(1e-12)).unwrap();
        assert!(p.height_norm() < 1e-8, "{:?}", p.height);
        let pu = d.project_horizontal(&u_star).unwrap();
        assert!(p.w.sub(&pu).unwrap().norm_l2() < 1e-9);
    }

    #[test]
    fn zero_rhs_zero_point() {
        let d = setup(30, 0.5, 2.0);
        let f = LipschitzNonlinearity::smooth_slope(1.25, 0.7, 0.0, 0.0).unwrap();
        let g = GridFunction::zeros(*d.grid());
        let p = fiber_point(&d, &f, &g, &[0.0], None, &SolverParams::default()).unwrap();
        assert!(p.w.norm_l2() < 1e-14);
        assert!(p.height[0].abs() < 1e-14);
    }

    #[test]
    fn dimension_zero_solves_outright() {
        let d = setup(80, 2.0, 3.0);
        let f = LipschitzNonlinearity::smooth_slope(2.5, 0.4, 0.0, 0.2).unwrap();
        let g = random_smooth(&d, 9, 3.0);
        let p = fiber_point(&d, &f, &g, &[], None, &SolverParams::with_tol(1e-12)).unwrap();
        assert!(p.height.is_empty());
        let r = apply_operator(&f, &p.u).sub(&g).unwrap().norm_l2();
        assert!(r < 1e-9, "{r}");
        assert!(matches!(
            fiber_point(&d, &f, &g, &[1.0], None, &SolverParams::default()),
            Err(Error::FiberDimMismatch { .. })
        ));
    }

    #[test]
    fn linear_trace_is_affine_and_sheet_flat() {
        let d = setup(70, 0.5, 2.0);
        let f = LipschitzNonlinearity::linear(d.gamma(), 0.0).unwrap();
        let g = random_smooth(&d, 4, 2.0);
        let ts: Vec<Vec<f64>> = (0..7).map(|i| vec![-3.0 + i as f64]).collect();
        let tr = trace_fiber(&d, &f, &g, &ts, &SolverParams::default()).unwrap();
        for win in tr.samples.windows(3) {
            let second = win[0].w.add(&win[2].w).unwrap().add_scaled(-2.0, &win[1].w).unwrap();
            assert!(second.norm_l2() < 1e-10);
        }
        let zs: Vec<GridFunction> = (0..4).map(|s| random_smooth(&d, 20 + s, 3.0)).collect();
        let sheet = sheet_sample(&d, &f, &[0.8], &zs, &SolverParams::default()).unwrap();
        for (_, s) in &sheet {
            assert!((s[0] - sheet[0].1[0]).abs() < 1e-10);
        }
        let z = d.project_horizontal(&zs[0]).unwrap();
        let u = phi_inverse_point(&d, &f, &z, &[0.8], &SolverParams::default()).unwrap();
        let v = d.basis().eigenpair(1).unwrap().1.scaled(0.8);
        let expect = d.apply_t_inverse(&z).unwrap().add(&v).unwrap();
        assert!(u.sub(&expect).unwrap().norm_l2() < 1e-12);
    }

    #[test]
    fn warm_starts_reduce_work() {
        let d = setup(99, 0.5, 2.0);
        let f = LipschitzNonlinearity::smooth_slope(1.25, 0.74, 0.0, 0.0).unwrap();
        let g = random_smooth(&d, 5, 3.0);
        let fiber = Fiber::new(&d, &f, &g, SolverParams::with_tol(1e-11)).unwrap();
        let ts: Vec<Vec<f64>> = (0..40).map(|i| vec![-4.0 + 0.2 * i as f64]).collect();
        let warm = fiber.trace_with(&ts, true).unwrap().total_iterations();
        let cold = fiber.trace_with(&ts, false).unwrap().total_iterations();
        assert!(warm < cold, "warm {warm} cold {cold}");
    }

    #[test]
    fn sheet_roundtrip() {
        let d = setup(64, 0.5, 2.0);
        let f = LipschitzNonlinearity::smooth_slope(1.25, 0.7, -0.3, 0.5).unwrap();
        let w = d.project_horizontal(&random_smooth(&d, 11, 2.0)).unwrap();
        let t = [1.3];
        let v = d.basis().from_coeffs(&d.embed_vertical(&t)).unwrap();
        let fu = apply_operator(&f, &w.add(&v).unwrap());
        let z = d.project_horizontal(&fu).unwrap();
        let sheet = sheet_sample(&d, &f, &t, &[z], &SolverParams::with_tol(1e-12)).unwrap();
        let expect = d.vertical_coords(&d.basis().to_coeffs(&fu).unwrap());
        assert!((sheet[0].1[0] - expect[0]).abs() < 1e-9);
    }

    #[test]
    fn graph_property_independent_of_warm_start() {
        let d = setup(99, 0.5, 5.0);
        let f = LipschitzNonlinearity::smooth_slope(2.75, 2.0, 0.0, 0.0).unwrap();
        let g = random_smooth(&d, 12, 3.0);
        let fiber = Fiber::new(&d, &f, &g, SolverParams::with_tol(1e-12)).unwrap();
        let reference = fiber.point(&[0.4, -0.9], None).unwrap();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ws: Vec<f64> = (0..99).map(|_| rng.random_range(-10.0..10.0)).collect();
            let p = fiber.point(&[0.4, -0.9], Some(&ws)).unwrap();
            assert!(p.w.sub(&reference.w).unwrap().norm_l2() < 1e-9);
        }
    }
}
