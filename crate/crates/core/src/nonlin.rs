//! Scalar Lipschitz nonlinearities with certified slope range `[a, b]`.
//!
//! A nonlinearity is stored by its slopes, never as a closure, so the band
//! `[a, b]` used by the decomposition is exact rather than estimated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Serialized form used in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum NonlinSpec {
    #[serde(rename = "pwl")]
    PiecewiseLinear {
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        #[serde(default)]
        f0: f64,
        /// Optional wider certified slope bounds.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<[f64; 2]>,
    },
    #[serde(rename = "smooth")]
    SmoothSlope {
        alpha: f64,
        beta: f64,
        #[serde(default)]
        x_offset: f64,
        #[serde(default)]
        f0: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<[f64; 2]>,
    },
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    PiecewiseLinear {
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        value_at_0: f64,
        /// f at each breakpoint, integrated outward from 0.
        knot_values: Vec<f64>,
    },
    /// `f0 + alpha x + beta (sqrt(1 + (x - x_offset)^2) - sqrt(1 + x_offset^2))`
    SmoothSlope {
        alpha: f64,
        beta: f64,
        x_offset: f64,
        value_at_0: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzNonlinearity {
    shape: Shape,
    slope_lo: f64,
    slope_hi: f64,
}

impl LipschitzNonlinearity {
    /// Continuous piecewise-linear `f` with `slopes[i]` on the i-th segment
    /// cut by the sorted `breakpoints` and `f(0) = value_at_0`.
    pub fn piecewise_linear(breakpoints: Vec<f64>, slopes: Vec<f64>, value_at_0: f64) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidNonlinearity(format!(
                "{} breakpoints need {} slopes, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                slopes.len()
            )));
        }
        if breakpoints.iter().chain(&slopes).any(|v| !v.is_finite()) || !value_at_0.is_finite() {
            return Err(Error::InvalidNonlinearity("non-finite parameter".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidNonlinearity("breakpoints must be strictly increasing".into()));
        }
        let knot_values = knot_values(&breakpoints, &slopes, value_at_0);
        let slope_lo = slopes.iter().copied().fold(f64::INFINITY, f64::min);
        let slope_hi = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            shape: Shape::PiecewiseLinear {
                breakpoints,
                slopes,
                value_at_0,
                knot_values,
            },
            slope_lo,
            slope_hi,
        })
    }

    /// Smooth convex family with slope range `(alpha - beta, alpha + beta)`.
    pub fn smooth_slope(alpha: f64, beta: f64, x_offset: f64, value_at_0: f64) -> Result<Self> {
        if ![alpha, beta, x_offset, value_at_0].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidNonlinearity("non-finite parameter".into()));
        }
        if beta < 0.0 {
            return Err(Error::InvalidNonlinearity(format!("beta must be >= 0, got {beta}")));
        }
        Ok(Self {
            shape: Shape::SmoothSlope {
                alpha,
                beta,
                x_offset,
                value_at_0,
            },
            slope_lo: alpha - beta,
            slope_hi: alpha + beta,
        })
    }

    /// `f(x) = value_at_0 + slope * x`.
    pub fn linear(slope: f64, value_at_0: f64) -> Result<Self> {
        Self::piecewise_linear(Vec::new(), vec![slope], value_at_0)
    }

    pub fn identity() -> Self {
        Self::linear(1.0, 0.0).expect("finite")
    }

    /// Two-slope `f(x) = a x` for `x < 0`, `b x` for `x >= 0`.
    pub fn two_slope(a: f64, b: f64) -> Result<Self> {
        Self::piecewise_linear(vec![0.0], vec![a, b], 0.0)
    }

    /// Replaces the certified bounds by a wider pair `[a, b]`.
    pub fn with_bounds(mut self, a: f64, b: f64) -> Result<Self> {
        if !(a <= self.slope_lo && b >= self.slope_hi) {
            return Err(Error::InvalidNonlinearity(format!(
                "bounds [{a}, {b}] do not contain the slope range [{}, {}]",
                self.slope_lo, self.slope_hi
            )));
        }
        self.slope_lo = a;
        self.slope_hi = b;
        Ok(self)
    }

    pub fn from_spec(spec: &NonlinSpec) -> Result<Self> {
        let (f, bounds) = match spec {
            NonlinSpec::PiecewiseLinear {
                breakpoints,
                slopes,
                f0,
                bounds,
            } => (Self::piecewise_linear(breakpoints.clone(), slopes.clone(), *f0)?, bounds),
            NonlinSpec::SmoothSlope {
                alpha,
                beta,
                x_offset,
                f0,
                bounds,
            } => (Self::smooth_slope(*alpha, *beta, *x_offset, *f0)?, bounds),
        };
        match bounds {
            Some([a, b]) => f.with_bounds(*a, *b),
            None => Ok(f),
        }
    }

    pub fn to_spec(&self) -> NonlinSpec {
        let natural = match &self.shape {
            Shape::PiecewiseLinear { slopes, .. } => (
                slopes.iter().copied().fold(f64::INFINITY, f64::min),
                slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
            Shape::SmoothSlope { alpha, beta, .. } => (alpha - beta, alpha + beta),
        };
        let bounds = (natural != (self.slope_lo, self.slope_hi)).then_some([self.slope_lo, self.slope_hi]);
        match &self.shape {
            Shape::PiecewiseLinear {
                breakpoints,
                slopes,
                value_at_0,
                ..
            } => NonlinSpec::PiecewiseLinear {
                breakpoints: breakpoints.clone(),
                slopes: slopes.clone(),
                f0: *value_at_0,
                bounds,
            },
            Shape::SmoothSlope {
                alpha,
                beta,
                x_offset,
                value_at_0,
            } => NonlinSpec::SmoothSlope {
                alpha: *alpha,
                beta: *beta,
                x_offset: *x_offset,
                f0: *value_at_0,
                bounds,
            },
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::PiecewiseLinear {
                breakpoints,
                slopes,
                value_at_0,
                knot_values,
            } => {
                let seg = breakpoints.partition_point(|&b| b <= x);
                let lo = if seg > 0 { Some(breakpoints[seg - 1]) } else { None };
                let hi = breakpoints.get(seg).copied();
                let s = slopes[seg];
                // Anchor at 0 when the segment contains it, otherwise at the
                // segment end nearest to 0.
                match (lo, hi) {
                    (Some(l), _) if l > 0.0 => knot_values[seg - 1] + s * (x - l),
                    (_, Some(h)) if h <= 0.0 => knot_values[seg] + s * (x - h),
                    _ => value_at_0 + s * x,
                }
            }
            Shape::SmoothSlope {
                alpha,
                beta,
                x_offset,
                value_at_0,
            } => {
                value_at_0 + alpha * x
                    + beta * (1f64.hypot(x - x_offset) - 1f64.hypot(*x_offset))
            }
        }
    }

    /// Derivative, taking the right-hand slope at kinks.
    pub fn slope(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::PiecewiseLinear {
                breakpoints, slopes, ..
            } => slopes[breakpoints.partition_point(|&b| b <= x)],
            Shape::SmoothSlope {
                alpha, beta, x_offset, ..
            } => {
                let d = x - x_offset;
                alpha + beta * d / 1f64.hypot(d)
            }
        }
    }

    pub fn value_at_0(&self) -> f64 {
        match &self.shape {
            Shape::PiecewiseLinear { value_at_0, .. } | Shape::SmoothSlope { value_at_0, .. } => *value_at_0,
        }
    }

    /// Pointwise composition `f o u` at every interior node.
    pub fn compose(&self, u: &GridFunction) -> GridFunction {
        u.map(|v| self.eval(v))
    }

    pub(crate) fn compose_slice(&self, u: &[f64], out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(u) {
            *o = self.eval(v);
        }
    }

    /// `f(x) - gamma x`, with slope range shifted by `-gamma`.
    pub fn shifted(&self, gamma: f64) -> Self {
        let shape = match &self.shape {
            Shape::PiecewiseLinear {
                breakpoints,
                slopes,
                value_at_0,
                ..
            } => {
                let slopes: Vec<f64> = slopes.iter().map(|s| s - gamma).collect();
                Shape::PiecewiseLinear {
                    knot_values: knot_values(breakpoints, &slopes, *value_at_0),
                    breakpoints: breakpoints.clone(),
                    slopes,
                    value_at_0: *value_at_0,
                }
            }
            Shape::SmoothSlope {
                alpha,
                beta,
                x_offset,
                value_at_0,
            } => Shape::SmoothSlope {
                alpha: alpha - gamma,
                beta: *beta,
                x_offset: *x_offset,
                value_at_0: *value_at_0,
            },
        };
        Self {
            shape,
            slope_lo: self.slope_lo - gamma,
            slope_hi: self.slope_hi - gamma,
        }
    }

    /// `f(x) + s x`.
    pub fn plus_linear(&self, s: f64) -> Self {
        self.shifted(-s)
    }

    pub fn slope_range(&self) -> (f64, f64) {
        (self.slope_lo, self.slope_hi)
    }

    pub fn lipschitz_constant(&self) -> f64 {
        self.slope_lo.abs().max(self.slope_hi.abs())
    }

    pub fn breakpoints(&self) -> &[f64] {
        match &self.shape {
            Shape::PiecewiseLinear { breakpoints, .. } => breakpoints,
            Shape::SmoothSlope { .. } => &[],
        }
    }

    pub fn is_piecewise_linear(&self) -> bool {
        matches!(self.shape, Shape::PiecewiseLinear { .. })
    }
}

fn knot_values(breakpoints: &[f64], slopes: &[f64], value_at_0: f64) -> Vec<f64> {
    let mut out = vec![0.0; breakpoints.len()];
    let first_pos = breakpoints.partition_point(|&b| b <= 0.0);
    let (mut x, mut v) = (0.0, value_at_0);
    for i in first_pos..breakpoints.len() {
        v += slopes[i] * (breakpoints[i] - x);
        x = breakpoints[i];
        out[i] = v;
    }
    let (mut x, mut v) = (0.0, value_at_0);
    for i in (0..first_pos).rev() {
        v += slopes[i + 1] * (breakpoints[i] - x);
        x = breakpoints[i];
        out[i] = v;
    }
    out
}

/// Convenience wrapper matching [`LipschitzNonlinearity::compose`].
pub fn compose(f: &LipschitzNonlinearity, u: &GridFunction) -> GridFunction {
    f.compose(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Interval1D;
    use proptest::prelude::*;

    #[test]
    fn two_slope_values() {
        let (a, b) = (0.7, 6.3);
        let f = LipschitzNonlinearity::two_slope(a, b).unwrap();
        assert_eq!(f.eval(-1.0), -a);
        assert_eq!(f.eval(1.0), b);
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.slope(0.0), b);
        assert_eq!(f.slope(-1e-300), a);
    }

    #[test]
    fn three_slope_segment_is_exactly_linear() {
        let (a, l1, b, m) = (0.5, 0.99987, 2.0, 0.79);
        let f = LipschitzNonlinearity::piecewise_linear(vec![0.0, m], vec![a, l1, b], 0.0).unwrap();
        assert_eq!(f.eval(m), l1 * m);
        assert_eq!(f.eval(0.3), l1 * 0.3);
        assert!((f.eval(m + 1.0) - (l1 * m + b)).abs() < 1e-15);
        assert_eq!(f.eval(-2.0), -2.0 * a);
    }

    #[test]
    fn breakpoints_away_from_zero() {
        let f = LipschitzNonlinearity::piecewise_linear(vec![-2.0, -1.0, 1.5], vec![1.0, 2.0, 3.0, 4.0], 0.5).unwrap();
        assert!((f.eval(-1.0) - (0.5 - 3.0)).abs() < 1e-15);
        assert!((f.eval(-1.5) - (0.5 - 3.0 - 1.0)).abs() < 1e-15);
        assert!((f.eval(-3.0) - (0.5 - 3.0 - 2.0 - 1.0)).abs() < 1e-15);
        assert!((f.eval(2.0) - (0.5 + 4.5 + 2.0)).abs() < 1e-15);
        // finite-difference slopes equal the stored ones exactly on each segment
        let pts = [-4.0, -2.0, -1.0, 1.5, 3.0];
        for (i, w) in pts.windows(2).enumerate() {
            let fd = (f.eval(w[1]) - f.eval(w[0])) / (w[1] - w[0]);
            assert!((fd - [1.0, 2.0, 3.0, 4.0][i]).abs() < 1e-14, "segment {i}: {fd}");
        }
    }

    #[test]
    fn rejects_malformed_pwl() {
        assert!(LipschitzNonlinearity::piecewise_linear(vec![0.0], vec![1.0], 0.0).is_err());
        assert!(LipschitzNonlinearity::piecewise_linear(vec![1.0, 0.0], vec![1.0, 2.0, 3.0], 0.0).is_err());
        assert!(LipschitzNonlinearity::smooth_slope(1.0, -1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn slope_ranges() {
        let f = LipschitzNonlinearity::piecewise_linear(vec![0.0], vec![2.56, 64.0 / 9.0], 0.0).unwrap();
        assert_eq!(f.slope_range(), (2.56, 64.0 / 9.0));
        assert_eq!(f.lipschitz_constant(), 64.0 / 9.0);
        let g = LipschitzNonlinearity::smooth_slope(4.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(g.slope_range(), (3.0, 5.0));
        assert_eq!(g.lipschitz_constant(), 5.0);
        assert_eq!(g.eval(0.0), 0.0);
        let id = LipschitzNonlinearity::identity();
        assert_eq!(id.slope_range(), (1.0, 1.0));
        assert_eq!(id.lipschitz_constant(), 1.0);
    }

    #[test]
    fn shifted_band_and_values() {
        let f = LipschitzNonlinearity::smooth_slope(4.0, 1.0, 0.3, 0.2).unwrap();
        let ft = f.shifted(4.0);
        assert_eq!(ft.slope_range(), (-1.0, 1.0));
        for x in [-3.0, -0.2, 0.0, 1.7, 9.0] {
            assert!((ft.eval(x) - (f.eval(x) - 4.0 * x)).abs() < 1e-13);
            assert!((ft.shifted(-4.0).eval(x) - f.eval(x)).abs() < 1e-13);
        }
        let p = LipschitzNonlinearity::piecewise_linear(vec![-1.0, 2.0], vec![3.0, 4.5, 5.0], 1.0).unwrap();
        let pt = p.shifted(4.0);
        assert_eq!(pt.slope_range(), (-1.0, 1.0));
        for x in [-3.0, -0.2, 0.0, 1.7, 9.0] {
            assert!((pt.eval(x) - (p.eval(x) - 4.0 * x)).abs() < 1e-13);
            assert!((pt.shifted(-4.0).eval(x) - p.eval(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn wider_bounds() {
        let f = LipschitzNonlinearity::smooth_slope(1.25, 0.75, 0.0, 0.0).unwrap();
        let w = f.clone().with_bounds(0.4, 2.1).unwrap();
        assert_eq!(w.slope_range(), (0.4, 2.1));
        assert!(f.with_bounds(0.6, 2.1).is_err());
        let back = LipschitzNonlinearity::from_spec(&w.to_spec()).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn spec_json_format() {
        let s: NonlinSpec =
            serde_json::from_str(r#"{"kind":"pwl","breakpoints":[0.0],"slopes":[1.0,2.0],"f0":0.0}"#).unwrap();
        let f = LipschitzNonlinearity::from_spec(&s).unwrap();
        assert_eq!(f.eval(-1.0), -1.0);
        let s: NonlinSpec =
            serde_json::from_str(r#"{"kind":"smooth","alpha":4.0,"beta":1.0,"x_offset":0.0,"f0":0.0}"#).unwrap();
        assert_eq!(LipschitzNonlinearity::from_spec(&s).unwrap().slope_range(), (3.0, 5.0));
    }

    #[test]
    fn compose_examples() {
        let g = Interval1D::unit_pi(11).unwrap();
        let u = GridFunction::from_fn(g, |x| x.sin() - 0.3);
        assert_eq!(compose(&LipschitzNonlinearity::identity(), &u), u);
        let f = LipschitzNonlinearity::two_slope(1.0, 3.0).unwrap();
        let z = f.compose(&GridFunction::zeros(g));
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    fn arb_nonlin() -> impl Strategy<Value = LipschitzNonlinearity> {
        prop_oneof![
            (prop::collection::vec(-5.0..5.0f64, 0..5), -3.0..3.0f64, -2.0..2.0f64).prop_map(|(mut bp, s0, f0)| {
                bp.sort_by(f64::total_cmp);
                bp.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
                let slopes = (0..=bp.len()).map(|i| s0 + (i as f64 * 1.7).sin() * 4.0).collect();
                LipschitzNonlinearity::piecewise_linear(bp, slopes, f0).unwrap()
            }),
            (-5.0..5.0f64, 0.0..3.0f64, -2.0..2.0f64, -1.0..1.0f64)
                .prop_map(|(a, b, o, f0)| LipschitzNonlinearity::smooth_slope(a, b, o, f0).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn lipschitz_bound_holds(f in arb_nonlin(), x in -20.0..20.0f64, y in -20.0..20.0f64) {
            let m = f.lipschitz_constant();
            prop_assert!((f.eval(x) - f.eval(y)).abs() <= m * (x - y).abs() * (1.0 + 1e-12) + 1e-12);
            let (lo, hi) = f.slope_range();
            if x != y {
                let q = (f.eval(x) - f.eval(y)) / (x - y);
                prop_assert!(q >= lo - 1e-9 && q <= hi + 1e-9);
            }
        }

        #[test]
        fn composition_is_lipschitz_in_l2(
            f in arb_nonlin(),
            a in prop::collection::vec(-10.0..10.0f64, 9),
            b in prop::collection::vec(-10.0..10.0f64, 9),
        ) {
            let g = Interval1D::unit_pi(9).unwrap();
            let u = GridFunction::new(g, a).unwrap();
            let v = GridFunction::new(g, b).unwrap();
            let lhs = f.compose(&u).sub(&f.compose(&v)).unwrap().norm_l2();
            let rhs = f.lipschitz_constant() * u.sub(&v).unwrap().norm_l2();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
        }
    }
}
