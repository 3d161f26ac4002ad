//! Sampled Lipschitz properties of the fiber maps, checked against constants
//! that follow from `|f' - gamma| <= (b - a) / 2 = delta` and `|T| >= D` on
//! the horizontal space.

use lsfiber::{
    apply_operator, fiber_point, invert_fv, phi_inverse_point, GridFunction, IDecomposition, Interval1D,
    LipschitzNonlinearity, SolverParams, SpectralBasis,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Setup {
    d: IDecomposition,
    f: LipschitzNonlinearity,
    grid: Interval1D,
}

fn setup(a: f64, b: f64, offset: f64) -> Setup {
    let grid = Interval1D::unit_pi(63).unwrap();
    let d = IDecomposition::build(SpectralBasis::shared(grid), a, b, None).unwrap();
    let f = LipschitzNonlinearity::smooth_slope(0.5 * (a + b), 0.5 * (b - a), offset, 0.3).unwrap();
    Setup { d, f, grid }
}

/// Random function with energy spread over the first 20 modes.
fn random_fn(s: &Setup, rng: &mut ChaCha8Rng, amp: f64) -> GridFunction {
    let mut c = vec![0.0; s.grid.n];
    for (k, ck) in c.iter_mut().take(20).enumerate() {
        *ck = amp * rng.random_range(-1.0..1.0) / (1.0 + k as f64).sqrt();
    }
    s.d.basis().from_coeffs(&c).unwrap()
}

fn constants(d: &IDecomposition) -> (f64, f64) {
    let delta = 0.5 * (d.b() - d.a());
    (delta, d.lambda_m_dist())
}

fn tight() -> SolverParams {
    SolverParams::with_tol(1e-13)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn horizontal_map_is_injective(seed in 0u64..10_000, offset in -2.0f64..2.0, wide in proptest::bool::ANY) {
        let s = if wide { setup(0.3, 7.0, offset) } else { setup(0.5, 2.0, offset) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = s.d.project_vertical(&random_fn(&s, &mut rng, 3.0)).unwrap();
        let w1 = s.d.project_horizontal(&random_fn(&s, &mut rng, 3.0)).unwrap();
        let w2 = s.d.project_horizontal(&random_fn(&s, &mut rng, 3.0)).unwrap();
        let pf = |w: &GridFunction| s.d.project_horizontal(&apply_operator(&s.f, &w.add(&v).unwrap())).unwrap();
        let dz = pf(&w1).sub(&pf(&w2)).unwrap().norm_l2();
        let dw = w1.sub(&w2).unwrap().norm_h2();
        let (delta, dist) = constants(&s.d);
        let l = 1.0 + (delta + s.d.gamma().abs()) / (dist - delta);
        prop_assert!(dz >= dw / l * (1.0 - 1e-9), "dz {dz} dw {dw} L {l}");
    }

    #[test]
    fn change_of_variables_is_bi_lipschitz(seed in 0u64..10_000, offset in -2.0f64..2.0) {
        let s = setup(0.3, 7.0, offset);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lambda1 = s.d.basis().eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        let lambda_v = s.d.indices().iter().map(|&k| s.grid.discrete_eigenvalue(k)).fold(0.0, f64::max);
        let (delta, dist) = constants(&s.d);
        let gamma = s.d.gamma().abs();
        let lip_f = s.d.a().abs().max(s.d.b().abs());
        let a_w = (1.0 + delta) / (dist - delta);
        let upper = 1.0 + delta * (a_w + 1.0) + gamma * a_w + lambda_v;
        let lower = 1.0 / (1.0 + (lip_f + 1.0) / lambda1);

        let mut pick = || {
            let z = s.d.project_horizontal(&random_fn(&s, &mut rng, 4.0)).unwrap();
            let t: Vec<f64> = (0..s.d.fiber_dim()).map(|_| rng.random_range(-4.0..4.0)).collect();
            let v = s.d.basis().from_coeffs(&s.d.embed_vertical(&t)).unwrap();
            let u = phi_inverse_point(&s.d, &s.f, &z, &t, &tight()).unwrap();
            (z.add(&v).unwrap(), u)
        };
        let (y1, u1) = pick();
        let (y2, u2) = pick();
        let ratio = u1.sub(&u2).unwrap().norm_h2() / y1.sub(&y2).unwrap().norm_l2();
        prop_assert!(ratio <= upper * (1.0 + 1e-9) && ratio >= lower * (1.0 - 1e-9),
            "ratio {ratio} outside [{lower}, {upper}]");
    }

    #[test]
    fn fiber_is_a_lipschitz_graph(seed in 0u64..10_000, offset in -2.0f64..2.0, step in 1e-3f64..3.0) {
        let s = setup(0.5, 2.0, offset);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_fn(&s, &mut rng, 5.0);
        let t0 = rng.random_range(-5.0..5.0);
        let p0 = fiber_point(&s.d, &s.f, &g, &[t0], None, &tight()).unwrap();
        let p1 = fiber_point(&s.d, &s.f, &g, &[t0 + step], None, &tight()).unwrap();
        let c = s.d.c();
        let quotient = p1.w.sub(&p0.w).unwrap().norm_l2() / step;
        prop_assert!(quotient <= c / (1.0 - c) + 1e-8, "quotient {quotient} c {c}");
    }
}

#[test]
fn graph_property_over_many_warm_starts() {
    let s = setup(0.3, 7.0, 0.4);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let v = s.d.project_vertical(&random_fn(&s, &mut rng, 2.0)).unwrap();
    let z = s.d.project_horizontal(&random_fn(&s, &mut rng, 2.0)).unwrap();
    let reference = invert_fv(&s.d, &s.f, &v, &z, None, &tight()).unwrap();
    for _ in 0..5 {
        let warm = s.d.basis().to_coeffs(&s.d.project_horizontal(&random_fn(&s, &mut rng, 50.0)).unwrap()).unwrap();
        let inv = invert_fv(&s.d, &s.f, &v, &z, Some(&warm), &tight()).unwrap();
        assert!(inv.w.sub(&reference.w).unwrap().norm_l2() <= 1e-9);
    }
}
