use std::f64::consts::PI;

use lsfiber::enumerate::{
    ap_scan, collinearity_defect, fold_values_1d, newton_multistart_oracle, solve_on_fiber_1d, solve_on_fiber_2d,
    OracleParams, ScanParams, Tolerances,
};
use lsfiber::gallery::{build_flat_segment, build_halfline};
use lsfiber::{apply_operator, height_map, GridFunction, IDecomposition, Interval1D, LipschitzNonlinearity, SolverParams, SpectralBasis};

fn ap_setup() -> (IDecomposition, LipschitzNonlinearity, GridFunction) {
    let grid = Interval1D::unit_pi(199).unwrap();
    let d = IDecomposition::build(SpectralBasis::shared(grid), 0.5, 2.0, None).unwrap();
    let f = LipschitzNonlinearity::smooth_slope(1.25, 0.75, 0.0, 0.0).unwrap();
    let h0 = GridFunction::from_fn(grid, |x| 0.5 * (2.0 * x).sin() + 0.3 * x * (PI - x) - 0.2);
    (d, f, h0)
}

#[test]
fn ambrosetti_prodi_pair_matches_oracle() {
    let (d, f, h0) = ap_setup();
    let tols = Tolerances::default();
    let s_star = fold_values_1d(&d, &f, &h0, -30.0, 30.0, 401, &tols).unwrap()[0].1;
    let (_, phi1) = d.basis().eigenpair(1).unwrap();
    let g = h0.add_scaled(-(s_star + 1.0), &phi1).unwrap();
    let set = solve_on_fiber_1d(&d, &f, &g, -30.0, 30.0, 401, &tols).unwrap();
    assert_eq!(set.count(), 2);
    assert!(!set.has_continuum());

    let oracle = newton_multistart_oracle(d.basis(), &f, &g, &OracleParams { box_scale: 30.0, ..Default::default() }).unwrap();
    let cmp = set.compare(&oracle, 1e-6);
    assert!(cmp.agree, "{cmp:?}");

    let accept = 1e-8 * (1.0 + g.norm_l2());
    for sol in &set.solutions {
        let r = apply_operator(&f, &sol.u).sub(&g).unwrap().norm_l2();
        assert!(r <= accept, "residual {r}");
        let [lo, hi] = sol.bracket.expect("isolated roots carry a bracket");
        assert!(hi - lo <= 1e-11 * (1.0 + lo.abs().max(hi.abs())) * 2.0);
        let params = SolverParams::with_tol(1e-13);
        let shift = (s_star + 1.0) * d.vertical_coords(&d.basis().to_coeffs(&phi1).unwrap())[0];
        let h_lo = height_map(&d, &f, &h0, &[lo], &params).unwrap()[0] + shift;
        let h_hi = height_map(&d, &f, &h0, &[hi], &params).unwrap()[0] + shift;
        assert!(h_lo * h_hi <= 0.0, "no sign change across [{lo}, {hi}]: {h_lo} {h_hi}");
    }
}

#[test]
fn two_dimensional_scan_counts_four_for_large_shift() {
    let grid = Interval1D::unit_pi(199).unwrap();
    let d = IDecomposition::build(SpectralBasis::shared(grid), 0.5, 6.0, None).unwrap();
    let f = LipschitzNonlinearity::smooth_slope(3.25, 2.75, 0.0, 0.0).unwrap();
    let scan = ScanParams {
        t_min: Some(vec![-300.0, -110.0]),
        t_max: Some(vec![110.0, 110.0]),
        resolution: Some(41),
        seeds: vec![],
    };
    let zero = GridFunction::zeros(grid);
    let out = ap_scan(&d, &f, &zero, &[80.0, 120.0], &scan, &Tolerances::default()).unwrap();
    for (p, set) in &out {
        assert_eq!(p.count, 4, "s = {}", p.s);
        assert!(!p.continuum);
        let (_, phi1) = d.basis().eigenpair(1).unwrap();
        let g = zero.add_scaled(-p.s, &phi1).unwrap();
        let oracle = newton_multistart_oracle(d.basis(), &f, &g, &OracleParams { box_scale: 4.0 * p.s, ..Default::default() }).unwrap();
        assert!(set.compare(&oracle, 1e-6).agree);
    }
}

#[test]
fn discrete_halfline_gives_two_ray_continua() {
    let grid = Interval1D::unit_pi(199).unwrap();
    let exact = build_halfline(2, 2.56, grid).unwrap().grid_adapted().unwrap();
    let d = IDecomposition::build(SpectralBasis::shared(grid), 0.5, 7.5, None).unwrap();
    let zero = GridFunction::zeros(grid);
    let set = solve_on_fiber_2d(&d, &exact.f, &zero, [[-3.0, 3.0], [-3.0, 3.0]], 41, &Tolerances::default()).unwrap();
    // psi and its mirror image psi(pi - x) both span rays of solutions
    assert_eq!(set.continua.len(), 2);
    let ray = d.vertical_coords(&d.basis().to_coeffs(&exact.psi).unwrap());
    assert!(ray[0] < 0.0 && ray[1] > 0.0);
    let along = set.continua.iter().find(|c| c.t_hi[1] > 1.0).expect("continuum along psi");
    // the box of the continuum is the box spanned by the ray segment inside the scan
    let p_max = (3.0 / ray[0].abs()).min(3.0 / ray[1].abs());
    let spacing = 6.0 / 40.0;
    assert!(along.t_lo[0] <= p_max * ray[0] + 2.0 * spacing && along.t_hi[0] >= -spacing);
    assert!(along.t_lo[1] <= spacing && along.t_hi[1] >= p_max * ray[1] - 2.0 * spacing);
    assert!(along.max_abs_height <= 1e-7);

    let oracle = newton_multistart_oracle(
        d.basis(),
        &exact.f,
        &zero,
        &OracleParams {
            n_starts: 1000,
            box_scale: 3.0,
            ..Default::default()
        },
    )
    .unwrap();
    let on_psi: Vec<_> = oracle
        .solutions
        .iter()
        .filter(|s| s.u.inner_l2(&exact.psi).unwrap() >= 0.0)
        .cloned()
        .collect();
    assert!(on_psi.len() >= 3, "oracle found {} points on the psi side", on_psi.len());
    assert!(collinearity_defect(&on_psi, &exact.psi).unwrap() <= 1e-6);
}

#[test]
fn flat_continuum_is_stable_under_refinement() {
    let grid = Interval1D::unit_pi(199).unwrap();
    let seg = build_flat_segment(grid, 0.5, 2.0).unwrap();
    let d = IDecomposition::build(SpectralBasis::shared(grid), 0.5, 2.0, None).unwrap();
    let zero = GridFunction::zeros(grid);
    let tols = Tolerances::default();
    let coarse = solve_on_fiber_1d(&d, &seg.f, &zero, -1.3, 2.1, 76, &tols).unwrap();
    let fine = solve_on_fiber_1d(&d, &seg.f, &zero, -1.3, 2.1, 151, &tols).unwrap();
    assert_eq!(coarse.continua.len(), 1);
    assert_eq!(fine.continua.len(), 1);
    let spacing = 3.4 / 75.0;
    let (c, f) = (&coarse.continua[0], &fine.continua[0]);
    assert!((c.t_lo[0] - f.t_lo[0]).abs() <= 2.0 * spacing);
    assert!((c.t_hi[0] - f.t_hi[0]).abs() <= 2.0 * spacing);
    assert!(f.t_lo[0] <= spacing / 2.0 && f.t_hi[0] >= 1.0 - spacing / 2.0);
}
