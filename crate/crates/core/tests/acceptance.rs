//! Acceptance criteria. Runs as a plain binary so every criterion prints its
//! own PASS/FAIL line; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lsfiber::enumerate::{
    ap_scan, fold_values_1d, newton_multistart_oracle, solve_dim0, solve_on_fiber_1d, solve_on_fiber_2d, OracleParams,
    ScanParams, SolutionSet, Tolerances,
};
use lsfiber::gallery::{build_flat_segment, build_symmetric_example, verify_halfline, verify_separable_2d};
use lsfiber::{
    invert_fv, sheet_sample, trace_fiber, GridFunction, IDecomposition, Interval1D, LipschitzNonlinearity,
    SolverParams, SpectralBasis,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn line(n: usize) -> Interval1D {
    Interval1D::unit_pi(n).unwrap()
}

/// Random combination of the first six sine modes with `1/k` decay.
fn random_rhs(grid: Interval1D, rng: &mut ChaCha8Rng, amp: f64) -> GridFunction {
    let c: Vec<f64> = (1..=6).map(|k| amp * rng.random_range(-1.0..1.0) / k as f64).collect();
    GridFunction::from_fn(grid, |x| c.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * x).sin()).sum())
}

fn ap_instance() -> (IDecomposition, LipschitzNonlinearity, GridFunction) {
    let grid = line(199);
    let d = IDecomposition::build(SpectralBasis::shared(grid), 0.5, 2.0, None).unwrap();
    let f = LipschitzNonlinearity::smooth_slope(1.25, 0.75, 0.0, 0.0).unwrap();
    let h0 = GridFunction::from_fn(grid, |x| 0.5 * (2.0 * x).sin() + 0.3 * x * (PI - x) - 0.2);
    (d, f, h0)
}

fn contraction_certificate() -> Outcome {
    let start = Instant::now();
    let grid = line(199);
    let basis = SpectralBasis::shared(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = SolverParams::default();
    let (mut worst_rate, mut worst_iter) = (f64::NEG_INFINITY, i64::MIN);
    for i in 0..50 {
        // even instances straddle lambda_1, odd ones lambda_1 and lambda_2
        let a = rng.random_range(0.2..0.9);
        let b = if i % 2 == 0 { rng.random_range(1.2..3.6) } else { rng.random_range(4.3..8.5) };
        let d = IDecomposition::build(basis.clone(), a, b, None).map_err(|e| e.to_string())?;
        let lo = rng.random_range(a..a + 0.3 * (b - a));
        let hi = rng.random_range(b - 0.3 * (b - a)..b);
        let f = LipschitzNonlinearity::smooth_slope(
            0.5 * (lo + hi),
            0.5 * (hi - lo),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
        .unwrap();
        let t: Vec<f64> = (0..d.fiber_dim()).map(|_| rng.random_range(-5.0..5.0)).collect();
        let v = basis.from_coeffs(&d.embed_vertical(&t)).unwrap();
        let z = d.project_horizontal(&random_rhs(grid, &mut rng, 5.0)).unwrap();
        let inv = invert_fv(&d, &f, &v, &z, None, &params).map_err(|e| format!("instance {i}: {e}"))?;
        worst_rate = worst_rate.max(inv.max_rate - d.c());
        worst_iter = worst_iter.max(inv.iterations as i64 - params.predicted_iterations(d.c()) as i64);
    }
    let elapsed = start.elapsed();
    check(
        worst_rate <= 0.02 && worst_iter <= 5 && elapsed <= Duration::from_secs(60),
        format!("50 instances, max(rate - c) = {worst_rate:.4}, max(iterations - predicted) = {worst_iter}, {elapsed:.2?}"),
    )
}

fn dolph_hammerstein() -> Outcome {
    let grid = line(199);
    let d = IDecomposition::build(SpectralBasis::shared(grid), 2.0, 3.0, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst, mut counts) = (0.0f64, Vec::new());
    for _ in 0..20 {
        let f = LipschitzNonlinearity::smooth_slope(2.5, rng.random_range(0.0..0.5), rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0))
            .unwrap();
        let g = random_rhs(grid, &mut rng, 10.0);
        let fib = solve_dim0(&d, &f, &g, &Tolerances::default()).map_err(|e| e.to_string())?;
        let oracle = newton_multistart_oracle(d.basis(), &f, &g, &OracleParams::default()).map_err(|e| e.to_string())?;
        counts.push(oracle.count());
        if oracle.count() == 1 && fib.count() == 1 {
            worst = worst.max(fib.solutions[0].u.sub(&oracle.solutions[0].u).unwrap().norm_l2());
        } else {
            worst = f64::INFINITY;
        }
    }
    check(
        worst <= 1e-7 && counts.iter().all(|&c| c == 1),
        format!("20 right-hand sides, oracle counts {counts:?}, max ||u_fiber - u_oracle||_0 = {worst:.2e}"),
    )
}

fn ambrosetti_prodi() -> Outcome {
    let (d, f, h0) = ap_instance();
    let tols = Tolerances::default();
    let folds = fold_values_1d(&d, &f, &h0, -30.0, 30.0, 401, &tols).map_err(|e| e.to_string())?;
    if folds.len() != 1 {
        return Err(format!("expected one fold, found {folds:?}"));
    }
    let s_star = folds[0].1;
    let s_values: Vec<f64> = (0..41).map(|i| if i == 20 { s_star } else { s_star + 0.1 * (i as f64 - 20.0) }).collect();
    let scan = ScanParams {
        t_min: Some(vec![-30.0]),
        t_max: Some(vec![30.0]),
        resolution: Some(401),
        seeds: vec![],
    };
    let results = ap_scan(&d, &f, &h0, &s_values, &scan, &tols).map_err(|e| e.to_string())?;
    let counts: Vec<usize> = results.iter().map(|r| r.0.count).collect();
    let (_, phi1) = d.basis().eigenpair(1).unwrap();
    let oracle_counts: Vec<usize> = s_values
        .iter()
        .map(|&s| {
            let g = h0.add_scaled(-s, &phi1).unwrap();
            let p = OracleParams {
                box_scale: 30.0,
                ..Default::default()
            };
            newton_multistart_oracle(d.basis(), &f, &g, &p).map(|o| o.count()).unwrap_or(usize::MAX)
        })
        .collect();
    let ones = counts.iter().filter(|&&c| c == 1).count();
    let step = counts.windows(2).all(|w| w[0] <= w[1]) && counts[0] == 0 && counts[40] == 2 && ones == 1;
    let render = |c: &[usize]| c.iter().map(|x| x.to_string()).collect::<String>();
    check(
        step && counts == oracle_counts,
        format!("s* = {s_star:.6}, fiber counts {}, oracle counts {}", render(&counts), render(&oracle_counts)),
    )
}

fn lazer_mckenna() -> Outcome {
    let start = Instant::now();
    let grid = line(199);
    let d = IDecomposition::build(SpectralBasis::shared(grid), 0.5, 6.0, None).unwrap();
    let f = LipschitzNonlinearity::smooth_slope(3.25, 2.75, 0.0, 0.0).unwrap();
    let mut summary = Vec::new();
    let mut last = None;
    for t in [10.0, 30.0, 100.0] {
        let g = GridFunction::from_fn(grid, |x| -t * x.sin());
        let box_ = [[-3.0 * t - 40.0, t + 5.0], [-t - 5.0, t + 5.0]];
        let fib = solve_on_fiber_2d(&d, &f, &g, box_, 41, &Tolerances::default()).map_err(|e| e.to_string())?;
        let p = OracleParams {
            box_scale: 4.0 * t,
            ..Default::default()
        };
        let oracle = newton_multistart_oracle(d.basis(), &f, &g, &p).map_err(|e| e.to_string())?;
        summary.push(format!("t={t}: {}/{}", fib.count(), oracle.count()));
        last = Some((fib, oracle));
    }
    let (fib, oracle) = last.unwrap();
    let cmp = fib.compare(&oracle, 1e-6);
    let elapsed = start.elapsed();
    check(
        fib.count() == 4 && oracle.count() == 4 && cmp.agree && elapsed <= Duration::from_secs(600),
        format!(
            "fiber/oracle counts [{}], largest t matched to {:.2e}, {elapsed:.2?}",
            summary.join(", "),
            cmp.max_distance.unwrap_or(f64::NAN)
        ),
    )
}

fn flat_segment() -> Outcome {
    let grid = line(199);
    let (a, b) = (0.5, 2.0);
    let seg = build_flat_segment(grid, a, b).map_err(|e| e.to_string())?;
    let report = seg.verify(a, b, 1e-10);
    let d = IDecomposition::build(SpectralBasis::shared(grid), a, b, None).unwrap();
    let set = solve_on_fiber_1d(&d, &seg.f, &GridFunction::zeros(grid), -1.0, 2.0, 301, &Tolerances::default())
        .map_err(|e| e.to_string())?;
    // one sample spacing of slack at each end
    let spacing = 3.0 / 300.0;
    let covered = set
        .continua
        .iter()
        .any(|c| c.t_lo[0] <= spacing && c.t_hi[0] >= 1.0 - spacing);
    check(
        report.passed && report.max_segment_residual <= 1e-10 && covered,
        format!(
            "max residual on segment {:.2e}, continua {:?}",
            report.max_segment_residual,
            set.continua.iter().map(|c| (c.t_lo[0], c.t_hi[0])).collect::<Vec<_>>()
        ),
    )
}

/// Root of `pi/sqrt(b) + pi/sqrt(a) = pi` by bisection.
fn halfline_b_bisect(a: f64) -> f64 {
    let g = |b: f64| 1.0 / b.sqrt() + 1.0 / a.sqrt() - 1.0;
    let (mut lo, mut hi) = (a, 1e6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn halfline() -> Outcome {
    let report = verify_halfline(2, 2.56, &[199, 399, 799], &[0.5, 1.0, 2.0, 5.0]).map_err(|e| e.to_string())?;
    let b = report.instance.b;
    let oracle = halfline_b_bisect(2.56);
    let ray_max = report.ray.iter().map(|r| r.height / r.bound).fold(0.0, f64::max);
    check(
        (b - 64.0 / 9.0).abs() <= 1e-10
            && (b - oracle).abs() <= 1e-10
            && report.decreasing
            && report.min_order >= 1.0
            && !report.ray.is_empty()
            && ray_max <= 1.0,
        format!(
            "b = {b:.12}, min order {:.3}, max ray height / 10h = {ray_max:.3}",
            report.min_order
        ),
    )
}

fn separable() -> Outcome {
    let report = verify_separable_2d(2, 2.56, &[49, 99, 199], &[0.5, 1.0, 2.0]).map_err(|e| e.to_string())?;
    check(
        report.min_order >= 1.0 && report.scaling_defect <= 1e-8,
        format!("min order {:.3}, p-scaling defect {:.2e}", report.min_order, report.scaling_defect),
    )
}

fn symmetric() -> Outcome {
    let grid = Interval1D::new(-PI / 2.0, PI / 2.0, 199).unwrap();
    let ex = build_symmetric_example(grid, 0.5, 0.3).map_err(|e| e.to_string())?;
    let worst = ex
        .report
        .rows
        .iter()
        .map(|r| r.inner.abs() / (1.0 + r.norm_f))
        .fold(0.0, f64::max);
    check(
        ex.report.rows.len() == 6 && ex.report.rows.iter().all(|r| r.passed) && worst <= 1e-9,
        format!("6 values of t, max |<F(t phi_2), phi_2>| / (1 + ||F||) = {worst:.2e}"),
    )
}

fn lipschitz_uniformity() -> Outcome {
    let grid = line(199);
    let d = IDecomposition::build(SpectralBasis::shared(grid), 0.5, 2.0, None).unwrap();
    let f = LipschitzNonlinearity::smooth_slope(1.25, 0.75, 0.0, 0.0).unwrap();
    let params = SolverParams::default();
    let c = d.c();
    let bound = c / (1.0 - c);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let base = GridFunction::from_fn(grid, |x| 3.0 * (2.0 * x).sin() + (3.0 * x).sin());
    let gs: Vec<GridFunction> = (0..10)
        .map(|_| {
            let r = random_rhs(grid, &mut rng, 1.0);
            base.add_scaled(0.5 / r.norm_l2(), &r).unwrap()
        })
        .collect();
    let ts: Vec<Vec<f64>> = (0..10).map(|j| vec![-1.0 + 2.0 * j as f64 / 9.0]).collect();

    let mut lw = Vec::new();
    for g in &gs {
        let trace = trace_fiber(&d, &f, g, &ts, &params).map_err(|e| e.to_string())?;
        let mut l = 0.0f64;
        for (i, p) in trace.samples.iter().enumerate() {
            for q in &trace.samples[..i] {
                l = l.max(p.w.sub(&q.w).unwrap().norm_l2() / (p.t[0] - q.t[0]).abs());
            }
        }
        lw.push(l);
    }
    let zs: Vec<GridFunction> = gs.iter().map(|g| d.project_horizontal(g).unwrap()).collect();
    let mut ls = Vec::new();
    for t in &ts {
        let sheet = sheet_sample(&d, &f, t, &zs, &params).map_err(|e| e.to_string())?;
        let mut l = 0.0f64;
        for (i, (z, s)) in sheet.iter().enumerate() {
            for (z2, s2) in &sheet[..i] {
                l = l.max((s[0] - s2[0]).abs() / z.sub(z2).unwrap().norm_l2());
            }
        }
        ls.push(l);
    }
    let spread = |v: &[f64]| {
        let max = v.iter().copied().fold(0.0, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        (min, max)
    };
    let (wmin, wmax) = spread(&lw);
    let (smin, smax) = spread(&ls);
    check(
        wmax <= 2.0 * wmin && smax <= 2.0 * smin && wmax <= bound && smax <= bound,
        format!(
            "bound c/(1-c) = {bound:.4}; t -> w(t): [{wmin:.4}, {wmax:.4}]; sigma_v: [{smin:.4}, {smax:.4}]"
        ),
    )
}

fn decomposition_stability() -> Outcome {
    let (d, f, h0) = ap_instance();
    let tols = Tolerances::default();
    let s_star = fold_values_1d(&d, &f, &h0, -30.0, 30.0, 401, &tols).map_err(|e| e.to_string())?[0].1;
    let (_, phi1) = d.basis().eigenpair(1).unwrap();
    let rhs: Vec<GridFunction> = [-0.6, -0.2, 0.2, 0.9, 1.9]
        .iter()
        .map(|ds| h0.add_scaled(-(s_star + ds), &phi1).unwrap())
        .collect();
    let solve = |d: &IDecomposition| -> Result<Vec<SolutionSet>, String> {
        rhs.iter()
            .map(|g| solve_on_fiber_1d(d, &f, g, -30.0, 30.0, 401, &tols).map_err(|e| e.to_string()))
            .collect()
    };
    let base = solve(&d)?;
    let base_counts: Vec<usize> = base.iter().map(|s| s.count()).collect();
    let mut ok = true;
    let mut per_eps = Vec::new();
    for eps in [0.01, 0.05] {
        let dp = d.perturb_vertical(eps, 7).map_err(|e| e.to_string())?;
        let sets = solve(&dp)?;
        let mut max_disp = 0.0f64;
        for (set, b) in sets.iter().zip(&base) {
            ok &= set.count() == b.count() && set.compare(b, 1e-6).agree;
            for (x, y) in set.solutions.iter().zip(&b.solutions) {
                max_disp = max_disp.max((x.t[0] - y.t[0]).abs());
            }
        }
        per_eps.push(max_disp / eps);
    }
    let ratio = per_eps[0].max(per_eps[1]) / per_eps[0].min(per_eps[1]);
    check(
        ok && ratio <= 3.0,
        format!(
            "counts {base_counts:?} unchanged: {ok}; max displacement / eps = {:.4} (0.01), {:.4} (0.05), ratio {ratio:.2}",
            per_eps[0], per_eps[1]
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("contraction certificate", contraction_certificate),
        ("Dolph-Hammerstein uniqueness", dolph_hammerstein),
        ("Ambrosetti-Prodi counting", ambrosetti_prodi),
        ("Lazer-McKenna count", lazer_mckenna),
        ("flat segment", flat_segment),
        ("half-line non-properness", halfline),
        ("separable 2D", separable),
        ("symmetric vertical example", symmetric),
        ("Lipschitz uniformity", lipschitz_uniformity),
        ("decomposition stability", decomposition_stability),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
