use std::fs;
use std::path::Path;

use anyhow::anyhow;
use log::info;
use lsfiber::enumerate::{
    ap_scan, collinearity_defect, fold_values_1d, newton_multistart_oracle, solve, Solution, SolutionSet,
};
use lsfiber::gallery::{
    build_flat_segment, build_halfline, build_symmetric_example, symmetric_negative_control, verify_halfline,
    verify_separable_2d,
};
use lsfiber::io::{read_solution_set, scan_csv, write_grid_function_csv, write_solution_set, write_trace};
use lsfiber::{trace_fiber, Error, IDecomposition, Interval1D};
use serde::Serialize;
use serde_json::json;

use crate::config::Problem;
use crate::GalleryCmd;

/// A failed command and its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub type Outcome = Result<u8, Failure>;

pub fn config_error(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        error: e.into(),
    }
}

/// 2 for an eigenvalue on the band boundary, 1 for bad input, 4 otherwise.
pub fn library_error(e: Error) -> Failure {
    let code = match e {
        Error::EigenvalueOnBoundary { .. } => 2,
        Error::InvalidGrid(_)
        | Error::IndexOutOfRange { .. }
        | Error::LengthMismatch { .. }
        | Error::GridMismatch
        | Error::InvalidBand { .. }
        | Error::SlopeOutsideBand { .. }
        | Error::InvalidNonlinearity(_)
        | Error::FiberDimMismatch { .. }
        | Error::ResonantB { .. }
        | Error::InvalidArgument(_)
        | Error::Parse(_) => 1,
        _ => 4,
    };
    Failure {
        code,
        error: e.into(),
    }
}

fn io_error(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 4,
        error: e.into(),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_error)?;
    }
    let text = serde_json::to_string_pretty(value).map_err(io_error)? + "\n";
    fs::write(path, text).map_err(io_error)
}

fn prepare(p: &mut Problem, out: &Path) -> Result<IDecomposition, Failure> {
    let d = p.decomposition().map_err(library_error)?;
    p.resolve(&d);
    write_json(&out.join("config.resolved.json"), &p.config)?;
    Ok(d)
}

fn print_decomposition(p: &Problem, d: &IDecomposition) {
    let s = d.summary();
    let (lo, hi) = p.f.slope_range();
    println!("grid nodes: {}", p.grid.len());
    println!("band [{}, {}], gamma = {}, slopes of f in [{lo}, {hi}]", s.a, s.b, s.gamma);
    println!("fiber dimension {} (eigen-indices {:?}, eigenvalues {:?})", s.fiber_dim, s.indices, s.lambda);
    println!("contraction constant c = {:.6}", s.c);
    for w in &s.warnings {
        println!("warning: {w}");
    }
    if lo < s.a || hi > s.b {
        println!("warning: the slopes of f leave the band; solve, trace and scan will refuse this config");
    }
    if s.fiber_dim == 0 {
        println!("Dolph-Hammerstein regime: unique solvability");
    }
}

pub fn info(mut p: Problem, out: &Path) -> Outcome {
    let d = prepare(&mut p, out)?;
    print_decomposition(&p, &d);
    write_json(&out.join("decomposition.json"), &d.summary())?;
    Ok(0)
}

pub fn solve_cmd(mut p: Problem, out: &Path) -> Outcome {
    let d = prepare(&mut p, out)?;
    let set = solve(&d, &p.f, &p.g, &p.config.scan, &p.config.tolerances).map_err(library_error)?;
    write_solution_set(out, &set, &p.g, Some(d.summary())).map_err(library_error)?;
    println!("{} solution(s), {} continuum/continua", set.count(), set.continua.len());
    for (i, s) in set.solutions.iter().enumerate() {
        let flag = if s.tangential { " (tangential)" } else { "" };
        println!("  sol_{i}: t = {:?}, residual = {:.3e}{flag}", s.t, s.residual);
    }
    for c in &set.continua {
        println!(
            "  continuum: t in [{:?}, {:?}], max |height| = {:.3e}",
            c.t_lo, c.t_hi, c.max_abs_height
        );
    }
    if set.count() == 0 && set.continua.is_empty() {
        println!("no solutions in the scanned range");
        return Ok(3);
    }
    Ok(0)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn trace(mut p: Problem, out: &Path) -> Outcome {
    let d = prepare(&mut p, out)?;
    let m = p.config.trace_samples.unwrap_or(1).max(1);
    let (lo, hi) = (p.config.scan.t_min.clone().unwrap(), p.config.scan.t_max.clone().unwrap());
    let ts: Vec<Vec<f64>> = match d.fiber_dim() {
        0 => vec![vec![]],
        1 => linspace(lo[0], hi[0], m).into_iter().map(|t| vec![t]).collect(),
        2 => {
            let xs = linspace(lo[0], hi[0], m);
            let ys = linspace(lo[1], hi[1], m);
            xs.iter().flat_map(|&x| ys.iter().map(move |&y| vec![x, y])).collect()
        }
        k => return Err(config_error(anyhow!("traces cover fibers of dimension at most 2, got {k}"))),
    };
    let tr = trace_fiber(&d, &p.f, &p.g, &ts, &p.config.solver).map_err(library_error)?;
    fs::create_dir_all(out).map_err(io_error)?;
    write_trace(out.join("trace.csv"), &tr).map_err(library_error)?;
    println!(
        "{} trace samples, {} Picard iterations in total",
        tr.samples.len(),
        tr.total_iterations()
    );
    Ok(0)
}

pub fn scan(mut p: Problem, out: &Path) -> Outcome {
    let d = prepare(&mut p, out)?;
    let mut s_values = p.config.shift.values().map_err(config_error)?;
    let mut folds = Vec::new();
    if p.config.shift.include_folds && d.fiber_dim() == 1 {
        let (lo, hi) = (p.config.scan.t_min.clone().unwrap(), p.config.scan.t_max.clone().unwrap());
        let res = p.config.scan.resolution.unwrap();
        folds = fold_values_1d(&d, &p.f, &p.g, lo[0], hi[0], res, &p.config.tolerances).map_err(library_error)?;
        s_values.extend(folds.iter().map(|f| f.1));
    }
    s_values.sort_by(f64::total_cmp);
    s_values.dedup();
    info!("scanning {} shift values", s_values.len());
    let results = ap_scan(&d, &p.f, &p.g, &s_values, &p.config.scan, &p.config.tolerances).map_err(library_error)?;
    let points: Vec<_> = results.iter().map(|r| r.0).collect();
    fs::create_dir_all(out).map_err(io_error)?;
    fs::write(out.join("scan.csv"), scan_csv(&points)).map_err(io_error)?;
    let fold_json: Vec<_> = folds.iter().map(|(t, s)| json!({"t": t, "s": s})).collect();
    write_json(&out.join("scan.json"), &json!({"folds": fold_json, "points": points}))?;
    for (t, s) in &folds {
        println!("fold at t = {t:.9}, s* = {s:.9}");
    }
    for pt in &points {
        let cont = if pt.continuum { " + continuum" } else { "" };
        println!("s = {:>14.9}: {} solution(s){cont}", pt.s, pt.count);
    }
    Ok(0)
}

pub fn oracle(mut p: Problem, out: &Path) -> Outcome {
    p.decomposition().map(|d| p.resolve(&d)).map_err(library_error)?;
    write_json(&out.join("config.resolved.json"), &p.config)?;
    let set = newton_multistart_oracle(&p.basis, &p.f, &p.g, &p.config.oracle).map_err(library_error)?;
    write_solution_set(out.join("oracle"), &set, &p.g, None).map_err(library_error)?;
    println!(
        "oracle: {} distinct solution(s) from {} starts ({} failed)",
        set.count(),
        p.config.oracle.n_starts,
        set.meta.failures
    );
    if let Some(psi) = p.halfline_profile() {
        let on_psi: Vec<Solution> = set
            .solutions
            .iter()
            .filter(|s| s.u.inner_l2(&psi).map(|x| x >= 0.0).unwrap_or(false))
            .cloned()
            .collect();
        let defect = collinearity_defect(&on_psi, &psi).map_err(library_error)?;
        println!(
            "half-line: {} point(s) on the psi side, collinearity defect {defect:.3e}",
            on_psi.len()
        );
    }
    let manifest = out.join("manifest.json");
    if !manifest.exists() {
        return Ok(0);
    }
    let (m, us) = read_solution_set(out, p.grid).map_err(library_error)?;
    if m.continuum_count > 0 {
        println!("the fiber run reports continua; count comparison skipped");
        return Ok(0);
    }
    let fiber = SolutionSet {
        solutions: us
            .into_iter()
            .zip(&m.solutions)
            .map(|(u, e)| Solution {
                u,
                t: e.t.clone(),
                residual: e.residual,
                tangential: e.tangential,
                bracket: e.bracket,
            })
            .collect(),
        continua: Vec::new(),
        meta: m.scan.clone(),
    };
    let cmp = fiber.compare(&set, 1e-6);
    write_json(&out.join("oracle").join("comparison.json"), &cmp)?;
    match cmp.max_distance {
        Some(dist) => println!(
            "fiber {} vs oracle {}: largest matched distance {dist:.3e}",
            cmp.count_a, cmp.count_b
        ),
        None => println!("fiber {} vs oracle {}: counts differ", cmp.count_a, cmp.count_b),
    }
    Ok(if cmp.agree { 0 } else { 6 })
}

pub fn gallery(cmd: &GalleryCmd, out: &Path) -> Outcome {
    fs::create_dir_all(out).map_err(io_error)?;
    let passed = match cmd {
        GalleryCmd::Flat { n, a, b } => {
            write_json(&out.join("config.resolved.json"), &json!({"preset": "flat", "n": n, "a": a, "b": b}))?;
            let grid = Interval1D::unit_pi(*n).map_err(library_error)?;
            let seg = build_flat_segment(grid, *a, *b).map_err(library_error)?;
            let report = seg.verify(*a, *b, 1e-10);
            println!("lambda_1^h = {:.12}, M = {:.12}", report.lambda1, report.m);
            for (t, r) in &report.segment {
                println!("  t = {t:<5} ||F(t phi_1)||_0 = {r:.3e}");
            }
            println!("  t = {:<5} ||F(t phi_1)||_0 = {:.3e} (off the segment)", report.outside.0, report.outside.1);
            write_json(&out.join("report.json"), &report)?;
            report.passed
        }
        GalleryCmd::Halfline { k, a, ns, ps } => {
            write_json(
                &out.join("config.resolved.json"),
                &json!({"preset": "halfline", "k": k, "a": a, "ns": ns, "ps": ps}),
            )?;
            let report = verify_halfline(*k, *a, ns, ps).map_err(library_error)?;
            let inst = build_halfline(*k, *a, Interval1D::unit_pi(ns[0]).map_err(library_error)?).map_err(library_error)?;
            write_grid_function_csv(out.join("psi.csv"), &inst.psi).map_err(library_error)?;
            println!("b = {:.12}", report.instance.b);
            println!("lengths {:?}", report.instance.lengths);
            for (p, order) in &report.orders {
                println!("  p = {p:<4} fitted order {order:.3}");
            }
            let worst = report.ray.iter().map(|r| r.height / r.bound).fold(0.0, f64::max);
            println!("  residuals decreasing: {}", report.decreasing);
            println!("  ray heights: max |height| / (10 h) = {worst:.3e}");
            write_json(&out.join("report.json"), &report)?;
            report.passed
        }
        GalleryCmd::Separable2d { k, a, ns, ps } => {
            write_json(
                &out.join("config.resolved.json"),
                &json!({"preset": "separable2d", "k": k, "a": a, "ns": ns, "ps": ps}),
            )?;
            let report = verify_separable_2d(*k, *a, ns, ps).map_err(library_error)?;
            println!("b = {:.12}, slopes of f + x in {:?}", report.b, report.slope_range);
            for (p, order) in &report.orders {
                println!("  p = {p:<4} fitted order {order:.3}");
            }
            println!("  p-scaling defect {:.3e}", report.scaling_defect);
            write_json(&out.join("report.json"), &report)?;
            report.passed
        }
        GalleryCmd::Symmetric { n, beta, e0 } => {
            write_json(
                &out.join("config.resolved.json"),
                &json!({"preset": "symmetric", "n": n, "beta": beta, "e0": e0}),
            )?;
            let grid = Interval1D::new(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2, *n)
                .map_err(library_error)?;
            let ex = build_symmetric_example(grid, *beta, *e0).map_err(library_error)?;
            println!("lambda_2^h = {:.12}", ex.lambda2);
            for r in &ex.report.rows {
                println!("  t = {:<5} <F(t phi_2), phi_2> = {:.3e}  ||F|| = {:.3e}", r.t, r.inner, r.norm_f);
            }
            let control = symmetric_negative_control(grid, *beta).map_err(library_error)?;
            let largest = control.iter().map(|r| r.inner.abs()).fold(0.0, f64::max);
            println!("  odd control: largest |<F(t phi_2), phi_2>| = {largest:.3e}");
            write_json(&out.join("report.json"), &json!({"report": ex.report, "odd_control": control}))?;
            ex.report.passed
        }
    };
    println!("{}", if passed { "verification passed" } else { "verification FAILED" });
    Ok(if passed { 0 } else { 5 })
}
