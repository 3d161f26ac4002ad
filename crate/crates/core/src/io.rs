//! CSV and JSON persistence. Every float is written with 17 significant
//! digits, so grid functions survive a round trip bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::decomp::DecompSummary;
use crate::enumerate::{Continuum, ScanMetadata, ScanPoint, SolutionSet};
use crate::error::{Error, Result};
use crate::fiber::{FiberTrace, SolverParams};
use crate::grid::{Grid, GridFunction};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("line {line}: {e}: {s:?}")))
}

/// SHA-256 of the little-endian bytes of the node values, as hex.
pub fn g_hash(u: &GridFunction) -> String {
    let mut hasher = Sha256::new();
    for v in u.values() {
        hasher.update(v.to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

pub fn grid_function_csv(u: &GridFunction) -> String {
    let mut out = String::new();
    match u.grid() {
        Grid::Line(line) => {
            out.push_str("x,value\n");
            for (j, v) in u.values().iter().enumerate() {
                let _ = writeln!(out, "{},{}", num(line.node(j)), num(*v));
            }
        }
        Grid::Rect(rect) => {
            out.push_str("x,y,value\n");
            let ny = rect.y.n;
            for (k, v) in u.values().iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", num(rect.x.node(k / ny)), num(rect.y.node(k % ny)), num(*v));
            }
        }
    }
    out
}

pub fn write_grid_function_csv(path: impl AsRef<Path>, u: &GridFunction) -> Result<()> {
    fs::write(path, grid_function_csv(u))?;
    Ok(())
}

/// Reads the `value` column of a grid-function CSV and checks the node
/// coordinates against `grid`.
pub fn parse_grid_function_csv(text: &str, grid: Grid) -> Result<GridFunction> {
    let coords = match grid {
        Grid::Line(_) => 1,
        Grid::Rect(_) => 2,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
    if header.split(',').count() != coords + 1 {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut values = Vec::with_capacity(grid.len());
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != coords + 1 {
            return Err(Error::Parse(format!("line {}: expected {} fields", i + 1, coords + 1)));
        }
        let k = values.len();
        let expect: Vec<f64> = match grid {
            Grid::Line(l) => vec![l.node(k)],
            Grid::Rect(r) => vec![r.x.node(k / r.y.n), r.y.node(k % r.y.n)],
        };
        for (f, e) in fields.iter().zip(&expect) {
            let x = parse(f, i + 1)?;
            if (x - e).abs() > 1e-9 * (1.0 + e.abs()) {
                return Err(Error::Parse(format!("line {}: node {x} does not match the grid ({e})", i + 1)));
            }
        }
        values.push(parse(fields[coords], i + 1)?);
    }
    GridFunction::new(grid, values)
}

pub fn read_grid_function_csv(path: impl AsRef<Path>, grid: Grid) -> Result<GridFunction> {
    parse_grid_function_csv(&fs::read_to_string(path)?, grid)
}

/// Columns `t_1..t_k, height_1..height_k, iterations, residual_horizontal`.
pub fn trace_csv(trace: &FiberTrace) -> String {
    let k = trace.decomposition.fiber_dim;
    let mut cols: Vec<String> = (1..=k).map(|i| format!("t_{i}")).collect();
    cols.extend((1..=k).map(|i| format!("height_{i}")));
    cols.push("iterations".into());
    cols.push("residual_horizontal".into());
    let mut out = cols.join(",");
    out.push('\n');
    for s in &trace.samples {
        let mut row: Vec<String> = s.t.iter().chain(&s.height).map(|x| num(*x)).collect();
        row.push(s.iterations.to_string());
        row.push(num(s.residual_horizontal));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSidecar {
    pub g_hash: String,
    pub decomposition: DecompSummary,
    pub params: SolverParams,
    pub samples: usize,
}

/// Writes the trace CSV and a `.json` sidecar next to it.
pub fn write_trace(path: impl AsRef<Path>, trace: &FiberTrace) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, trace_csv(trace))?;
    let sidecar = TraceSidecar {
        g_hash: g_hash(&trace.g),
        decomposition: trace.decomposition.clone(),
        params: trace.params,
        samples: trace.samples.len(),
    };
    fs::write(path.with_extension("json"), serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionEntry {
    pub index: usize,
    pub file: String,
    pub t: Vec<f64>,
    pub residual: f64,
    pub tangential: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub count: usize,
    pub continuum_count: usize,
    pub g_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompSummary>,
    pub solutions: Vec<SolutionEntry>,
    pub continua: Vec<Continuum>,
    pub scan: ScanMetadata,
}

impl Manifest {
    pub fn new(set: &SolutionSet, g: &GridFunction, decomposition: Option<DecompSummary>) -> Self {
        Manifest {
            count: set.count(),
            continuum_count: set.continua.len(),
            g_hash: g_hash(g),
            decomposition,
            solutions: set
                .solutions
                .iter()
                .enumerate()
                .map(|(i, s)| SolutionEntry {
                    index: i,
                    file: format!("solutions/sol_{i}.csv"),
                    t: s.t.clone(),
                    residual: s.residual,
                    tangential: s.tangential,
                    bracket: s.bracket,
                })
                .collect(),
            continua: set.continua.clone(),
            scan: set.meta.clone(),
        }
    }
}

/// Writes `manifest.json` and `solutions/sol_<i>.csv` under `dir`.
pub fn write_solution_set(dir: impl AsRef<Path>, set: &SolutionSet, g: &GridFunction, decomposition: Option<DecompSummary>) -> Result<Manifest> {
    let dir = dir.as_ref();
    let sol_dir = dir.join("solutions");
    fs::create_dir_all(&sol_dir)?;
    let manifest = Manifest::new(set, g, decomposition);
    for (i, s) in set.solutions.iter().enumerate() {
        write_grid_function_csv(sol_dir.join(format!("sol_{i}.csv")), &s.u)?;
    }
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Loads the solutions listed in a manifest written by [`write_solution_set`].
pub fn read_solution_set(dir: impl AsRef<Path>, grid: Grid) -> Result<(Manifest, Vec<GridFunction>)> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir.join("manifest.json"))?;
    let sols = manifest
        .solutions
        .iter()
        .map(|e| read_grid_function_csv(dir.join(&e.file), grid))
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, sols))
}

/// Columns `s,count,continuum`.
pub fn scan_csv(points: &[ScanPoint]) -> String {
    let mut out = String::from("s,count,continuum\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", num(p.s), p.count, p.continuum);
    }
    out
}
