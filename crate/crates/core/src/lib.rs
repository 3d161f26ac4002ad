//! Solution sets of discretized semilinear Dirichlet problems
//! `-Delta u - f(u) = g` whose nonlinearity has slopes confined to a band
//! `[a, b]` that may straddle eigenvalues of `-Delta`.
//!
//! The solution set is reduced to the zero set of a finite-dimensional height
//! map over the span of the eigenfunctions inside the band:
//!
//! * [`grid`]: grids, grid functions, the sine basis and discrete norms.
//! * [`nonlin`]: Lipschitz nonlinearities with slopes in a band.
//! * [`decomp`]: the splitting into vertical (band) and horizontal parts.
//! * [`fiber`]: contraction inversion of the horizontal map, fibers and heights.
//! * [`enumerate`]: zero finding on fibers, a Newton oracle and parameter scans.
//! * [`gallery`]: explicit instances with known degenerate solution sets.
//! * [`io`]: CSV and JSON persistence.

pub mod decomp;
pub mod enumerate;
pub mod error;
pub mod fiber;
pub mod gallery;
pub mod grid;
pub mod io;
pub mod nonlin;

pub use decomp::{DecompSummary, IDecomposition};
pub use error::{Error, Result};
pub use fiber::{
    apply_operator, fiber_point, height_map, invert_fv, phi_inverse_point, sheet_sample, trace_fiber, Fiber,
    FiberPoint, FiberTrace, Inversion, SolverParams,
};
pub use grid::{Grid, GridFunction, Interval1D, Rect2D, SpectralBasis};
pub use nonlin::{LipschitzNonlinearity, NonlinSpec};
