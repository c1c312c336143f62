//! Stieltjes transforms on grids and their inversion to densities.
//!
//! At finite `ε` the density is `f(x) = Im S(x + iε) / π`; the distribution
//! function is the cumulative trapezoid of `f` from the left end of the grid.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::{CanonicalSystem, EvaluationPoint, SolverOptions};
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;

/// Densities above this (negative) floor are clamped to zero.
pub const NEGATIVE_DENSITY_FLOOR: f64 = -1e-12;

/// Points solved sequentially with warm starts; chunks run in parallel.
const CHUNK: usize = 64;

/// Upper bound on [`integration_refinement`].
const MAX_REFINEMENT: usize = 256;

/// Uniform abscissae plus the imaginary offset used for inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub epsilon: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize, epsilon: f64) -> Result<Self> {
        let g = Self {
            x_min,
            x_max,
            n_points,
            epsilon,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) {
            return Err(Error::Domain(format!(
                "grid needs finite x_min < x_max, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        if self.n_points < 2 {
            return Err(Error::Domain("grid needs at least two points".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Domain("epsilon must be positive".into()));
        }
        Ok(())
    }

    /// Window around the expected spectrum `p Λ_j / γ`, widened by five
    /// fluctuation scales `σ = √(p(1−p)/γ)` and padded by 10% on each side.
    pub fn default_window(
        spec: &LatticeSpec,
        p: f64,
        n_points: usize,
        epsilon: f64,
    ) -> Result<Self> {
        let gamma = spec.gamma() as f64;
        let (lo, hi) = spec
            .deterministic_spectrum()
            .iter()
            .map(|a| p * a.eigenvalue / gamma)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        let sigma = (p * (1.0 - p) / gamma).sqrt();
        let (lo, hi) = (lo - 5.0 * sigma, hi + 5.0 * sigma);
        let width = hi - lo;
        if width > 0.0 {
            Self::new(lo - 0.1 * width, hi + 0.1 * width, n_points, epsilon)
        } else {
            Self::new(lo - 1.0, hi + 1.0, n_points, epsilon)
        }
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_points)
            .map(|k| {
                if k + 1 == self.n_points {
                    self.x_max
                } else {
                    self.x_min + k as f64 * h
                }
            })
            .collect()
    }
}

/// Per-curve solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    pub points: usize,
    /// Points solved, including those of the refined integration mesh.
    pub integration_points: usize,
    pub max_iterations: usize,
    pub total_iterations: usize,
    pub max_residual: f64,
    /// Every point satisfied `Im(z)·Im(S) > 0`.
    pub class_l: bool,
    /// Points whose density fell in `[NEGATIVE_DENSITY_FLOOR, 0)` and was clamped.
    pub clamped: usize,
}

/// Deterministic-equivalent density and distribution on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub grid: Grid,
    pub x: Vec<f64>,
    /// Density `f`, per unit of `x`.
    pub f: Vec<f64>,
    /// Distribution function `F`.
    pub cdf: Vec<f64>,
    pub diagnostics: SolveDiagnostics,
}

impl DensityCurve {
    /// Linear interpolation of `F`, clamped to the end values outside the grid.
    pub fn cdf_value(&self, x: f64) -> f64 {
        interpolate(&self.x, &self.cdf, x)
    }
}

/// Free-function form of [`DensityCurve::cdf_value`].
pub fn cdf_value(curve: &DensityCurve, x: f64) -> f64 {
    curve.cdf_value(x)
}

/// Piecewise-linear interpolation on ascending `xs`, flat beyond the ends.
pub(crate) fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[k - 1], xs[k]);
    let t = (x - x0) / (x1 - x0);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}

/// Subintervals per grid cell for integrating the density: the smoothed
/// density has peaks of width `ε`, which the trapezoid rule only resolves when
/// the mesh spacing is at most `ε/2`.
pub fn integration_refinement(grid: &Grid) -> usize {
    ((2.0 * grid.spacing() / grid.epsilon).ceil() as usize).clamp(1, MAX_REFINEMENT)
}

fn refined_mesh(x: &[f64], sub: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity((x.len() - 1) * sub + 1);
    for w in x.windows(2) {
        let h = (w[1] - w[0]) / sub as f64;
        out.push(w[0]);
        out.extend((1..sub).map(|j| w[0] + j as f64 * h));
    }
    out.push(x[x.len() - 1]);
    out
}

/// Solves the canonical system at `x + iε` and inverts. `f` is reported on
/// the grid; `F` integrates `f` on a mesh refined by
/// [`integration_refinement`], so narrow peaks keep their mass.
///
/// `|g_j| ≤ 1/ε` on the grid, so the residual bound is applied relative to
/// that scale: each point is solved to `opts.tolerance · max(1, 1/ε)`.
pub fn density_on_grid(
    spec: &LatticeSpec,
    p: f64,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<DensityCurve> {
    grid.validate()?;
    opts.validate()?;
    let opts = &grid_options(opts, grid.epsilon);
    let system = CanonicalSystem::new(spec, p)?;
    let x = grid.points();
    let eps = grid.epsilon;
    let sub = integration_refinement(grid);
    let mesh = if sub == 1 {
        x.clone()
    } else {
        refined_mesh(&x, sub)
    };

    let chunks: Vec<Result<Vec<(Complex64, usize, f64)>>> = mesh
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut out = Vec::with_capacity(chunk.len());
            let mut start: Option<Complex64> = None;
            for &xk in chunk {
                let z = EvaluationPoint::from_parts(xk, eps)?;
                let solved = match start {
                    Some(s) => system.solve_from(z, s, opts),
                    None => system.solve(z, opts),
                };
                let sol = solved.map_err(|e| Error::AtGridPoint {
                    x: xk,
                    source: Box::new(e),
                })?;
                start = Some(sol.stieltjes());
                out.push((sol.stieltjes(), sol.iterations, sol.residual));
            }
            Ok(out)
        })
        .collect();

    let mut f = Vec::with_capacity(mesh.len());
    let mut diagnostics = SolveDiagnostics {
        points: x.len(),
        integration_points: mesh.len(),
        max_iterations: 0,
        total_iterations: 0,
        max_residual: 0.0,
        class_l: true,
        clamped: 0,
    };
    for chunk in chunks {
        for (s, iterations, residual) in chunk? {
            diagnostics.max_iterations = diagnostics.max_iterations.max(iterations);
            diagnostics.total_iterations += iterations;
            diagnostics.max_residual = diagnostics.max_residual.max(residual);
            diagnostics.class_l &= s.im * eps > 0.0;
            let xk = mesh[f.len()];
            let density = s.im / std::f64::consts::PI;
            if density < NEGATIVE_DENSITY_FLOOR {
                return Err(Error::AtGridPoint {
                    x: xk,
                    source: Box::new(Error::Domain(format!("negative density {density:e}"))),
                });
            }
            if density < 0.0 {
                diagnostics.clamped += 1;
            }
            f.push(density.max(0.0));
        }
    }

    let cdf_fine = cumulative_trapezoid(&mesh, &f);
    let (f, cdf) = if sub == 1 {
        (f, cdf_fine)
    } else {
        let pick = |v: &[f64]| v.iter().step_by(sub).copied().collect::<Vec<_>>();
        (pick(&f), pick(&cdf_fine))
    };
    Ok(DensityCurve {
        grid: *grid,
        x,
        f,
        cdf,
        diagnostics,
    })
}

/// Solver options used at every point of a grid with offset `epsilon`.
pub fn grid_options(opts: &SolverOptions, epsilon: f64) -> SolverOptions {
    SolverOptions {
        tolerance: opts.tolerance * (1.0 / epsilon).max(1.0),
        ..*opts
    }
}

/// Running trapezoid integral starting at zero, clamped to `[0, 1]`.
pub(crate) fn cumulative_trapezoid(x: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..x.len() {
        acc += 0.5 * (f[k] + f[k - 1]) * (x[k] - x[k - 1]);
        out.push(acc.clamp(0.0, 1.0));
    }
    out
}

/// `(1/N) Σ_i 1/(λ_i − z)`.
pub fn empirical_stieltjes(eigenvalues: &[f64], z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 {
        return Err(Error::Domain(format!("z = {z} lies on the real axis")));
    }
    if eigenvalues.is_empty() {
        return Err(Error::Domain("no eigenvalues".into()));
    }
    let sum: Complex64 = eigenvalues.iter().map(|&l| (l - z).inv()).sum();
    Ok(sum / eigenvalues.len() as f64)
}
