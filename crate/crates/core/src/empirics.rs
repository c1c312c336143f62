//! Empirical spectral distributions of sampled percolation graphs.
//!
//! Expected ESDs are averaged on a fixed grid: every trial contributes the
//! integer count of eigenvalues `≤ x_k`, so the average does not depend on the
//! order in which trials finish.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::DEFAULT_DENSE_CAP;
use crate::percolation::{
    scaled_adjacency, symmetric_normalized_adjacency, zero_degree_count, PercolationModel,
    SampleSeed,
};
use crate::stieltjes::{interpolate, DensityCurve, Grid};

/// Trials evaluated per parallel batch.
const BATCH: usize = 32;

/// Eigenvalues of a dense symmetric matrix, ascending.
///
/// Householder tridiagonalisation followed by implicit symmetric QR, via
/// `nalgebra`.
pub fn eigenvalues_symmetric(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::Domain(format!(
            "matrix is {}x{}, not square",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let scale = m.amax().max(1.0);
    for i in 0..n {
        for j in i + 1..n {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Domain(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut eig: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Sorted eigenvalues of `W = A/γ` for one sampled graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSample {
    pub eigenvalues: Vec<f64>,
    pub dims: Vec<usize>,
    pub p: f64,
    pub seed: SampleSeed,
    /// Links present in the sample.
    pub edges: usize,
    pub zero_degree: usize,
}

impl SpectrumSample {
    pub fn draw(model: &PercolationModel, seed: SampleSeed) -> Result<Self> {
        Self::draw_capped(model, seed, DEFAULT_DENSE_CAP)
    }

    pub fn draw_capped(model: &PercolationModel, seed: SampleSeed, cap: usize) -> Result<Self> {
        let a = model.sample_adjacency_capped(seed, cap)?;
        let w = scaled_adjacency(&a, model.lattice());
        Ok(Self {
            eigenvalues: eigenvalues_symmetric(&w)?,
            dims: model.lattice().dims().to_vec(),
            p: model.p(),
            seed,
            edges: (a.sum() / 2.0).round() as usize,
            zero_degree: zero_degree_count(&a),
        })
    }
}

/// A distribution function tabulated on a grid.
pub trait GridCdf {
    fn abscissae(&self) -> &[f64];
    fn values(&self) -> &[f64];

    /// Linear interpolation between grid nodes, flat outside.
    fn evaluate(&self, x: f64) -> f64 {
        interpolate(self.abscissae(), self.values(), x)
    }
}

impl GridCdf for DensityCurve {
    fn abscissae(&self) -> &[f64] {
        &self.x
    }

    fn values(&self) -> &[f64] {
        &self.cdf
    }
}

/// Empirical (or trial-averaged) spectral distribution on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalCdf {
    pub x: Vec<f64>,
    pub cdf: Vec<f64>,
    pub trials: usize,
}

impl GridCdf for EmpiricalCdf {
    fn abscissae(&self) -> &[f64] {
        &self.x
    }

    fn values(&self) -> &[f64] {
        &self.cdf
    }
}

/// Counts of sorted eigenvalues `≤ x_k`.
fn counts_at(sorted: &[f64], x: &[f64]) -> Vec<u64> {
    x.iter()
        .map(|&xk| sorted.partition_point(|&l| l <= xk) as u64)
        .collect()
}

/// Right-continuous ESD `F(x_k) = #{λ_i ≤ x_k} / N` of sorted eigenvalues.
pub fn esd_of(sorted: &[f64], grid: &Grid) -> EmpiricalCdf {
    let x = grid.points();
    let n = sorted.len().max(1) as f64;
    let cdf = counts_at(sorted, &x)
        .into_iter()
        .map(|c| c as f64 / n)
        .collect();
    EmpiricalCdf { x, cdf, trials: 1 }
}

pub fn esd(sample: &SpectrumSample, grid: &Grid) -> EmpiricalCdf {
    esd_of(&sample.eigenvalues, grid)
}

/// Trial-averaged ESD plus per-trial isolated-node counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedEsd {
    pub cdf: EmpiricalCdf,
    pub master_seed: u64,
    pub zero_degree_counts: Vec<usize>,
}

impl ExpectedEsd {
    pub fn mean_zero_degree(&self) -> f64 {
        let n = self.zero_degree_counts.len().max(1) as f64;
        self.zero_degree_counts.iter().sum::<usize>() as f64 / n
    }

    pub fn max_zero_degree(&self) -> usize {
        self.zero_degree_counts.iter().copied().max().unwrap_or(0)
    }
}

/// `E[F_W]` estimated over `trials` samples with trial seeds `(master_seed, t)`.
pub fn expected_esd(
    model: &PercolationModel,
    trials: usize,
    master_seed: u64,
    grid: &Grid,
) -> Result<ExpectedEsd> {
    expected_esd_capped(model, trials, master_seed, grid, DEFAULT_DENSE_CAP)
}

pub fn expected_esd_capped(
    model: &PercolationModel,
    trials: usize,
    master_seed: u64,
    grid: &Grid,
    cap: usize,
) -> Result<ExpectedEsd> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    grid.validate()?;
    model.lattice().check_dense_cap(cap)?;
    let x = grid.points();
    let mut totals = vec![0u64; x.len()];
    let mut zero_degree_counts = Vec::with_capacity(trials);
    let ids: Vec<u64> = (0..trials as u64).collect();
    for batch in ids.chunks(BATCH) {
        let results: Vec<Result<(Vec<u64>, usize)>> = batch
            .par_iter()
            .map(|&t| {
                let s = SpectrumSample::draw_capped(model, SampleSeed::new(master_seed, t), cap)?;
                Ok((counts_at(&s.eigenvalues, &x), s.zero_degree))
            })
            .collect();
        for r in results {
            let (counts, zero) = r?;
            for (acc, c) in totals.iter_mut().zip(counts) {
                *acc += c;
            }
            zero_degree_counts.push(zero);
        }
    }
    let denom = (trials * model.lattice().node_count()) as f64;
    Ok(ExpectedEsd {
        cdf: EmpiricalCdf {
            x,
            cdf: totals.into_iter().map(|c| c as f64 / denom).collect(),
            trials,
        },
        master_seed,
        zero_degree_counts,
    })
}

fn check_shared_grid<A: GridCdf + ?Sized, B: GridCdf + ?Sized>(a: &A, b: &B) -> Result<()> {
    let (xa, xb) = (a.abscissae(), b.abscissae());
    if xa.len() != xb.len() {
        return Err(Error::GridMismatch(format!(
            "{} points vs {} points",
            xa.len(),
            xb.len()
        )));
    }
    if xa.is_empty() {
        return Err(Error::GridMismatch("empty grid".into()));
    }
    for (k, (p, q)) in xa.iter().zip(xb).enumerate() {
        if (p - q).abs() > 1e-12 * p.abs().max(q.abs()).max(1.0) {
            return Err(Error::GridMismatch(format!(
                "abscissa {k} differs: {p} vs {q}"
            )));
        }
    }
    Ok(())
}

/// `max_k |F(x_k) − G(x_k)|` over the shared grid.
pub fn ks_distance<A: GridCdf + ?Sized, B: GridCdf + ?Sized>(a: &A, b: &B) -> Result<f64> {
    check_shared_grid(a, b)?;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(f, g)| (f - g).abs())
        .fold(0.0, f64::max))
}

/// Lévy distance with the resolution it was computed to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevyDistance {
    pub value: f64,
    pub resolution: f64,
}

/// Smallest `ε` with `F(x−ε) − ε ≤ G(x) ≤ F(x+ε) + ε` at every grid node,
/// found by bisection to half the grid spacing. `F` is interpolated linearly
/// between nodes. The KS distance always satisfies the condition and serves as
/// the upper bracket.
pub fn levy_distance<A: GridCdf + ?Sized, B: GridCdf + ?Sized>(
    a: &A,
    b: &B,
) -> Result<LevyDistance> {
    let ks = ks_distance(a, b)?;
    let x = a.abscissae();
    let resolution = if x.len() > 1 {
        (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64 / 2.0
    } else {
        0.0
    };
    let g = b.values();
    let holds = |eps: f64| {
        x.iter()
            .zip(g)
            .all(|(&xk, &gk)| a.evaluate(xk - eps) - eps <= gk && gk <= a.evaluate(xk + eps) + eps)
    };
    if holds(0.0) {
        return Ok(LevyDistance {
            value: 0.0,
            resolution,
        });
    }
    let (mut lo, mut hi) = (0.0, ks);
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(LevyDistance {
        value: hi,
        resolution,
    })
}

/// Per-trial Lévy distances between `F_{p√γ Â}` and `F_{√γ W}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedComparison {
    pub levy_per_trial: Vec<f64>,
    pub levy_mean: f64,
    pub levy_std: f64,
    pub resolution: f64,
    pub zero_degree_counts: Vec<usize>,
}

/// Grid wide enough for both `√γ W` and `p√γ Â`, whose spectra lie in
/// `[−√γ, √γ]`.
pub fn normalized_grid(model: &PercolationModel, n_points: usize) -> Result<Grid> {
    let r = (model.lattice().gamma() as f64).sqrt() * 1.05;
    Grid::new(-r, r, n_points, 1e-3)
}

/// Compares the row-normalised adjacency `Â = Δ⁻¹A` (scaled by `p√γ`) with the
/// scaled adjacency `W` (scaled by `√γ`) on the same samples. `Â` is
/// diagonalised through its symmetric similar form `Δ^{-1/2} A Δ^{-1/2}`.
pub fn normalized_comparison(
    model: &PercolationModel,
    trials: usize,
    master_seed: u64,
    grid: &Grid,
) -> Result<NormalizedComparison> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    grid.validate()?;
    let spec = model.lattice();
    spec.check_dense_cap(DEFAULT_DENSE_CAP)?;
    let root_gamma = (spec.gamma() as f64).sqrt();
    let p = model.p();
    let per_trial: Vec<Result<(LevyDistance, usize)>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let a = model.sample_adjacency(SampleSeed::new(master_seed, t))?;
            let w_eigs: Vec<f64> = eigenvalues_symmetric(&scaled_adjacency(&a, spec))?
                .into_iter()
                .map(|l| root_gamma * l)
                .collect();
            let n_eigs: Vec<f64> = eigenvalues_symmetric(&symmetric_normalized_adjacency(&a))?
                .into_iter()
                .map(|l| p * root_gamma * l)
                .collect();
            let d = levy_distance(&esd_of(&n_eigs, grid), &esd_of(&w_eigs, grid))?;
            Ok((d, zero_degree_count(&a)))
        })
        .collect();
    let mut levy_per_trial = Vec::with_capacity(trials);
    let mut zero_degree_counts = Vec::with_capacity(trials);
    let mut resolution = 0.0;
    for r in per_trial {
        let (d, z) = r?;
        levy_per_trial.push(d.value);
        resolution = d.resolution;
        zero_degree_counts.push(z);
    }
    let n = trials as f64;
    let levy_mean = levy_per_trial.iter().sum::<f64>() / n;
    let levy_std = if trials > 1 {
        (levy_per_trial
            .iter()
            .map(|d| (d - levy_mean).powi(2))
            .sum::<f64>()
            / (n - 1.0))
            .sqrt()
    } else {
        0.0
    };
    Ok(NormalizedComparison {
        levy_per_trial,
        levy_mean,
        levy_std,
        resolution,
        zero_degree_counts,
    })
}

/// Eigenvalues of the row-normalised Laplacian `L̂ = I − Δ⁻¹A`, ascending.
pub fn normalized_laplacian_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let mut eig: Vec<f64> = eigenvalues_symmetric(&symmetric_normalized_adjacency(a))?
        .into_iter()
        .map(|l| 1.0 - l)
        .collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// `‖(I − Â)x‖_p^p` for a shift matrix `Â`.
pub fn total_variation(shift: &DMatrix<f64>, x: &[f64], p_norm: f64) -> Result<f64> {
    if !shift.is_square() || shift.nrows() != x.len() {
        return Err(Error::Domain(format!(
            "shift is {}x{} but signal has length {}",
            shift.nrows(),
            shift.ncols(),
            x.len()
        )));
    }
    if p_norm.is_nan() || p_norm < 1.0 {
        return Err(Error::Domain(format!(
            "norm exponent must be ≥ 1, got {p_norm}"
        )));
    }
    Ok((0..x.len())
        .map(|i| {
            let avg: f64 = shift.row(i).iter().zip(x).map(|(a, v)| a * v).sum();
            (x[i] - avg).abs().powf(p_norm)
        })
        .sum())
}

/// Eigenvalues within this distance of zero count as consensus modes.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsensusRate {
    pub rate: f64,
    /// More than one eigenvalue was within [`ZERO_EIGENVALUE_TOL`] of zero.
    pub disconnected: bool,
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// `max_{i≥2} |P(λ_i)|^{1/d}` for a polynomial filter with `P(0) = 1`,
/// coefficients in ascending powers. All near-zero eigenvalues are excluded;
/// a degree of zero is treated as one.
pub fn consensus_rate(
    coeffs: &[f64],
    laplacian_eigs: &[f64],
    degree: usize,
) -> Result<ConsensusRate> {
    let p0 = coeffs.first().copied().unwrap_or(0.0);
    if (p0 - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "filter must satisfy P(0) = 1, got {p0}"
        )));
    }
    let d = degree.max(1) as f64;
    let zeros = laplacian_eigs
        .iter()
        .filter(|l| l.abs() <= ZERO_EIGENVALUE_TOL)
        .count();
    let rate = laplacian_eigs
        .iter()
        .filter(|l| l.abs() > ZERO_EIGENVALUE_TOL)
        .map(|&l| horner(coeffs, l).abs().powf(1.0 / d))
        .fold(0.0, f64::max);
    Ok(ConsensusRate {
        rate,
        disconnected: zeros > 1,
    })
}

/// Coefficients of `∏ (1 − λ/λ_i)` over the distinct nonzero eigenvalues,
/// the finite-time consensus filter.
pub fn finite_time_consensus_filter(laplacian_eigs: &[f64]) -> Vec<f64> {
    let mut roots: Vec<f64> = Vec::new();
    for &l in laplacian_eigs {
        if l.abs() > ZERO_EIGENVALUE_TOL
            && roots.iter().all(|r| (r - l).abs() > ZERO_EIGENVALUE_TOL)
        {
            roots.push(l);
        }
    }
    let mut coeffs = vec![1.0];
    for r in roots {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (k, &c) in coeffs.iter().enumerate() {
            next[k] += c;
            next[k + 1] -= c / r;
        }
        coeffs = next;
    }
    coeffs
}
