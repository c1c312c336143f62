//! Reduced canonical system for lattice percolation.
//!
//! The deterministic-equivalent resolvent of `W = A/γ` has the form
//! `C(z) = Σ_i α_i(z) ⊗_d Y_{d,i_d}` with `Y_{d,0} = K_{M_d}` and `Y_{d,1} = I`,
//! one coefficient per `i ∈ {0,1}^D`. Diagonalising every term simultaneously
//! turns the N-equation system into `2^D` rational equations `X α = g(α)`,
//! where `X[j][i] = ∏_d λ_{d,i_d}(j_d)` and
//!
//! ```text
//! g_j(α) = 1 / ( (p/γ) Λ_j − z − (p(1−p)/γ) α_{1,…,1} )
//! ```
//!
//! with `Λ_j` the lattice adjacency eigenvalue of index `j`. The Stieltjes
//! transform of the deterministic equivalent is `α_{1,…,1}`.
//!
//! Coefficients are stored in lexicographic order of `(i_1, …, i_D)` with
//! `i_1` most significant, so `α_{1,…,1}` is the last entry.
//!
//! `g` depends on `α` only through `α_{1,…,1}`, and the trace of `C` gives
//! `α_{1,…,1} = (1/N) Σ_j mult(j) g_j`. [`CanonicalSystem::solve`] iterates
//! that scalar equation and recovers the full vector with one linear solve;
//! [`CanonicalSystem::solve_vector_iteration`] runs the plain
//! `α ← X⁻¹ g(α)` iteration over all `2^D` coefficients.

use nalgebra::{DMatrix, DVector, LU};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{eigen_bits, LatticeSpec};
use crate::percolation::check_probability;

/// Smallest damping factor the solver falls back to.
pub const MIN_DAMPING: f64 = 1.0 / 64.0;

/// A point `z` off the real axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationPoint(Complex64);

impl EvaluationPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::Domain(format!("non-finite evaluation point {z}")));
        }
        if z.im == 0.0 {
            return Err(Error::Domain(format!(
                "evaluation point {z} lies on the real axis"
            )));
        }
        Ok(Self(z))
    }

    pub fn from_parts(re: f64, im: f64) -> Result<Self> {
        Self::new(Complex64::new(re, im))
    }

    pub fn z(&self) -> Complex64 {
        self.0
    }
}

/// The `2^D` coefficients `α_{i_1,…,i_D}(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    rank: usize,
    alpha: Vec<Complex64>,
}

impl CoefficientVector {
    pub fn new(rank: usize, alpha: Vec<Complex64>) -> Result<Self> {
        if alpha.len() != 1 << rank {
            return Err(Error::Domain(format!(
                "rank-{rank} lattice needs {} coefficients, got {}",
                1 << rank,
                alpha.len()
            )));
        }
        Ok(Self { rank, alpha })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.alpha
    }

    /// Coefficient for the bit pattern `(i_1, …, i_D)`.
    pub fn get(&self, bits: &[u8]) -> Option<Complex64> {
        if bits.len() != self.rank || bits.iter().any(|&b| b > 1) {
            return None;
        }
        let k = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        Some(self.alpha[k])
    }

    /// `α_{1,…,1}`.
    pub fn diagonal(&self) -> Complex64 {
        self.alpha[self.alpha.len() - 1]
    }
}

/// Iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Bound on `‖Xα − g(α)‖_∞` at the returned point.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial damping in `(0, 1]`; halved whenever the update grows.
    pub damping: f64,
    /// Try a safeguarded Newton step before each damped update of the scalar
    /// reduction. Ignored by the vector iteration.
    pub newton: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations: 10_000,
            damping: 1.0,
            newton: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::Domain("solver tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Domain("max_iterations must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Domain("damping must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// A converged coefficient vector with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub alpha: CoefficientVector,
    pub iterations: usize,
    /// `‖Xα − g(α)‖_∞` at `alpha`.
    pub residual: f64,
}

impl Solution {
    pub fn stieltjes(&self) -> Complex64 {
        self.alpha.diagonal()
    }
}

/// Converged value of the scalar self-consistent equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarSolution {
    pub s: Complex64,
    pub iterations: usize,
    /// `|Φ(S) − S|` at the returned point.
    pub residual: f64,
}

/// `λ_{d,i_d}(j_d)`: eigenvalue of `Y_{d,i_d}` on the constant vector
/// (`j_d = 0`) or on its orthogonal complement (`j_d = 1`).
pub fn eigen_factor(spec: &LatticeSpec, d: usize, i_d: u8, j_d: u8) -> Result<f64> {
    let m = *spec
        .dims()
        .get(d)
        .ok_or_else(|| Error::Domain(format!("dimension {d} out of range")))?;
    match (i_d, j_d) {
        (0, 0) => Ok((m - 1) as f64),
        (0, 1) => Ok(-1.0),
        (1, 0 | 1) => Ok(1.0),
        _ => Err(Error::Domain(format!(
            "bits must be 0 or 1, got ({i_d}, {j_d})"
        ))),
    }
}

/// Eigenspace dimension of each eigen-index `j`: `∏_d (1 if j_d = 0 else M_d − 1)`.
pub fn multiplicities(spec: &LatticeSpec) -> Vec<usize> {
    spec.deterministic_spectrum()
        .into_iter()
        .map(|a| a.multiplicity)
        .collect()
}

/// `X[j][i] = ∏_d λ_{d,i_d}(j_d)`, i.e. `⊗_d [[M_d − 1, 1], [−1, 1]]`.
pub fn lhs_matrix(spec: &LatticeSpec) -> DMatrix<f64> {
    let rank = spec.rank();
    let size = spec.eigen_index_count();
    DMatrix::from_fn(size, size, |j, i| {
        let jb = eigen_bits(j, rank);
        let ib = eigen_bits(i, rank);
        (0..rank)
            .map(|d| eigen_factor(spec, d, ib[d], jb[d]).expect("bits in range"))
            .product()
    })
}

/// Right-hand side `g(α)` for the given model.
pub fn rhs_map(
    spec: &LatticeSpec,
    p: f64,
    z: EvaluationPoint,
    alpha: &CoefficientVector,
) -> Result<Vec<Complex64>> {
    CanonicalSystem::new(spec, p)?.rhs(z, alpha)
}

/// Solves for the coefficient vector through the scalar reduction.
pub fn solve_coefficients(
    spec: &LatticeSpec,
    p: f64,
    z: EvaluationPoint,
    opts: &SolverOptions,
) -> Result<Solution> {
    CanonicalSystem::new(spec, p)?.solve(z, opts)
}

/// Solves `S = (1/N) Σ_j mult(j) / ((p/γ)Λ_j − z − (p(1−p)/γ) S)` directly.
pub fn scalar_self_consistent(
    spec: &LatticeSpec,
    p: f64,
    z: EvaluationPoint,
    opts: &SolverOptions,
) -> Result<ScalarSolution> {
    CanonicalSystem::new(spec, p)?.solve_scalar(z, opts)
}

/// `S(z) = α_{1,…,1}(z)`.
pub fn stieltjes_value(alpha: &CoefficientVector) -> Complex64 {
    alpha.diagonal()
}

/// Dense `C = Σ_i α_i ⊗_d Y_{d,i_d}` in node order. Entry `(k, l)` picks the
/// coefficient whose bit `d` is 1 exactly where nodes `k` and `l` share digit `d`.
pub fn solution_matrix(
    spec: &LatticeSpec,
    alpha: &CoefficientVector,
    cap: usize,
) -> Result<DMatrix<Complex64>> {
    if alpha.rank() != spec.rank() {
        return Err(Error::Domain(
            "coefficient rank does not match lattice".into(),
        ));
    }
    spec.check_dense_cap(cap)?;
    let n = spec.node_count();
    let digits: Vec<Vec<usize>> = (0..n).map(|x| spec.digits_of(x)).collect();
    let coeffs = alpha.as_slice();
    Ok(DMatrix::from_fn(n, n, |k, l| {
        let idx = digits[k]
            .iter()
            .zip(&digits[l])
            .fold(0usize, |acc, (a, b)| (acc << 1) | usize::from(a == b));
        coeffs[idx]
    }))
}

/// Precomputed model constants shared by every solve at a fixed `(spec, p)`.
#[derive(Debug, Clone)]
pub struct CanonicalSystem {
    rank: usize,
    /// `(p/γ) Λ_j`.
    shifts: Vec<f64>,
    /// `mult(j) / N`.
    weights: Vec<f64>,
    /// `p(1−p)/γ`.
    coupling: f64,
    lhs: DMatrix<Complex64>,
    lhs_lu: LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl CanonicalSystem {
    pub fn new(spec: &LatticeSpec, p: f64) -> Result<Self> {
        check_probability(p)?;
        let gamma = spec.gamma() as f64;
        let n = spec.node_count() as f64;
        let atoms = spec.deterministic_spectrum();
        let shifts = atoms.iter().map(|a| p * a.eigenvalue / gamma).collect();
        let weights = atoms.iter().map(|a| a.multiplicity as f64 / n).collect();
        let lhs = lhs_matrix(spec).map(|v| Complex64::new(v, 0.0));
        let lhs_lu = lhs.clone().lu();
        Ok(Self {
            rank: spec.rank(),
            shifts,
            weights,
            coupling: p * (1.0 - p) / gamma,
            lhs,
            lhs_lu,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `g(α)`; only `α_{1,…,1}` enters.
    pub fn rhs(&self, z: EvaluationPoint, alpha: &CoefficientVector) -> Result<Vec<Complex64>> {
        if alpha.rank() != self.rank {
            return Err(Error::Domain(
                "coefficient rank does not match lattice".into(),
            ));
        }
        self.rhs_at(z.z(), alpha.diagonal())
    }

    fn rhs_at(&self, z: Complex64, s: Complex64) -> Result<Vec<Complex64>> {
        self.shifts
            .iter()
            .map(|&shift| {
                let den = shift - z - self.coupling * s;
                if den == Complex64::new(0.0, 0.0) || !den.is_finite() {
                    Err(Error::Singular(z))
                } else {
                    Ok(den.inv())
                }
            })
            .collect()
    }

    /// `Φ(S) = Σ_j (mult(j)/N) g_j(S)`.
    fn phi(&self, z: Complex64, s: Complex64) -> Result<Complex64> {
        let g = self.rhs_at(z, s)?;
        Ok(g.iter().zip(&self.weights).map(|(gj, w)| gj * w).sum())
    }

    fn solve_lhs(&self, rhs: Vec<Complex64>) -> Vec<Complex64> {
        let b = DVector::from_vec(rhs);
        self.lhs_lu
            .solve(&b)
            .expect("X is invertible: every Kronecker factor has determinant M_d")
            .iter()
            .copied()
            .collect()
    }

    /// `‖Xα − g(α)‖_∞`.
    pub fn residual(&self, z: EvaluationPoint, alpha: &CoefficientVector) -> Result<f64> {
        let g = self.rhs(z, alpha)?;
        let a = DVector::from_column_slice(alpha.as_slice());
        let xa = &self.lhs * a;
        Ok(xa
            .iter()
            .zip(&g)
            .map(|(l, r)| (l - r).norm())
            .fold(0.0, f64::max))
    }

    /// Recovers `α = X⁻¹ g(S)`.
    pub fn coefficients_from_stieltjes(
        &self,
        z: EvaluationPoint,
        s: Complex64,
    ) -> Result<CoefficientVector> {
        let g = self.rhs_at(z.z(), s)?;
        CoefficientVector::new(self.rank, self.solve_lhs(g))
    }

    fn check_class(&self, z: Complex64, s: Complex64) -> Result<()> {
        if z.im * s.im > 0.0 {
            Ok(())
        } else {
            Err(Error::SolutionClass { z, s })
        }
    }

    /// `dΦ/dS = (p(1−p)/γ) Σ_j (mult(j)/N) g_j²`.
    fn phi_derivative(&self, z: Complex64, s: Complex64) -> Result<Complex64> {
        let g = self.rhs_at(z, s)?;
        Ok(g.iter()
            .zip(&self.weights)
            .map(|(gj, w)| gj * gj * w)
            .sum::<Complex64>()
            * self.coupling)
    }

    /// Damped iteration `S ← (1−η)S + ηΦ(S)`. When `opts.newton` is set, a
    /// Newton step on `S − Φ(S)` is tried first and kept only if it satisfies
    /// the sign condition and shrinks `|Φ(S) − S|`. `done` is checked before
    /// every update and ends the loop when it yields a value.
    fn iterate<R>(
        &self,
        z: Complex64,
        start: Complex64,
        opts: &SolverOptions,
        mut done: impl FnMut(Complex64, Complex64) -> Result<Option<R>>,
        mut last_residual: impl FnMut(Complex64, Complex64) -> f64,
    ) -> Result<(R, usize)> {
        opts.validate()?;
        let mut s = if z.im * start.im > 0.0 {
            start
        } else {
            -z.inv()
        };
        let mut phi = self.phi(z, s)?;
        let mut eta = opts.damping;
        let mut prev_step = f64::INFINITY;
        for it in 1..=opts.max_iterations {
            if let Some(r) = done(s, phi)? {
                return Ok((r, it));
            }
            let step = (phi - s).norm();
            if opts.newton {
                let slope = Complex64::new(1.0, 0.0) - self.phi_derivative(z, s)?;
                let candidate = s - (s - phi) / slope;
                if candidate.is_finite() && z.im * candidate.im > 0.0 {
                    if let Ok(phi_c) = self.phi(z, candidate) {
                        if (phi_c - candidate).norm() < step {
                            s = candidate;
                            phi = phi_c;
                            prev_step = step;
                            continue;
                        }
                    }
                }
            }
            if step > prev_step {
                eta = (eta * 0.5).max(MIN_DAMPING);
            }
            prev_step = step;
            s += (phi - s) * eta;
            phi = self.phi(z, s)?;
        }
        Err(Error::Convergence {
            iterations: opts.max_iterations,
            residual: last_residual(s, phi),
            z,
        })
    }

    /// Solves the scalar equation `S = Φ(S)` from `S₀ = −1/z`.
    pub fn solve_scalar(&self, z: EvaluationPoint, opts: &SolverOptions) -> Result<ScalarSolution> {
        self.solve_scalar_from(z, -z.z().inv(), opts)
    }

    /// As [`solve_scalar`](Self::solve_scalar) from a caller-provided start,
    /// e.g. the solution at a neighbouring grid point. Starts violating the
    /// sign condition are replaced by `−1/z`.
    pub fn solve_scalar_from(
        &self,
        z: EvaluationPoint,
        start: Complex64,
        opts: &SolverOptions,
    ) -> Result<ScalarSolution> {
        let zc = z.z();
        let (s, iterations) = self.iterate(
            zc,
            start,
            opts,
            |s, phi| {
                let residual = (phi - s).norm();
                if residual <= opts.tolerance {
                    self.check_class(zc, phi)?;
                    Ok(Some(ScalarSolution {
                        s: phi,
                        iterations: 0,
                        residual,
                    }))
                } else {
                    Ok(None)
                }
            },
            |s, phi| (phi - s).norm(),
        )?;
        Ok(ScalarSolution { iterations, ..s })
    }

    /// Solves for every coefficient: iterates the scalar reduction, recovers
    /// `α = X⁻¹ g(S)` and stops once `‖Xα − g(α)‖_∞ ≤ tolerance`.
    pub fn solve(&self, z: EvaluationPoint, opts: &SolverOptions) -> Result<Solution> {
        self.solve_from(z, -z.z().inv(), opts)
    }

    pub fn solve_from(
        &self,
        z: EvaluationPoint,
        start: Complex64,
        opts: &SolverOptions,
    ) -> Result<Solution> {
        let zc = z.z();
        let (sol, iterations) = self.iterate(
            zc,
            start,
            opts,
            |s, _| {
                let alpha = self.coefficients_from_stieltjes(z, s)?;
                let residual = self.residual(z, &alpha)?;
                if residual <= opts.tolerance {
                    self.check_class(zc, alpha.diagonal())?;
                    Ok(Some(Solution {
                        alpha,
                        iterations: 0,
                        residual,
                    }))
                } else {
                    Ok(None)
                }
            },
            |s, _| {
                self.coefficients_from_stieltjes(z, s)
                    .and_then(|a| self.residual(z, &a))
                    .unwrap_or(f64::INFINITY)
            },
        )?;
        Ok(Solution { iterations, ..sol })
    }

    /// Plain vector iteration `α_{n+1} = (1−η)α_n + η X⁻¹ g(α_n)` from
    /// `α₀ = (0, …, 0, −1/z)`.
    pub fn solve_vector_iteration(
        &self,
        z: EvaluationPoint,
        opts: &SolverOptions,
    ) -> Result<Solution> {
        opts.validate()?;
        let zc = z.z();
        let size = 1 << self.rank;
        let mut alpha = vec![Complex64::new(0.0, 0.0); size];
        alpha[size - 1] = -zc.inv();
        let mut alpha = CoefficientVector::new(self.rank, alpha)?;
        let mut eta = opts.damping;
        let mut prev = f64::INFINITY;
        for it in 1..=opts.max_iterations {
            let residual = self.residual(z, &alpha)?;
            if residual <= opts.tolerance {
                self.check_class(zc, alpha.diagonal())?;
                return Ok(Solution {
                    alpha,
                    iterations: it,
                    residual,
                });
            }
            if residual > prev {
                eta = (eta * 0.5).max(MIN_DAMPING);
            }
            prev = residual;
            let next = self.solve_lhs(self.rhs(z, &alpha)?);
            let blended = alpha
                .as_slice()
                .iter()
                .zip(next)
                .map(|(a, n)| a + (n - a) * eta)
                .collect();
            alpha = CoefficientVector::new(self.rank, blended)?;
        }
        Err(Error::Convergence {
            iterations: opts.max_iterations,
            residual: prev,
            z: zc,
        })
    }
}
