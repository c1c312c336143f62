//! The reduced solver against a brute-force oracle that never uses the lattice
//! structure: numerical eigenvalues of the dense mean matrix, Newton continuation on
//! the scalar fixed point, and a dense complex LU for the final trace.

use lattice_spectra::canonical::{CanonicalSystem, EvaluationPoint, SolverOptions};
use lattice_spectra::empirics::eigenvalues_symmetric;
use lattice_spectra::lattice::LatticeSpec;
use lattice_spectra::percolation::{degrees, PercolationModel, SampleSeed};
use nalgebra::DMatrix;
use num_complex::Complex64;

struct DenseOracle {
    mean: DMatrix<f64>,
    mu: Vec<f64>,
    coupling: f64,
}

impl DenseOracle {
    fn new(dims: &[usize], p: f64) -> Self {
        let spec = LatticeSpec::new(dims.to_vec()).unwrap();
        let gamma = spec.gamma() as f64;
        let mean = PercolationModel::new(spec, p)
            .unwrap()
            .expectation_matrix()
            .unwrap();
        let mu = eigenvalues_symmetric(&mean).unwrap();
        Self {
            mean,
            mu,
            coupling: p * (1.0 - p) / gamma,
        }
    }

    /// Newton on `S = (1/N) Σ 1/(μ_i − z − cS)` from `start`.
    fn newton(&self, z: Complex64, start: Complex64) -> Complex64 {
        let n = self.mu.len() as f64;
        let mut s = start;
        for _ in 0..200 {
            let (mut phi, mut dphi) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for &m in &self.mu {
                let g = (m - z - self.coupling * s).inv();
                phi += g;
                dphi += g * g;
            }
            phi /= n;
            dphi *= self.coupling / n;
            let step = (s - phi) / (Complex64::new(1.0, 0.0) - dphi);
            s -= step;
            if step.norm() < 1e-15 * (1.0 + s.norm()) {
                break;
            }
        }
        s
    }

    /// Follows the solution from `Im z = 1` down to the target along a
    /// geometric path, so each Newton solve starts next to its root.
    fn solve(&self, z: Complex64) -> Complex64 {
        let top = z.im.max(1.0);
        let steps = 200;
        let mut s = -Complex64::new(z.re, top).inv();
        for k in 0..=steps {
            let im = top * (z.im / top).powf(k as f64 / steps as f64);
            s = self.newton(Complex64::new(z.re, im), s);
        }
        s
    }

    /// `(1/N) tr (B − (z + c S) I)⁻¹` by LU.
    fn trace(&self, z: Complex64, s: Complex64) -> Complex64 {
        let n = self.mean.nrows();
        let m = self.mean.map(|v| Complex64::new(v, 0.0))
            - DMatrix::<Complex64>::identity(n, n) * (z + self.coupling * s);
        m.lu().try_inverse().unwrap().trace() / n as f64
    }
}

#[test]
fn reduced_solver_matches_dense_oracle() {
    let cases: [(&[usize], f64); 7] = [
        (&[2], 1.0),
        (&[3, 3], 0.3),
        (&[4, 5], 0.7),
        (&[3, 4, 5], 0.6),
        (&[2, 3, 2, 2], 0.5),
        (&[7, 9], 0.9),
        (&[6, 6], 0.05),
    ];
    let mut worst = 0.0f64;
    let mut points = 0;
    for (dims, p) in cases {
        let oracle = DenseOracle::new(dims, p);
        let sys = CanonicalSystem::new(&LatticeSpec::new(dims.to_vec()).unwrap(), p).unwrap();
        for im in [1.0, 0.1, 0.01] {
            for re in [-0.6, -0.1, 0.05, 0.3, 0.9] {
                let z = Complex64::new(re, im);
                let s_oracle = oracle.solve(z);
                let consistency = (oracle.trace(z, s_oracle) - s_oracle).norm();
                assert!(
                    consistency < 1e-10,
                    "oracle not self-consistent: {consistency:e}"
                );
                let s = sys
                    .solve(EvaluationPoint::new(z).unwrap(), &SolverOptions::default())
                    .unwrap()
                    .stieltjes();
                worst = worst.max((s - s_oracle).norm() / (1.0 + s.norm()));
                points += 1;
            }
        }
    }
    assert_eq!(points, 105);
    assert!(worst < 1e-9, "worst relative deviation {worst:e}");
}

#[test]
fn p1_stieltjes_is_the_lattice_resolvent_trace() {
    for dims in [&[3, 3][..], &[2, 5, 3], &[6]] {
        let spec = LatticeSpec::new(dims.to_vec()).unwrap();
        let w = spec.adjacency_dense().unwrap() / spec.gamma() as f64;
        let n = spec.node_count();
        let sys = CanonicalSystem::new(&spec, 1.0).unwrap();
        for z in [Complex64::new(0.2, 0.3), Complex64::new(-0.7, 0.01)] {
            let direct = (w.map(|v| Complex64::new(v, 0.0)) - DMatrix::identity(n, n) * z)
                .lu()
                .try_inverse()
                .unwrap()
                .trace()
                / n as f64;
            let s = sys
                .solve(EvaluationPoint::new(z).unwrap(), &SolverOptions::default())
                .unwrap()
                .stieltjes();
            assert!((s - direct).norm() < 1e-10 * (1.0 + s.norm()));
        }
    }
}

#[test]
fn degrees_concentrate_at_p_gamma() {
    let spec = LatticeSpec::new(vec![10, 12]).unwrap();
    let gamma = spec.gamma() as f64;
    let p = 0.7;
    let model = PercolationModel::new(spec, p).unwrap();
    let mut all = Vec::new();
    for t in 0..20 {
        all.extend(degrees(
            &model.sample_adjacency(SampleSeed::new(5, t)).unwrap(),
        ));
    }
    let n = all.len() as f64;
    let mean = all.iter().sum::<f64>() / n;
    let var = all.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    // Binomial(γ, p) per node; the mean over 2400 degrees has sd ≈ 0.05.
    assert!((mean - p * gamma).abs() < 0.25, "mean degree {mean}");
    assert!(
        (var - gamma * p * (1.0 - p)).abs() < 0.2 * gamma * p * (1.0 - p),
        "var {var}"
    );
}
