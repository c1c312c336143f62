//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the libtest
//! harness so the lines are never captured; exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use lattice_spectra::canonical::{
    solution_matrix, CanonicalSystem, EvaluationPoint, SolverOptions,
};
use lattice_spectra::empirics::{
    consensus_rate, eigenvalues_symmetric, esd_of, expected_esd, finite_time_consensus_filter,
    ks_distance, levy_distance, normalized_comparison, normalized_grid,
    normalized_laplacian_eigenvalues, total_variation,
};
use lattice_spectra::lattice::{LatticeSpec, MixedRadixIndex};
use lattice_spectra::percolation::{
    row_normalized_adjacency, scaled_adjacency, PercolationModel, SampleSeed,
};
use lattice_spectra::stieltjes::{density_on_grid, empirical_stieltjes, Grid};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances.
const C1_KS: f64 = 0.02;
const C1_MASS: f64 = 0.01;
const C2_AGREE: f64 = 1e-9;
const C3_KS: f64 = 0.03;
const C4_KS: f64 = 0.05;
const C6_EXACT: f64 = 1e-12;
const C6_EIG_SLACK: f64 = 1e-9;
const C7_RESOLVENT: f64 = 1e-10;
const C8_EXACT: f64 = 1e-12;

// Runtime budgets.
const C1_TIME: Duration = Duration::from_secs(30);
const C2_TIME: Duration = Duration::from_secs(10);
const C3_TIME: Duration = Duration::from_secs(600);
const C4_TIME: Duration = Duration::from_secs(600);
const C5_TIME: Duration = Duration::from_secs(300);
const C6_TIME: Duration = Duration::from_secs(60);
const C7_TIME: Duration = Duration::from_secs(60);
const C8_TIME: Duration = Duration::from_secs(1);

fn spec(d: &[usize]) -> LatticeSpec {
    LatticeSpec::new(d.to_vec()).unwrap()
}

fn model(d: &[usize], p: f64) -> PercolationModel {
    PercolationModel::new(spec(d), p).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn degeneration() -> Outcome {
    let mut ks_ok = true;
    let mut mass_ok = true;
    let mut detail = Vec::new();
    for d in [&[3, 3][..], &[5, 8], &[4, 4, 4]] {
        let s = spec(d);
        let gamma = s.gamma() as f64;
        let n = s.node_count() as f64;
        let grid = Grid::default_window(&s, 1.0, 8001, 1e-4).unwrap();
        let curve = density_on_grid(&s, 1.0, &grid, &SolverOptions::default()).unwrap();

        let mut atoms: Vec<(f64, f64)> = s
            .deterministic_spectrum()
            .iter()
            .map(|a| (a.eigenvalue / gamma, a.multiplicity as f64 / n))
            .collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Distinct eigen-indices may share an eigenvalue.
        atoms.dedup_by(|b, a| {
            let same = (a.0 - b.0).abs() < 1e-12;
            if same {
                a.1 += b.1;
            }
            same
        });
        let mut eigs = Vec::new();
        for atom in s.deterministic_spectrum() {
            eigs.extend(std::iter::repeat_n(
                atom.eigenvalue / gamma,
                atom.multiplicity,
            ));
        }
        eigs.sort_by(f64::total_cmp);
        let ks = ks_distance(&curve, &esd_of(&eigs, &grid)).unwrap();
        let levy = levy_distance(&curve, &esd_of(&eigs, &grid)).unwrap();

        // Mass between midpoints to the neighbouring atoms.
        let mut worst_mass = 0.0f64;
        for (k, &(x, m)) in atoms.iter().enumerate() {
            let lo = if k == 0 {
                grid.x_min
            } else {
                0.5 * (atoms[k - 1].0 + x)
            };
            let hi = if k + 1 == atoms.len() {
                grid.x_max
            } else {
                0.5 * (x + atoms[k + 1].0)
            };
            let got = curve.cdf_value(hi) - curve.cdf_value(lo);
            worst_mass = worst_mass.max((got - m).abs());
        }
        ks_ok &= ks <= C1_KS;
        mass_ok &= worst_mass <= C1_MASS;
        detail.push(format!(
            "{s}: ks={ks:.4} levy={:.2e} mass_err={worst_mass:.1e}",
            levy.value
        ));
    }
    Outcome {
        pass: ks_ok && mass_ok,
        detail: format!(
            "ks<= {C1_KS}: {} | mass<= {C1_MASS}: {} | {}",
            ok(ks_ok),
            ok(mass_ok),
            detail.join("; ")
        ),
    }
}

fn oracle_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dims: [&[usize]; 8] = [
        &[2],
        &[5],
        &[3, 3],
        &[2, 7],
        &[20, 40],
        &[3, 4, 5],
        &[15, 20, 25],
        &[2, 3, 2, 4],
    ];
    let ps = [0.1, 0.3, 0.5, 0.7, 0.8, 1.0];
    let opts = SolverOptions {
        max_iterations: 200_000,
        ..SolverOptions::default()
    };
    let (mut count, mut worst, mut class_ok) = (0usize, 0.0f64, true);
    let mut failures = 0usize;
    for d in dims {
        for &p in &ps {
            let sys = CanonicalSystem::new(&spec(d), p).unwrap();
            for im in [1.0, 0.1, 0.01, 1.0, 0.1, 0.01] {
                let z = EvaluationPoint::from_parts(rng.random_range(-1.2..1.2), im).unwrap();
                let vector = sys.solve_vector_iteration(z, &opts);
                let scalar = sys.solve_scalar(z, &opts);
                match (vector, scalar) {
                    (Ok(v), Ok(s)) => {
                        let sv = v.stieltjes();
                        worst = worst.max((sv - s.s).norm());
                        class_ok &= im * sv.im > 0.0 && sv.norm() <= 1.0 / im;
                        class_ok &= im * s.s.im > 0.0 && s.s.norm() <= 1.0 / im;
                    }
                    _ => failures += 1,
                }
                count += 1;
            }
        }
    }
    let pass = count >= 200 && failures == 0 && worst <= C2_AGREE && class_ok;
    Outcome {
        pass,
        detail: format!(
            "{count} points, max|ΔS|={worst:.1e} (<= {C2_AGREE:e}), failures={failures}, class L+bound: {}",
            ok(class_ok)
        ),
    }
}

fn figure_reproduction(d: &[usize], p: f64, trials: usize, bound: f64) -> Outcome {
    let m = model(d, p);
    let grid = Grid::default_window(m.lattice(), p, 2001, 1e-3).unwrap();
    let curve = density_on_grid(m.lattice(), p, &grid, &SolverOptions::default()).unwrap();
    let e = expected_esd(&m, trials, 42, &grid).unwrap();
    let ks = ks_distance(&curve, &e.cdf).unwrap();
    Outcome {
        pass: ks <= bound,
        detail: format!(
            "{} p={p} trials={trials}: ks={ks:.4} (<= {bound}), mean isolated nodes {:.2}",
            m.lattice(),
            e.mean_zero_degree()
        ),
    }
}

fn normalized_trend() -> Outcome {
    let mut means = Vec::new();
    for d in [&[5, 5][..], &[10, 10], &[20, 20]] {
        let m = model(d, 0.7);
        let grid = normalized_grid(&m, 2001).unwrap();
        means.push(normalized_comparison(&m, 20, 11, &grid).unwrap().levy_mean);
    }
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    let halved = means[2] < 0.5 * means[0];
    Outcome {
        pass: decreasing && halved,
        detail: format!(
            "mean levy 5x5={:.4} 10x10={:.4} 20x20={:.4}; decreasing: {}, last < first/2: {}",
            means[0],
            means[1],
            means[2],
            ok(decreasing),
            ok(halved)
        ),
    }
}

fn permuted(c: &DMatrix<Complex64>, perm: &[usize]) -> DMatrix<Complex64> {
    DMatrix::from_fn(c.nrows(), c.ncols(), |i, j| c[(perm[i], perm[j])])
}

fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn structural_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_girko = 0.0f64;
    let mut worst_trace = 0.0f64;
    let mut worst_radius = 0.0f64;
    for (d, p) in [
        (&[3, 3][..], 0.3),
        (&[20, 40], 0.7),
        (&[15, 20, 25], 0.8),
        (&[4, 5, 6], 0.5),
    ] {
        let m = model(d, p);
        let gamma = m.lattice().gamma() as f64;
        let g = m.girko_condition_report(0.1).unwrap();
        worst_girko = worst_girko
            .max((g.row_abs_sum - p).abs())
            .max((g.row_var_sum - p * (1.0 - p) / gamma).abs());
        if m.lattice().node_count() <= 1000 {
            for t in 0..3 {
                let a = m.sample_adjacency(SampleSeed::new(6, t)).unwrap();
                let eig = eigenvalues_symmetric(&scaled_adjacency(&a, m.lattice())).unwrap();
                let n = eig.len() as f64;
                worst_trace = worst_trace.max(eig.iter().sum::<f64>().abs() / n);
                worst_radius = worst_radius.max(eig[0].abs().max(eig[eig.len() - 1].abs()));
            }
        }
    }

    // Reconstructed solution form against the direct resolvent, and its
    // invariance under per-dimension digit permutations.
    let mut worst_perm = 0.0f64;
    let mut worst_direct = 0.0f64;
    for (d, p, z) in [
        (&[3, 4, 5][..], 0.6, Complex64::new(0.1, 0.2)),
        (&[10, 20], 0.7, Complex64::new(0.4, 0.05)),
        (&[2, 3, 2, 4], 0.4, Complex64::new(-0.3, 0.5)),
    ] {
        let s = spec(d);
        let sys = CanonicalSystem::new(&s, p).unwrap();
        let sol = sys
            .solve(EvaluationPoint::new(z).unwrap(), &SolverOptions::default())
            .unwrap();
        let c = solution_matrix(&s, &sol.alpha, 200).unwrap();
        let gamma = s.gamma() as f64;
        let n = s.node_count();
        let shift = z + p * (1.0 - p) / gamma * sol.stieltjes();
        let b = s.adjacency_dense().unwrap() * (p / gamma);
        let direct = (b.map(|v| Complex64::new(v, 0.0))
            - DMatrix::<Complex64>::identity(n, n) * shift)
            .lu()
            .try_inverse()
            .unwrap();
        worst_direct = worst_direct.max(max_diff(&c, &direct));
        for _ in 0..5 {
            let maps: Vec<Vec<usize>> = s
                .dims()
                .iter()
                .map(|&m| {
                    let mut v: Vec<usize> = (0..m).collect();
                    v.shuffle(&mut rng);
                    v
                })
                .collect();
            let perm: Vec<usize> = (1..=n)
                .map(|x| {
                    let t = s.index_to_tuple(x).unwrap();
                    let moved: Vec<usize> =
                        t.digits().iter().zip(&maps).map(|(&g, m)| m[g]).collect();
                    s.tuple_to_index(&MixedRadixIndex::new(moved)).unwrap() - 1
                })
                .collect();
            worst_perm = worst_perm
                .max(max_diff(&c, &permuted(&c, &perm)))
                .max(max_diff(&direct, &permuted(&direct, &perm)));
        }
    }
    let pass = worst_girko <= C6_EXACT
        && worst_trace <= C6_EXACT
        && worst_radius <= 1.0 + C6_EIG_SLACK
        && worst_perm <= C6_EXACT
        && worst_direct <= C6_EXACT;
    Outcome {
        pass,
        detail: format!(
            "girko {worst_girko:.1e}, mean eig {worst_trace:.1e}, radius {worst_radius:.6}, \
             C=PCP^T {worst_perm:.1e}, C vs resolvent {worst_direct:.1e}"
        ),
    }
}

fn resolvent_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let cases: [(&[usize], f64); 4] = [
        (&[5, 6], 0.4),
        (&[3, 4, 5], 0.7),
        (&[10, 12], 0.9),
        (&[8], 0.5),
    ];
    for t in 0..20u64 {
        let (d, p) = cases[t as usize % cases.len()];
        let m = model(d, p);
        let w = scaled_adjacency(
            &m.sample_adjacency(SampleSeed::new(7, t)).unwrap(),
            m.lattice(),
        );
        let eig = eigenvalues_symmetric(&w).unwrap();
        let im = if t % 2 == 0 { 1.0 } else { 0.1 };
        let z = Complex64::new(rng.random_range(-1.0..1.0), im);
        let n = w.nrows();
        let resolvent = (w.map(|v| Complex64::new(v, 0.0)) - DMatrix::identity(n, n) * z)
            .lu()
            .try_inverse()
            .unwrap();
        let direct = resolvent.trace() / n as f64;
        worst = worst.max((empirical_stieltjes(&eig, z).unwrap() - direct).norm());
    }
    Outcome {
        pass: worst <= C7_RESOLVENT,
        detail: format!("20 samples, max deviation {worst:.1e} (<= {C7_RESOLVENT:e})"),
    }
}

fn filter_metrics() -> Outcome {
    let a = spec(&[3]).adjacency_dense().unwrap();
    let shift = row_normalized_adjacency(&a);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let tv = total_variation(&shift, &[h, -h, 0.0], 2.0).unwrap();
    let eigs = normalized_laplacian_eigenvalues(&a).unwrap();
    let rate = consensus_rate(&[1.0, -1.0], &eigs, 1).unwrap().rate;
    let filter = finite_time_consensus_filter(&eigs);
    let finite = consensus_rate(&filter, &eigs, filter.len() - 1)
        .unwrap()
        .rate;

    // Finite-time consensus on a percolated lattice sample as well.
    let sample = model(&[3, 4], 0.8)
        .sample_adjacency(SampleSeed::new(8, 0))
        .unwrap();
    let l = normalized_laplacian_eigenvalues(&sample).unwrap();
    let f = finite_time_consensus_filter(&l);
    // The d-th root would magnify round-off; compare max |P(λ_i)| instead.
    let degree = f.len() - 1;
    let sample_peak = consensus_rate(&f, &l, degree)
        .unwrap()
        .rate
        .powi(degree as i32);

    let pass = (tv - 2.25).abs() <= C8_EXACT
        && (rate - 0.5).abs() <= C8_EXACT
        && finite <= C8_EXACT
        && sample_peak <= 1e-9;
    Outcome {
        pass,
        detail: format!(
            "tv={tv} rate={rate} finite-time K3={finite:.1e}, sample max|P|={sample_peak:.1e}"
        ),
    }
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "no"
    }
}

fn main() {
    type Check = Box<dyn Fn() -> Outcome>;
    let criteria: Vec<(&str, Duration, Check)> = vec![
        ("degeneration at p=1", C1_TIME, Box::new(degeneration)),
        (
            "vector vs scalar oracle",
            C2_TIME,
            Box::new(oracle_agreement),
        ),
        (
            "20x40 p=0.7 Monte-Carlo agreement",
            C3_TIME,
            Box::new(|| figure_reproduction(&[20, 40], 0.7, 200, C3_KS)),
        ),
        (
            "8x10x12 p=0.8 Monte-Carlo agreement",
            C4_TIME,
            Box::new(|| figure_reproduction(&[8, 10, 12], 0.8, 100, C4_KS)),
        ),
        (
            "normalized adjacency trend",
            C5_TIME,
            Box::new(normalized_trend),
        ),
        (
            "structural identities",
            C6_TIME,
            Box::new(structural_identities),
        ),
        ("resolvent identity", C7_TIME, Box::new(resolvent_identity)),
        ("filter metrics", C8_TIME, Box::new(filter_metrics)),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", k + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.ends_with(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= *budget;
        failed += usize::from(!pass);
        println!(
            "{} {id} ({name}): {} [{:.1}s / {}s]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
