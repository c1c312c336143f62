use lattice_spectra::canonical::{CanonicalSystem, EvaluationPoint, SolverOptions};
use lattice_spectra::empirics::{eigenvalues_symmetric, esd_of, ks_distance, levy_distance};
use lattice_spectra::lattice::LatticeSpec;
use lattice_spectra::percolation::{scaled_adjacency, PercolationModel, SampleSeed};
use lattice_spectra::stieltjes::{empirical_stieltjes, Grid};
use num_complex::Complex64;
use proptest::prelude::*;

fn dims_strategy(max_rank: usize, max_side: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(2..=max_side, 1..=max_rank)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mixed_radix_roundtrip(dims in dims_strategy(4, 9), pick in any::<u64>()) {
        let spec = LatticeSpec::new(dims).unwrap();
        let x = 1 + (pick as usize) % spec.node_count();
        let t = spec.index_to_tuple(x).unwrap();
        prop_assert_eq!(spec.tuple_to_index(&t).unwrap(), x);
        for (d, m) in t.digits().iter().zip(spec.dims()) {
            prop_assert!(d < m);
        }
    }

    #[test]
    fn samples_live_on_the_lattice(
        dims in dims_strategy(3, 6),
        p in 0.0..=1.0f64,
        seed in any::<u64>(),
        trial in 0u64..1000,
    ) {
        let spec = LatticeSpec::new(dims).unwrap();
        let model = PercolationModel::new(spec.clone(), p).unwrap();
        let a = model.sample_adjacency(SampleSeed::new(seed, trial)).unwrap();
        let n = spec.node_count();
        for i in 0..n {
            prop_assert_eq!(a[(i, i)], 0.0);
            for j in 0..n {
                prop_assert_eq!(a[(i, j)], a[(j, i)]);
                prop_assert!(a[(i, j)] == 0.0 || a[(i, j)] == 1.0);
                if a[(i, j)] == 1.0 {
                    prop_assert!(spec.are_adjacent(i + 1, j + 1));
                }
            }
        }
    }

    #[test]
    fn sample_spectrum_identities(
        dims in dims_strategy(3, 5),
        p in 0.0..=1.0f64,
        seed in any::<u64>(),
    ) {
        let spec = LatticeSpec::new(dims).unwrap();
        let model = PercolationModel::new(spec.clone(), p).unwrap();
        let a = model.sample_adjacency(SampleSeed::new(seed, 0)).unwrap();
        let eig = eigenvalues_symmetric(&scaled_adjacency(&a, &spec)).unwrap();
        let n = eig.len() as f64;
        let gamma = spec.gamma() as f64;
        let edges = a.sum() / 2.0;
        prop_assert!(eig.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(eig.iter().sum::<f64>().abs() <= 1e-9 * n);
        let squares: f64 = eig.iter().map(|l| l * l).sum();
        prop_assert!((squares - 2.0 * edges / (gamma * gamma)).abs() <= 1e-8 * n);
        prop_assert!(eig[0] >= -1.0 - 1e-9 && eig[eig.len() - 1] <= 1.0 + 1e-9);
    }

    #[test]
    fn stieltjes_is_herglotz(
        dims in dims_strategy(3, 30),
        p in 0.0..=1.0f64,
        re in -1.5..1.5f64,
        im_exp in -2.0..1.0f64,
        upper in any::<bool>(),
    ) {
        let spec = LatticeSpec::new(dims).unwrap();
        let sys = CanonicalSystem::new(&spec, p).unwrap();
        let im = 10f64.powf(im_exp) * if upper { 1.0 } else { -1.0 };
        let z = EvaluationPoint::from_parts(re, im).unwrap();
        let s = sys.solve(z, &SolverOptions::default()).unwrap().stieltjes();
        prop_assert!(im * s.im > 0.0);
        prop_assert!(s.norm() <= 1.0 / im.abs() * (1.0 + 1e-12));

        let zc = EvaluationPoint::new(z.z().conj()).unwrap();
        let sc = sys.solve(zc, &SolverOptions::default()).unwrap().stieltjes();
        prop_assert!((sc - s.conj()).norm() <= 1e-9 * (1.0 + s.norm()));
    }

    #[test]
    fn empirical_transform_is_herglotz(
        eig in prop::collection::vec(-1.0..1.0f64, 1..50),
        re in -2.0..2.0f64,
        im in 0.001..2.0f64,
    ) {
        let s = empirical_stieltjes(&eig, Complex64::new(re, im)).unwrap();
        prop_assert!(s.im > 0.0);
        prop_assert!(s.norm() <= 1.0 / im * (1.0 + 1e-12));
    }

    #[test]
    fn levy_never_exceeds_ks(
        mut a in prop::collection::vec(-1.0..1.0f64, 1..40),
        mut b in prop::collection::vec(-1.0..1.0f64, 1..40),
        points in 11usize..400,
    ) {
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let grid = Grid::new(-1.2, 1.2, points, 1e-3).unwrap();
        let (fa, fb) = (esd_of(&a, &grid), esd_of(&b, &grid));
        let ks = ks_distance(&fa, &fb).unwrap();
        let levy = levy_distance(&fa, &fb).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&ks));
        prop_assert!(levy >= 0.0 && levy <= ks);
        prop_assert!(fa.cdf.windows(2).all(|w| w[0] <= w[1]));
    }
}
