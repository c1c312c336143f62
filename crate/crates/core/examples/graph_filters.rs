//! Total variation and consensus rates of polynomial filters on a percolated
//! lattice.
//!
//! cargo run --example graph_filters

use lattice_spectra::empirics::{
    consensus_rate, finite_time_consensus_filter, normalized_laplacian_eigenvalues, total_variation,
};
use lattice_spectra::lattice::LatticeSpec;
use lattice_spectra::percolation::{row_normalized_adjacency, PercolationModel, SampleSeed};

fn main() -> lattice_spectra::Result<()> {
    let model = PercolationModel::new(LatticeSpec::new(vec![4, 5])?, 0.6)?;
    let a = model.sample_adjacency(SampleSeed::new(3, 0))?;
    let shift = row_normalized_adjacency(&a);
    let n = a.nrows();

    let smooth = vec![1.0; n];
    let alternating: Vec<f64> = (0..n)
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    println!(
        "TV(constant)    = {:.3e}",
        total_variation(&shift, &smooth, 2.0)?
    );
    println!(
        "TV(alternating) = {:.3}",
        total_variation(&shift, &alternating, 2.0)?
    );

    let eigs = normalized_laplacian_eigenvalues(&a)?;
    let lmax = eigs[eigs.len() - 1];
    let positive: Vec<f64> = eigs.iter().copied().filter(|l| *l > 1e-8).collect();
    let lmin = positive[0];

    // One gradient step with the optimal step size, repeated d times.
    let step = 2.0 / (lmin + lmax);
    let r = consensus_rate(&[1.0, -step], &eigs, 1)?;
    println!(
        "optimal one-tap filter: rate {:.4}, disconnected: {}",
        r.rate, r.disconnected
    );

    let filter = finite_time_consensus_filter(&eigs);
    let d = filter.len() - 1;
    let r = consensus_rate(&filter, &eigs, d)?;
    println!(
        "finite-time filter of degree {d}: max |P(λ)| = {:.1e}",
        r.rate.powi(d as i32)
    );
    Ok(())
}
