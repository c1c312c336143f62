//! Levy distance between the spectra of p·sqrt(γ)·Â and sqrt(γ)·W as the
//! lattice grows.
//!
//! cargo run --release --example normalized_trend

use lattice_spectra::empirics::{normalized_comparison, normalized_grid};
use lattice_spectra::lattice::LatticeSpec;
use lattice_spectra::percolation::PercolationModel;

fn main() -> lattice_spectra::Result<()> {
    let p = 0.7;
    let trials = 20;
    println!(
        "{:>8} {:>10} {:>10} {:>14}",
        "lattice", "mean", "std", "isolated/trial"
    );
    for side in [5, 10, 20, 30] {
        let model = PercolationModel::new(LatticeSpec::new(vec![side, side])?, p)?;
        let grid = normalized_grid(&model, 2001)?;
        let r = normalized_comparison(&model, trials, 1, &grid)?;
        let isolated = r.zero_degree_counts.iter().sum::<usize>() as f64 / trials as f64;
        println!(
            "{:>8} {:>10.4} {:>10.4} {:>14.2}",
            model.lattice().to_string(),
            r.levy_mean,
            r.levy_std,
            isolated
        );
    }
    Ok(())
}
