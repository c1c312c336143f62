//! Expected ESD of sampled graphs against the deterministic equivalent.
//!
//! cargo run --release --example monte_carlo_esd -- 8,10,12 0.8 100

use lattice_spectra::canonical::SolverOptions;
use lattice_spectra::empirics::{expected_esd, ks_distance, levy_distance};
use lattice_spectra::percolation::PercolationModel;
use lattice_spectra::stieltjes::{density_on_grid, Grid};

fn main() -> lattice_spectra::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let spec = lattice_spectra::cli::parse_dims(args.first().map_or("10,12", String::as_str))?;
    let p: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.7);
    let trials: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(50);

    let model = PercolationModel::new(spec.clone(), p)?;
    let grid = Grid::default_window(&spec, p, 2001, 1e-3)?;
    let curve = density_on_grid(&spec, p, &grid, &SolverOptions::default())?;
    let sampled = expected_esd(&model, trials, 42, &grid)?;

    println!("{spec}, p = {p}, {trials} trials");
    println!("KS   = {:.4}", ks_distance(&curve, &sampled.cdf)?);
    let levy = levy_distance(&curve, &sampled.cdf)?;
    println!(
        "Levy = {:.4} (resolution {:.1e})",
        levy.value, levy.resolution
    );
    println!(
        "isolated nodes per sample: mean {:.2}, max {}",
        sampled.mean_zero_degree(),
        sampled.max_zero_degree()
    );
    for q in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let k = curve.cdf.partition_point(|&f| f < q).min(curve.x.len() - 1);
        println!(
            "x = {:>7.4}: F = {:.4}, expected ESD = {:.4}",
            curve.x[k], curve.cdf[k], sampled.cdf.cdf[k]
        );
    }
    Ok(())
}
