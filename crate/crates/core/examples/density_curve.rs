//! Deterministic-equivalent density for a 20x40 lattice at p = 0.7, printed as
//! a coarse text plot. Pass `--csv` to dump the full curve instead.
//!
//! cargo run --release --example density_curve

use lattice_spectra::canonical::SolverOptions;
use lattice_spectra::lattice::LatticeSpec;
use lattice_spectra::stieltjes::{density_on_grid, Grid};

fn main() -> lattice_spectra::Result<()> {
    let spec = LatticeSpec::new(vec![20, 40])?;
    let p = 0.7;
    let grid = Grid::new(-0.3, 1.1, 2001, 1e-3)?;
    let curve = density_on_grid(&spec, p, &grid, &SolverOptions::default())?;

    if std::env::args().any(|a| a == "--csv") {
        println!("x,f,F");
        for k in 0..curve.x.len() {
            println!("{},{},{}", curve.x[k], curve.f[k], curve.cdf[k]);
        }
        return Ok(());
    }

    let d = curve.diagnostics;
    println!(
        "{} points ({} integrated), max iterations {}, max residual {:.1e}",
        d.points, d.integration_points, d.max_iterations, d.max_residual
    );
    let peak = curve.f.iter().cloned().fold(0.0, f64::max);
    for k in (0..curve.x.len()).step_by(50) {
        let bar = (60.0 * curve.f[k] / peak).round() as usize;
        println!(
            "{:>6.3} {:>6.3} {}",
            curve.x[k],
            curve.cdf[k],
            "#".repeat(bar)
        );
    }
    Ok(())
}
