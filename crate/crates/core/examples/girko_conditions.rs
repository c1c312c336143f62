//! Row-sum and Lindeberg-type conditions for the centred link matrix.
//!
//! cargo run --example girko_conditions

use lattice_spectra::lattice::LatticeSpec;
use lattice_spectra::percolation::PercolationModel;

fn main() -> lattice_spectra::Result<()> {
    let tau = 0.05;
    println!(
        "{:>10} {:>5} {:>10} {:>12} {:>14} {:>10}",
        "lattice", "p", "row |B|", "row E[H^2]", "lindeberg sum", "uniform?"
    );
    for (dims, p) in [
        (vec![20, 40], 0.7),
        (vec![15, 20, 25], 0.8),
        (vec![5, 5], 0.5),
        (vec![50, 50], 0.5),
        (vec![3, 3], 1.0),
    ] {
        let spec = LatticeSpec::new(dims)?;
        let r = PercolationModel::new(spec.clone(), p)?.girko_condition_report(tau)?;
        println!(
            "{:>10} {:>5} {:>10.4} {:>12.3e} {:>14.3e} {:>10}",
            spec.to_string(),
            p,
            r.row_abs_sum,
            r.row_var_sum,
            r.lindeberg_row_sum,
            if r.uniform_condition_fails {
                "fails"
            } else {
                "holds"
            }
        );
    }
    Ok(())
}
