//! Closed-form spectrum of a lattice graph, checked against a dense eigensolve.
//!
//! cargo run --example lattice_spectrum -- 3,4,5

use lattice_spectra::empirics::eigenvalues_symmetric;

fn main() -> lattice_spectra::Result<()> {
    let arg = std::env::args().nth(1).unwrap_or_else(|| "3,4,5".into());
    let spec = lattice_spectra::cli::parse_dims(&arg)?;
    println!(
        "lattice {spec}: N = {}, degree = {}",
        spec.node_count(),
        spec.gamma()
    );

    let atoms = spec.deterministic_spectrum();
    println!("{:>8} {:>10} {:>12}", "index", "eigenvalue", "multiplicity");
    for a in &atoms {
        println!(
            "{:>8} {:>10} {:>12}",
            a.index_label(),
            a.eigenvalue,
            a.multiplicity
        );
    }

    if spec.node_count() <= 2000 {
        let mut closed: Vec<f64> = atoms
            .iter()
            .flat_map(|a| std::iter::repeat_n(a.eigenvalue, a.multiplicity))
            .collect();
        closed.sort_by(f64::total_cmp);
        let dense = eigenvalues_symmetric(&spec.adjacency_dense()?)?;
        let err = closed
            .iter()
            .zip(&dense)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("max deviation from dense eigensolve: {err:.2e}");
    }
    Ok(())
}
