fn main() {
    std::process::exit(lattice_spectra::cli::run(std::env::args_os()));
}
