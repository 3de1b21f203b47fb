fn main() {
    std::process::exit(spherical_esn::cli::run(std::env::args().collect()));
}
