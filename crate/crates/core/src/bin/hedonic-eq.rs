fn main() {
    std::process::exit(hedonic_eq::cli::run(std::env::args_os()));
}
