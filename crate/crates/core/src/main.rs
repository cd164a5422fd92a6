fn main() {
    std::process::exit(ecoclass::cli::run(std::env::args_os()));
}
