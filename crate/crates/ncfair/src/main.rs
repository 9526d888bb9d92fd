fn main() {
    std::process::exit(ncfair::cli::run(std::env::args_os()));
}
