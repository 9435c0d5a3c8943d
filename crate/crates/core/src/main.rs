fn main() {
    std::process::exit(masscon::cli::run(std::env::args_os()));
}
