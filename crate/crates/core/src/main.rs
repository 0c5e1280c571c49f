fn main() {
    std::process::exit(basketmap::cli::run(std::env::args_os()));
}
