fn main() {
    std::process::exit(patchtree::cli::run(std::env::args_os()));
}
