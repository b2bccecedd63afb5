fn main() {
    std::process::exit(trigap::cli::run_from(std::env::args_os()));
}
