fn main() {
    std::process::exit(bloomqo::cli::run_cli(std::env::args_os()));
}
