fn main() {
    std::process::exit(probelab::cli::run_cli(std::env::args_os()));
}
