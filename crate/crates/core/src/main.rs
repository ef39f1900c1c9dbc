fn main() {
    std::process::exit(spindyn::cli::run_cli(std::env::args_os()));
}
