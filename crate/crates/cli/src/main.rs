fn main() {
    std::process::exit(eqs_cli::run_cli(std::env::args_os()));
}
