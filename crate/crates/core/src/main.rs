fn main() {
    std::process::exit(camlp_core::cli::run_command(std::env::args_os()));
}
