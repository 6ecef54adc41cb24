fn main() {
    std::process::exit(vmac_core::cli::run_cli(std::env::args_os()));
}
