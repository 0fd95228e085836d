fn main() {
    std::process::exit(cdp_cli::main_with_args(std::env::args_os()));
}
