fn main() {
    std::process::exit(oce_risk::cli::main_with_args(std::env::args_os()));
}
