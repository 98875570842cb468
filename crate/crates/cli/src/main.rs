fn main() {
    std::process::exit(causal_lab_cli::main_with_args(std::env::args_os()));
}
