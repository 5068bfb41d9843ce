fn main() {
    std::process::exit(dlselect_cli::main_with_args(std::env::args_os()));
}
