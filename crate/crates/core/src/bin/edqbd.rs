fn main() {
    std::process::exit(edqbd::cli::main_with_args(std::env::args_os()));
}
