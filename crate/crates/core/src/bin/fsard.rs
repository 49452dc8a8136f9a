fn main() {
    std::process::exit(fsard::cli::main_with_args(std::env::args_os()));
}
