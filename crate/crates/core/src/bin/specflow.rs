fn main() {
    std::process::exit(specflow::cli::main_with_args(std::env::args_os()));
}
