fn main() {
    std::process::exit(controster::cli::main_with_args(std::env::args_os()));
}
