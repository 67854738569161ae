fn main() {
    std::process::exit(veriscale::cli::main_with_args(std::env::args_os()));
}
