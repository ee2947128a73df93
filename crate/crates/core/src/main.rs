fn main() {
    std::process::exit(ncfa::cli::main_with_args(std::env::args_os()));
}
