fn main() {
    std::process::exit(ncfactor::cli::main_with_args(std::env::args_os()));
}
