fn main() {
    std::process::exit(geoecon::cli::main_with_args(std::env::args_os()));
}
