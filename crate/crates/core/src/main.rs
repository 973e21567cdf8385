fn main() {
    std::process::exit(hvi::cli::main_with_args(std::env::args()));
}
