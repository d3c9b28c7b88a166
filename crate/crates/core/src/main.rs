fn main() {
    std::process::exit(bestpack::cli::main_with(std::env::args_os()));
}
