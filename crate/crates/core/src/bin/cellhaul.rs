fn main() {
    std::process::exit(cellhaul::cli::main_with(std::env::args_os()));
}
