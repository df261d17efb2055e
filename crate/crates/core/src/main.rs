fn main() {
    std::process::exit(qhgeom::cli::main_with_args(std::env::args_os()));
}
