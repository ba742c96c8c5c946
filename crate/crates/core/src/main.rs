fn main() {
    std::process::exit(dryfriction::cli::main_with_args(std::env::args_os()));
}
