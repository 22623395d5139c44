fn main() {
    std::process::exit(famus::cli::main_with_args(std::env::args_os()));
}
