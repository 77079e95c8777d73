fn main() {
    std::process::exit(povcast::cli::main_with_args(std::env::args_os()));
}
