fn main() {
    std::process::exit(nonlocal_saddle::cli::main_with_args(std::env::args_os()));
}
