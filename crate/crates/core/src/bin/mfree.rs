fn main() {
    std::process::exit(mfree::cli::main_with_args(std::env::args_os()));
}
