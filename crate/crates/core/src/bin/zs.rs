fn main() {
    std::process::exit(zs_core::cli::main_with_args(std::env::args_os()));
}
