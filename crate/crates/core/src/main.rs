fn main() {
    std::process::exit(ovslink::cli::main_with_args(std::env::args_os()));
}
