fn main() {
    std::process::exit(sbminfo::cli::main_with_args(std::env::args_os()));
}
