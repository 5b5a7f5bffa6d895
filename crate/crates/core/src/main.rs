fn main() {
    std::process::exit(wecstore::cli::main_with_args(std::env::args_os()));
}
