fn main() {
    std::process::exit(infoconc::cli::main_with_args(std::env::args_os()));
}
