fn main() {
    std::process::exit(latdec_cli::main_with_args(std::env::args_os()));
}
