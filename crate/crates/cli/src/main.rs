fn main() {
    std::process::exit(bcl_cli::run(std::env::args_os()));
}
