fn main() {
    std::process::exit(relkin_cli::run(std::env::args_os()));
}
