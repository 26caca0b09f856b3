fn main() {
    std::process::exit(dialsum_cli::run(std::env::args_os()));
}
