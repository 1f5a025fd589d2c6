fn main() {
    std::process::exit(limitlyap_cli::run(std::env::args_os()));
}
