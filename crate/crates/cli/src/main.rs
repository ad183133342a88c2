fn main() {
    std::process::exit(tentcocycle_cli::run(std::env::args_os()));
}
