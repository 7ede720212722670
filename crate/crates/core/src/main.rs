fn main() {
    env_logger::init();
    std::process::exit(serial_monopoly::cli::run_cli(std::env::args_os()));
}
