fn main() {
    env_logger::init();
    std::process::exit(agrisk::cli::run(std::env::args_os()));
}
