fn main() {
    env_logger::init();
    std::process::exit(honeyq::cli::run(std::env::args_os()));
}
