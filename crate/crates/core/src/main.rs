fn main() {
    env_logger::init();
    std::process::exit(carnot_lab::cli::run(std::env::args_os()));
}
