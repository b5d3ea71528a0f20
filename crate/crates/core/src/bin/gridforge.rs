fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRIDFORGE_LOG", "warn")).init();
    std::process::exit(gridforge::cli::run_from(std::env::args_os()));
}
