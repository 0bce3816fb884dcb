use clap::Parser;
use fy_invopt::cli::{self, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    std::process::exit(cli::run(Cli::parse()));
}
