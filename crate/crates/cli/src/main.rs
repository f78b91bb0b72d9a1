use clap::Parser;

use tecoord_cli::{main_with_args, Args};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    std::process::exit(main_with_args(&args));
}
