use clap::Parser;
use twinbeam_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    if let Err(failure) = run(&cli) {
        eprintln!("error: {failure}");
        std::process::exit(failure.exit_code());
    }
}
