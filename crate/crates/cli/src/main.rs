use clap::Parser;
use glsampler_cli::commands::{run, Cli, EXIT_INPUT};

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .init();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    debug_assert!(code == 0 || code == EXIT_INPUT || code == 3);
    std::process::exit(code);
}
