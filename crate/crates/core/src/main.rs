use clap::Parser;

use nsrl::cli::{configure_threads, exit_code, run_command, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = configure_threads().and_then(|()| run_command(cli)) {
        eprintln!("nsrl: {e}");
        std::process::exit(exit_code(&e));
    }
}
