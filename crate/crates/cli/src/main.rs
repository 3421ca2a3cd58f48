use clap::Parser;
use ethgnn_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = ethgnn_cli::run(cli) {
        eprint!("{e}");
        if matches!(e, ethgnn_cli::CliError::Runtime(_)) {
            eprintln!();
        }
        std::process::exit(e.exit_code());
    }
}
