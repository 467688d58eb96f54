use clap::Parser;

fn main() {
    let cli = focs_cli::Cli::parse();
    if let Err(err) = focs_cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(focs_cli::exit_code(&err));
    }
}
