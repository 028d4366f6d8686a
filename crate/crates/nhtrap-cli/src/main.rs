use clap::Parser;

fn main() {
    let cli = nhtrap_cli::Cli::parse();
    std::process::exit(nhtrap_cli::run(&cli));
}
