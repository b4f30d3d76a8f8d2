use clap::Parser;

fn main() {
    let cli = brbs_cli::Cli::parse();
    std::process::exit(brbs_cli::main_with(&cli));
}
