use clap::Parser;

fn main() {
    let cli = plus_cli::Cli::parse();
    std::process::exit(plus_cli::run(cli));
}
