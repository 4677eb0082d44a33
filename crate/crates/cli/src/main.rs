use clap::Parser;

fn main() {
    let cli = netform_cli::Cli::parse();
    std::process::exit(netform_cli::run(&cli));
}
