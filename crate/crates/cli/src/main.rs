use clap::Parser;

fn main() {
    let cli = psnads_cli::Cli::parse();
    std::process::exit(psnads_cli::run(&cli));
}
