use clap::Parser;

fn main() {
    std::process::exit(pinch_cli::main_with(pinch_cli::Args::parse()));
}
