use clap::Parser;

fn main() {
    std::process::exit(fdnoma::cli::main_with(fdnoma::cli::Args::parse()));
}
