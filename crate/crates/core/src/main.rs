use clap::Parser;

fn main() {
    std::process::exit(rieszgas::cli::main_with_args(rieszgas::cli::Args::parse()));
}
