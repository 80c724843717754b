use clap::Parser;

fn main() {
    let cli = adrnet::cli::Cli::parse();
    if let Err(err) = adrnet::cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
