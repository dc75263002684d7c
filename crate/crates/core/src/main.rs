use clap::Parser;

fn main() {
    let cli = numrange::cli::Cli::parse();
    if let Err(e) = numrange::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(numrange::cli::exit_code(&e));
    }
}
