use clap::Parser;

fn main() {
    let cli = qap::cli::Cli::parse();
    if let Err(err) = qap::cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(qap::cli::exit_code(&err));
    }
}
