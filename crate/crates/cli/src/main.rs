use clap::Parser;

use robust_causal_cli::{configure_threads, exit_code, run, Cli, ErrorReport};

fn main() {
    let cli = Cli::parse();
    configure_threads();
    let result = run(cli);
    if let Err(e) = &result {
        let report = ErrorReport::from_error(e);
        eprintln!("{}", serde_json::to_string(&report).unwrap_or_else(|_| report.message.clone()));
    }
    std::process::exit(exit_code(&result));
}
