use clap::Parser;
use orlicz_var::cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    let outcome = execute(&cli);
    print!("{}", outcome.stdout);
    for m in &outcome.messages {
        eprintln!("orlicz-var {}: {m}", cli.command.name());
    }
    std::process::exit(outcome.code);
}
