use clap::Parser;
use shrinkpred::{run, Cli};

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("shrinkpred: {e}");
        std::process::exit(e.exit_code());
    }
}
