use clap::Parser;

use wavetrace_cli::{run, RunConfig};

fn main() {
    let cfg = RunConfig::parse();
    if let Err(e) = run(&cfg) {
        eprintln!("error[{}]: {e}", e.obstruction());
        std::process::exit(e.exit_code());
    }
}
