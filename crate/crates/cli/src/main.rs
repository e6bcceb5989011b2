mod args;
mod run;

use args::{Cli, Command};
use clap::Parser;

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Bench(args) => run::bench(&args),
        Command::Sweep(args) => run::sweep(&args),
        Command::Preset(args) => run::preset(&args),
        Command::Maxlen(args) => run::maxlen(&args),
        Command::Verify(args) => run::verify(&args),
        Command::Maskgen(args) => run::maskgen(&args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            // Machine-readable error object on stderr, nonzero exit.
            let object = serde_json::json!({
                "error": {
                    "kind": run::error_kind(&err),
                    "message": err.to_string(),
                }
            });
            eprintln!("{object}");
            std::process::exit(1);
        }
    }
}
