use std::process::ExitCode;

use clap::Parser;
use maxdet_cli::{run, Cli};

fn main() -> ExitCode {
    let res = run(Cli::parse());
    print!("{}", res.report);
    if let Some(err) = &res.error {
        eprintln!("error: {err}");
    }
    ExitCode::from(res.status.code())
}
