use std::io::Write;
use std::time::Instant;

use clap::Parser;
use opsteen::cli::{self, Cli};

fn main() {
    let args = match Cli::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let start = Instant::now();
    let report = cli::run(&args);
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    let written = match &args.out {
        Some(path) => std::fs::write(path, &text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("opsteen: cannot write report: {e}");
        std::process::exit(1);
    }
    if args.timing {
        eprintln!("elapsed: {:.3}s", start.elapsed().as_secs_f64());
    }
    std::process::exit(report.exit_code());
}
