// SPDX-License-Identifier: Apache-2.0

//! Golden-model stand-in speaking the line-delimited JSON protocol on
//! stdin/stdout. Serves the counter model, or any Verilog file via the
//! simulator, with optional injected faults for harness testing.

use std::io::{self, BufReader};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;
use rtlfix_core::oracle::stub::{serve, ServeEnd};
use rtlfix_core::oracle::{CounterModel, Faults, RtlModel};
use rtlfix_core::sim::Design;
use rtlfix_core::verilog::parse_module;

#[derive(Parser, Debug)]
#[command(name = "rtlfix-stub-oracle", version, about = "Reference model speaking the oracle wire protocol")]
struct Args {
    /// Serve this Verilog module instead of the built-in counter.
    #[arg(long)]
    rtl: Option<PathBuf>,
    /// Attach branch tags to each answer.
    #[arg(long)]
    tags: bool,
    /// Emit a non-JSON line at cycle N.
    #[arg(long, value_name = "N")]
    malformed_at: Option<usize>,
    /// Exit with status 3 at cycle N without answering.
    #[arg(long, value_name = "N")]
    crash_at: Option<usize>,
    /// Answer cycle N with an error message.
    #[arg(long, value_name = "N")]
    error_at: Option<usize>,
    /// Invert bit 0 of every output at cycle N.
    #[arg(long, value_name = "N")]
    flip_at: Option<usize>,
    /// Never report this output.
    #[arg(long, value_name = "PORT")]
    drop_output: Option<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let faults = Faults {
        malformed_at: args.malformed_at,
        crash_at: args.crash_at,
        error_at: args.error_at,
        flip_at: args.flip_at,
        drop_output: args.drop_output.clone(),
    };
    let stdin = BufReader::new(io::stdin().lock());
    let stdout = io::stdout().lock();
    let result = match &args.rtl {
        Some(path) => {
            let design = match load(path) {
                Ok(d) => d,
                Err(e) => {
                    eprintln!("rtlfix-stub-oracle: {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            };
            serve(&mut RtlModel::new(Arc::new(design)), stdin, stdout, &faults, args.tags)
        }
        None => serve(&mut CounterModel::default(), stdin, stdout, &faults, args.tags),
    };
    match result {
        Ok(ServeEnd::Done) => ExitCode::SUCCESS,
        Ok(ServeEnd::Crash) => ExitCode::from(3),
        Ok(ServeEnd::Violation(m)) => {
            eprintln!("rtlfix-stub-oracle: protocol violation: {m}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("rtlfix-stub-oracle: {e}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &PathBuf) -> Result<Design, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let m = parse_module(&text).map_err(|e| e.to_string())?;
    Design::lower(&m).map_err(|e| e.to_string())
}
