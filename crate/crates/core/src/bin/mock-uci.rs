//! Deterministic UCI engine for tests.
//!
//! Usage: mock-uci [--script FILE] [--silent-handshake] [--hang] [--ignore-stop]

use std::io::{self, BufWriter};
use std::process::ExitCode;

use gambit_core::engine::{run_mock, MockBehavior, MockScript};

fn main() -> ExitCode {
    let mut script = MockScript::new();
    let mut behavior = MockBehavior::default();
    let mut args = std::env::args().skip(1);
    while let Some(arg) = args.next() {
        match arg.as_str() {
            "--script" => {
                let Some(path) = args.next() else {
                    eprintln!("--script needs a path");
                    return ExitCode::from(2);
                };
                let parsed = std::fs::read_to_string(&path)
                    .map_err(|e| e.to_string())
                    .and_then(|t| MockScript::parse(&t).map_err(|e| e.to_string()));
                match parsed {
                    Ok(s) => script = s,
                    Err(e) => {
                        eprintln!("{path}: {e}");
                        return ExitCode::from(2);
                    }
                }
            }
            "--silent-handshake" => behavior.silent_handshake = true,
            "--hang" => behavior.hang_search = true,
            "--ignore-stop" => behavior.ignore_stop = true,
            other => {
                eprintln!("unknown argument '{other}'");
                return ExitCode::from(2);
            }
        }
    }
    let stdin = io::stdin().lock();
    let stdout = BufWriter::new(io::stdout().lock());
    match run_mock(script, behavior, stdin, stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(_) => ExitCode::FAILURE,
    }
}
