mod analysis;
mod args;
mod learn;

use clap::Parser;
use std::path::Path;
use std::process::ExitCode;

/// Exit status 2 for bad configuration, 1 for failures while running.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl From<wavenet_core::Error> for Failure {
    fn from(e: wavenet_core::Error) -> Self {
        match e {
            wavenet_core::Error::Config(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

pub type Outcome = Result<(), Failure>;

pub fn create_out_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Outcome {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// `1234567` as `1,234,567`.
pub fn grouped(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn main() -> ExitCode {
    use args::Command;
    let cli = args::Cli::parse();
    let result = match cli.command {
        Command::Train(a) => learn::train(a),
        Command::Eval(a) => learn::eval(a),
        Command::Diagnose(a) => analysis::diagnose(a),
        Command::Gradcheck(a) => analysis::gradcheck(a),
        Command::SimulateDecay(a) => analysis::simulate_decay(a),
        Command::CountParams(a) => analysis::count_params(a),
        Command::Complexity(a) => analysis::complexity(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
