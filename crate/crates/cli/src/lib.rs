//! `tgpd`: trains teachers, records distillation data, distills students,
//! trains the multi-task baseline and runs the analyses, writing CSV logs,
//! checkpoints and a JSON manifest per run.

mod args;
pub mod commands;
pub mod config;
mod games;
pub mod manifest;

use std::ffi::OsString;
use std::fmt;

pub use config::{ExperimentConfig, Kind};
pub use games::load_game;
pub use manifest::RunManifest;

/// Why a run stopped. Maps onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Unparseable command line; the usage text, exit code 1.
    Usage(String),
    /// Bad flags, config or inputs; exit code 1.
    Config(String),
    /// Training, analysis or I/O failed; exit code 2.
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) | Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m.trim_end()),
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Runtime(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl From<tgpd_core::Error> for Failure {
    fn from(e: tgpd_core::Error) -> Self {
        use tgpd_core::env::EnvError;
        use tgpd_core::Error as E;
        match e {
            E::Config(_) | E::UnknownGame(_) | E::Unsupported(_) => Failure::Config(e.to_string()),
            E::Env(EnvError::Invalid { .. } | EnvError::UnknownGame(_) | EnvError::Unreachable { .. }) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

/// Parse `argv`, run the experiment and return the exit code. Usage and
/// errors go to standard error; the manifest path goes to standard output.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match args::parse(argv) {
        Ok(args::Parsed::Run(cfg)) => cfg,
        Ok(args::Parsed::Help(text)) => {
            print!("{text}");
            return 0;
        }
        Err(f) => {
            eprintln!("{f}");
            return f.exit_code();
        }
    };
    match commands::execute(&cfg) {
        Ok(m) => {
            println!("{}", m.path.display());
            0
        }
        Err(f) => {
            eprintln!("tgpd {}: {f}", cfg.kind.name());
            f.exit_code()
        }
    }
}
