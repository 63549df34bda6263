//! Command-line front end: argument and config-file resolution, run dispatch, and
//! the CSV / JSON artifacts each run leaves behind.

mod config;
mod output;
mod run;

pub use config::{parse_and_validate, resolve, Cli, Command, CommandKind, CommonArgs, LambdaSpec, RunConfig, Setting, Source};
pub use output::{fmt_f64, RunReport, Status, REPORT_SCHEMA_VERSION};
pub use run::{run, RunOutcome};
