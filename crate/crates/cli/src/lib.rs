//! Library side of the `projlab` command-line tool.

pub mod analyze;
pub mod error;
pub mod export;
pub mod lemmas_cmd;
pub mod report;

pub use analyze::{analyze_file, analyze_spec, Analysis, AnalyzeOptions};
pub use error::{CliError, CliResult};
pub use report::{AnalysisReport, LemmaReport, SCHEMA_VERSION};
