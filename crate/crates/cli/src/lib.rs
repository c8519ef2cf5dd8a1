pub mod config;
pub mod error;
pub mod run;

pub use config::{parse_config, Command, RunConfig};
pub use error::CliError;
pub use run::run;
