//! Scenario files, orchestration and reporting for the `weaklab` binary.

pub mod check;
pub mod config;
pub mod run;

pub use check::self_check;
pub use config::{parse_config, ScenarioConfig, ScenarioKind};
pub use run::{error_record, run_scenario, CheckLine, RunReport};

use crate::error::Error;

/// Process exit status for an error: 2 for configuration problems, 3 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ConfigParse { .. } | Error::ConfigValue { .. } | Error::UnknownState(_) => 2,
        _ => 3,
    }
}
