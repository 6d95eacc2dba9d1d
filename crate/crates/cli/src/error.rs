//! Errors of the command line front end and their exit codes.

use btt_core::branch::BranchError;
use btt_core::config::ConfigError;
use btt_core::counting::CountError;
use btt_core::ideals::IdealError;
use btt_core::numfield::NumfieldError;
use btt_core::synth::SynthError;
use serde_json::{json, Value};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_REGRESSION: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_UNSUPPORTED: i32 = 3;
pub const EXIT_SYMBOLIC: i32 = 4;
pub const EXIT_FAILED: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0} regression case(s) failed")]
    Regression(usize),
    #[error("invalid job: {0}")]
    Schema(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// The count is a multiple of an unconfigured class number.
    #[error("the count is symbolic")]
    Symbolic(Value),
    #[error("computation failed: {0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Regression(_) => EXIT_REGRESSION,
            CliError::Schema(_) => EXIT_SCHEMA,
            CliError::Unsupported(_) => EXIT_UNSUPPORTED,
            CliError::Symbolic(_) => EXIT_SYMBOLIC,
            CliError::Failed(_) => EXIT_FAILED,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Regression(_) => "regression",
            CliError::Schema(_) => "schema",
            CliError::Unsupported(_) => "unsupported",
            CliError::Symbolic(_) => "symbolic",
            CliError::Failed(_) => "failed",
        }
    }

    /// The structured error object printed on failure.
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let CliError::Symbolic(report) = self {
            v["report"] = report.clone();
        }
        v
    }
}

impl From<CountError> for CliError {
    fn from(e: CountError) -> Self {
        match e {
            CountError::RelatorViolated(_) | CountError::NotFaithful(..) => {
                CliError::Schema(e.to_string())
            }
            CountError::Unsupported(_)
            | CountError::NotDefined(..)
            | CountError::MissingConfig(_) => CliError::Unsupported(e.to_string()),
            CountError::Numfield(NumfieldError::Parse(_)) => CliError::Schema(e.to_string()),
            CountError::Config(c) => c.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Count(c) => c.into(),
            SynthError::Unsupported(_) => CliError::Unsupported(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<BranchError> for CliError {
    fn from(e: BranchError) -> Self {
        match e {
            BranchError::NotIntegral(_) => CliError::Unsupported(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Schema(format!("configuration: {e}"))
    }
}

impl From<NumfieldError> for CliError {
    fn from(e: NumfieldError) -> Self {
        CliError::Schema(e.to_string())
    }
}

impl From<IdealError> for CliError {
    fn from(e: IdealError) -> Self {
        CliError::Failed(e.to_string())
    }
}
