//! Errors mapped to exit codes: 2 usage or configuration, 3 data, 4 runtime
//! or solver, 5 model backend.

use std::path::Path;

use moco_core::agent::{AgentError, BackendError, TemplateError};
use moco_core::dataio::DataError;
use moco_core::frontier::FrontierError;
use moco_core::heuristics::SolveError;
use moco_core::model::ModelError;
use moco_core::oracle::OracleError;

pub const USAGE: i32 = 2;
pub const DATA: i32 = 3;
pub const RUNTIME: i32 = 4;
pub const BACKEND: i32 = 5;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: USAGE, message: message.into() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self { code: DATA, message: format!("{}: {e}", path.display()) }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Self { code: USAGE, message: e.to_string() }
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        Self { code: DATA, message: e.to_string() }
    }
}

impl From<FrontierError> for Failure {
    fn from(e: FrontierError) -> Self {
        Self { code: RUNTIME, message: e.to_string() }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        let code = match e {
            SolveError::InvalidBudget(_) | SolveError::Model(_) => USAGE,
            SolveError::NoSolution => RUNTIME,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        let code = match e {
            OracleError::TooLarge { .. } | OracleError::Lambda(_) | OracleError::Model(_) => USAGE,
            OracleError::Infeasible(_) | OracleError::Solver(_) => RUNTIME,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<TemplateError> for Failure {
    fn from(e: TemplateError) -> Self {
        Self { code: USAGE, message: e.to_string() }
    }
}

impl From<BackendError> for Failure {
    fn from(e: BackendError) -> Self {
        let code = match e {
            BackendError::Config(_) => USAGE,
            BackendError::Fixture { .. } => DATA,
            _ => BACKEND,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<AgentError> for Failure {
    fn from(e: AgentError) -> Self {
        match e {
            AgentError::Template(t) => t.into(),
            AgentError::Backend(b) => b.into(),
            AgentError::Sandbox(s) => Self { code: RUNTIME, message: s.to_string() },
            AgentError::History { .. } => Self { code: DATA, message: e.to_string() },
        }
    }
}
