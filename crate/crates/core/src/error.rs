use thiserror::Error;

use crate::grid_model::{BusId, Violation};

pub type Result<T, E = ScError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ScError {
    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("unknown fault bus {0}")]
    UnknownFaultBus(BusId),

    #[error("network failed validation with {} violation(s): {}", .0.len(), summarize(.0))]
    Validation(Vec<Violation>),

    #[error("fault bus {bus} lies in an island without a voltage source")]
    UnsolvableIsland { bus: BusId },

    #[error("zero-impedance branch {element} cannot be stamped")]
    SingularStamp { element: String },

    #[error("admittance matrix is singular at row {row} (island containing {island})")]
    SingularMatrix { row: usize, island: String },
}

impl ScError {
    /// Input problems (bad data, bad options) as opposed to numerical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            ScError::InvalidOption(_)
                | ScError::InvalidData(_)
                | ScError::UnknownFaultBus(_)
                | ScError::Validation(_)
        )
    }
}

fn summarize(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
