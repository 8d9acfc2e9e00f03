use alloc::string::String;

/// Everything that can go wrong inside the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("integration diverged at t = {t}")]
    IntegrationDiverged { t: f64 },
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    TrainingDiverged { epoch: usize, loss: f64 },
    #[error("degenerate kernel: row {row} sums to {sum:e}")]
    DegenerateKernel { row: usize, sum: f64 },
    #[error("point is outside the kernel support (row sum {sum:e})")]
    OutOfSupport { sum: f64 },
    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("truncation set is empty (delta = {delta})")]
    EmptyTruncation { delta: f64 },
}

impl Error {
    /// True for failures of the numerics (as opposed to bad inputs).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IntegrationDiverged { .. }
                | Error::TrainingDiverged { .. }
                | Error::NoConvergence { .. }
                | Error::DegenerateKernel { .. }
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
