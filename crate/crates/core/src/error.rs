use crate::dynamics::DynamicsError;
use crate::hitting::HittingError;
use crate::machine::{MachineError, ParseError};
use crate::protocol::ProtocolError;
use crate::reduction::ReductionError;
use crate::reversible::LabelError;

/// Any failure surfaced by the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Hitting(#[from] HittingError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
