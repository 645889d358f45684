use thiserror::Error;

use crate::engine::Seat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CardError {
    #[error("unknown card code {0:?}")]
    BadCode(String),
    #[error("unknown rank {0:?}")]
    BadRank(String),
    #[error("card {0} appears more than twice")]
    TooManyCopies(String),
    #[error("jokers have no place in sequence order")]
    JokerInSequence,
    #[error("a joker cannot be a round level")]
    JokerLevel,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComboError {
    #[error("hand is empty")]
    EmptyHand,
    #[error("malformed action: {0}")]
    BadWire(String),
    #[error(transparent)]
    Card(#[from] CardError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("seat {got} acted but seat {expected} is to move")]
    OutOfTurn { expected: Seat, got: Seat },
    #[error("illegal action from seat {seat}: {reason}")]
    IllegalAction { seat: Seat, reason: String },
    #[error("invalid state: {0}")]
    InvalidState(String),
}

/// A match aborted because an agent misbehaved or the step ceiling was hit.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchFault {
    #[error("seat {seat} returned action index {index} outside 0..{len}")]
    BadIndex {
        seat: Seat,
        index: usize,
        len: usize,
    },
    #[error("seat {seat}: {source}")]
    Engine {
        seat: Seat,
        #[source]
        source: EngineError,
    },
    #[error("match exceeded the step ceiling of {0}")]
    StepCeiling(u64),
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("replay mismatch at step {step}: {message}")]
    Mismatch { step: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("unknown agent {0:?}")]
    Unknown(String),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("invalid argument: {0}")]
    BadArgument(String),
    #[error("match {index} (seed {seed}) faulted: {fault}")]
    Fault {
        index: u64,
        seed: u64,
        fault: MatchFault,
    },
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
