//! GuanDan rules engine, encodings, agents and match tooling.

pub mod agents;
pub mod cards;
pub mod combos;
pub mod encode;
pub mod engine;
pub mod error;
pub mod harness;
pub mod protocol;
pub mod record;
pub mod runner;

pub use cards::{Card, CardSet, Level, Rank, Suit};
pub use combos::{Action, Combination, ComboType};
pub use engine::{MatchState, Phase, Role, RoundResult, RoundState, Seat};
pub use error::{
    AgentError, CardError, ComboError, EngineError, HarnessError, MatchFault, RecordError,
};
