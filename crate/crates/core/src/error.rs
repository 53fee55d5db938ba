use thiserror::Error;

use crate::event::Event;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("no components")]
    NoComponents,

    #[error("event {0} is not in the alphabet")]
    EventNotInAlphabet(Event),

    #[error("state {0} does not exist")]
    UnknownState(usize),

    #[error("nondeterministic transition: state {state} already has a transition on {event}")]
    Nondeterministic { state: usize, event: Event },

    #[error("alphabets differ")]
    AlphabetMismatch,

    #[error("label 0 is reserved for tick")]
    ReservedTick,

    #[error("event {label}: lower bound {lower} exceeds upper bound {upper}")]
    InvalidBounds { label: Event, lower: u32, upper: u32 },

    #[error("duplicate event label {0}")]
    DuplicateEvent(Event),

    #[error("missing event definition for {0}")]
    MissingEventDef(Event),

    #[error("tick is not allowed in an activity transition graph")]
    TickInActivityGraph,

    #[error("timed graph exceeds the state cap of {0}")]
    StateCapExceeded(usize),

    #[error("spec event {0} is not a plant event")]
    SpecEventOutsidePlant(Event),

    #[error("reconfiguration event {0} must be prohibitible")]
    ReconfigEventNotProhibitible(Event),

    #[error("invalid reconfiguration problem: {0}")]
    InvalidProblem(String),

    #[error("no solution")]
    NoSolution,

    #[error("state lost under projection")]
    StateLostUnderProjection,

    #[error("correspondence not established")]
    CorrespondenceNotEstablished,

    #[error("decentralization package: {0}")]
    InvalidPackage(String),

    #[error("internal error: {0}")]
    Internal(String),
}
