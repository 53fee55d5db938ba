//! Timed reconfiguration supervisors for timed discrete-event systems.
//!
//! The pipeline runs from untimed activity graphs to a timed transition
//! graph ([`tdes`]), synthesizes a supervisor ([`synthesis`]), solves
//! reconfiguration problems on it by backtracking over forcible transitions
//! ([`reconfig`]) and checks that localized supervisors solve the same
//! problems ([`decentral`]).

pub mod automata;
pub mod decentral;
pub mod error;
pub mod event;
pub mod model;
pub mod reconfig;
pub mod synthesis;
pub mod tdes;

pub use automata::{Generator, StateId};
pub use error::{Error, Result};
pub use event::{Control, Event, EventDef, EventTable, UpperBound};
