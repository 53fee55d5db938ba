//! Timed reconfiguration problems and their solution by backtracking over
//! forcible transitions.
//!
//! Given a supervisor residing at a source state and a target state where
//! the reconfiguration event is defined, the solver looks for every simple
//! path from source to target along which each step is guaranteed to
//! happen: the step's event is forcible, or every competing event at the
//! step's origin can be disabled. `tick` is neither forcible nor
//! prohibitible, so a non-forcible step competing with `tick` fails, and a
//! `tick` step succeeds only when everything competing with it is
//! prohibitible.
//!
//! The solver never inspects `tick` specially, so it runs unchanged on
//! tick-projected supervisors.

mod bft;
mod commute;
mod paths;

use std::collections::BTreeSet;

use serde::Serialize;

pub use bft::{attraction_field, build_bft, prune_to_pbft, Bft, BftNode, TrsLimits};
pub use commute::{access_word, verify_projection_commutativity, CommutativityReport};
pub use paths::{compare, select_optimal, trs, trs_with, Criterion, ForciblePath, ForciblePathSet, PathKind, Solution, TrsStatus};

use crate::automata::{Generator, StateId};
use crate::error::{Error, Result};
use crate::event::{Event, EventTable};
use crate::synthesis::Supervisor;

/// A reconfiguration problem over a deterministic supervisor automaton.
#[derive(Clone, Copy, Debug)]
pub struct ReconfigProblem<'a> {
    automaton: &'a Generator,
    events: &'a EventTable,
    source: StateId,
    target: StateId,
    reconfig_event: Event,
}

impl<'a> ReconfigProblem<'a> {
    /// Validates that both states are reachable and that the reconfiguration
    /// event is defined at the target.
    pub fn new(
        automaton: &'a Generator,
        events: &'a EventTable,
        source: StateId,
        target: StateId,
        reconfig_event: Event,
    ) -> Result<Self> {
        for s in [source, target] {
            if !automaton.has_state(s) {
                return Err(Error::UnknownState(s));
            }
        }
        let reach = automaton.reachable();
        if !reach[source] || !reach[target] {
            return Err(Error::InvalidProblem("source and target must be reachable".into()));
        }
        if automaton.successor(target, reconfig_event).is_none() {
            return Err(Error::InvalidProblem(format!(
                "reconfiguration event {reconfig_event} is not defined at target state {target}"
            )));
        }
        Ok(Self { automaton, events, source, target, reconfig_event })
    }

    pub fn on_supervisor(
        supervisor: &'a Supervisor,
        source: StateId,
        target: StateId,
        reconfig_event: Event,
    ) -> Result<Self> {
        Self::new(supervisor.generator(), supervisor.events(), source, target, reconfig_event)
    }

    pub fn automaton(&self) -> &'a Generator {
        self.automaton
    }

    pub fn events(&self) -> &'a EventTable {
        self.events
    }

    pub fn source(&self) -> StateId {
        self.source
    }

    pub fn target(&self) -> StateId {
        self.target
    }

    pub fn reconfig_event(&self) -> Event {
        self.reconfig_event
    }
}

/// Backtrackable predecessors of `anchor`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EligibilitySet {
    pub anchor: StateId,
    pub entries: BTreeSet<(StateId, Event)>,
}

impl EligibilitySet {
    /// Predecessor states, without the events.
    pub fn selector(&self) -> BTreeSet<StateId> {
        self.entries.iter().map(|&(q, _)| q).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Whether `from --event--> to` is guaranteed to be executable: `event` is
/// forcible, or every other event eligible at `from` that leads somewhere
/// other than `to` is prohibitible.
pub fn step_is_forcible(
    g: &Generator,
    events: &EventTable,
    from: StateId,
    event: Event,
    to: StateId,
) -> bool {
    events.is_forcible(event)
        || g.transitions_from(from).all(|(e, t)| t == to || events.is_prohibitible(e))
}

pub fn eligibility_set(g: &Generator, events: &EventTable, anchor: StateId) -> EligibilitySet {
    let entries = g
        .transitions()
        .filter(|&(s, e, t)| t == anchor && step_is_forcible(g, events, s, e, anchor))
        .map(|(s, e, _)| (s, e))
        .collect();
    EligibilitySet { anchor, entries }
}

/// Same as [`eligibility_set`] using precomputed predecessor lists.
pub(crate) fn eligibility_set_with(
    g: &Generator,
    events: &EventTable,
    preds: &[Vec<(StateId, Event)>],
    anchor: StateId,
) -> EligibilitySet {
    let entries = preds[anchor]
        .iter()
        .filter(|&&(s, e)| step_is_forcible(g, events, s, e, anchor))
        .copied()
        .collect();
    EligibilitySet { anchor, entries }
}
