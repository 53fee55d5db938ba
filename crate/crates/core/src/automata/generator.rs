use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::Event;

pub type StateId = usize;

/// Finite deterministic generator.
///
/// States are dense indices `0..num_states()`. A generator with no states
/// has the empty language; otherwise `initial()` is a valid state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    alphabet: BTreeSet<Event>,
    delta: Vec<BTreeMap<Event, StateId>>,
    initial: StateId,
    marked: Vec<bool>,
}

impl Generator {
    /// Generator with no states (empty language).
    pub fn empty(alphabet: impl IntoIterator<Item = Event>) -> Self {
        Self {
            alphabet: alphabet.into_iter().collect(),
            delta: Vec::new(),
            initial: 0,
            marked: Vec::new(),
        }
    }

    /// `n` unmarked states without transitions; state 0 is initial.
    pub fn with_states(n: usize, alphabet: impl IntoIterator<Item = Event>) -> Self {
        Self {
            alphabet: alphabet.into_iter().collect(),
            delta: vec![BTreeMap::new(); n],
            initial: 0,
            marked: vec![false; n],
        }
    }

    pub fn add_state(&mut self, marked: bool) -> StateId {
        self.delta.push(BTreeMap::new());
        self.marked.push(marked);
        self.delta.len() - 1
    }

    pub fn add_event(&mut self, event: Event) {
        self.alphabet.insert(event);
    }

    pub fn add_transition(&mut self, from: StateId, event: Event, to: StateId) -> Result<()> {
        self.check_state(from)?;
        self.check_state(to)?;
        if !self.alphabet.contains(&event) {
            return Err(Error::EventNotInAlphabet(event));
        }
        match self.delta[from].get(&event) {
            Some(&existing) if existing != to => {
                Err(Error::Nondeterministic { state: from, event })
            }
            _ => {
                self.delta[from].insert(event, to);
                Ok(())
            }
        }
    }

    pub fn remove_transition(&mut self, from: StateId, event: Event) -> Option<StateId> {
        self.delta.get_mut(from)?.remove(&event)
    }

    pub fn set_marked(&mut self, state: StateId, marked: bool) -> Result<()> {
        self.check_state(state)?;
        self.marked[state] = marked;
        Ok(())
    }

    pub fn set_initial(&mut self, state: StateId) -> Result<()> {
        self.check_state(state)?;
        self.initial = state;
        Ok(())
    }

    fn check_state(&self, state: StateId) -> Result<()> {
        if state < self.delta.len() {
            Ok(())
        } else {
            Err(Error::UnknownState(state))
        }
    }

    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    pub fn num_transitions(&self) -> usize {
        self.delta.iter().map(BTreeMap::len).sum()
    }

    pub fn alphabet(&self) -> &BTreeSet<Event> {
        &self.alphabet
    }

    pub fn initial(&self) -> Option<StateId> {
        (!self.is_empty()).then_some(self.initial)
    }

    pub fn is_marked(&self, state: StateId) -> bool {
        self.marked.get(state).copied().unwrap_or(false)
    }

    pub fn marked_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.marked.iter().enumerate().filter(|(_, &m)| m).map(|(s, _)| s)
    }

    pub fn has_state(&self, state: StateId) -> bool {
        state < self.delta.len()
    }

    pub fn successor(&self, state: StateId, event: Event) -> Option<StateId> {
        self.delta.get(state)?.get(&event).copied()
    }

    /// Outgoing `(event, target)` pairs in ascending event order.
    pub fn transitions_from(
        &self,
        state: StateId,
    ) -> impl Iterator<Item = (Event, StateId)> + '_ {
        self.delta[state].iter().map(|(&e, &t)| (e, t))
    }

    /// All `(source, event, target)` triples, ordered by source then event.
    pub fn transitions(&self) -> impl Iterator<Item = (StateId, Event, StateId)> + '_ {
        self.delta
            .iter()
            .enumerate()
            .flat_map(|(s, m)| m.iter().map(move |(&e, &t)| (s, e, t)))
    }

    pub fn eligible(&self, state: StateId) -> BTreeSet<Event> {
        self.delta[state].keys().copied().collect()
    }

    /// Runs `word` from `state`.
    pub fn run(&self, state: StateId, word: &[Event]) -> Option<StateId> {
        word.iter().try_fold(state, |s, &e| self.successor(s, e))
    }

    /// Runs `word` from the initial state.
    pub fn accepts_prefix(&self, word: &[Event]) -> bool {
        self.initial().and_then(|q| self.run(q, word)).is_some()
    }

    pub fn accepts_marked(&self, word: &[Event]) -> bool {
        self.initial()
            .and_then(|q| self.run(q, word))
            .is_some_and(|s| self.is_marked(s))
    }

    /// Predecessor lists: `preds[t]` holds every `(source, event)` with
    /// `delta(source, event) = t`.
    pub fn predecessors(&self) -> Vec<Vec<(StateId, Event)>> {
        let mut preds = vec![Vec::new(); self.num_states()];
        for (s, e, t) in self.transitions() {
            preds[t].push((s, e));
        }
        preds
    }

    /// States reachable from the initial state.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let Some(q0) = self.initial() else { return seen };
        let mut queue = VecDeque::from([q0]);
        seen[q0] = true;
        while let Some(s) = queue.pop_front() {
            for (_, t) in self.transitions_from(s) {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    /// States from which a marked state is reachable.
    pub fn coreachable(&self) -> Vec<bool> {
        let preds = self.predecessors();
        let mut seen = self.marked.clone();
        let mut stack: Vec<StateId> = self.marked_states().collect();
        while let Some(t) = stack.pop() {
            for &(s, _) in &preds[t] {
                if !seen[s] {
                    seen[s] = true;
                    stack.push(s);
                }
            }
        }
        seen
    }

    /// Sub-generator on the states where `keep` holds, restricted to those
    /// reachable from the initial state through kept states and renumbered
    /// in BFS order. Also returns `old -> new` for retained states.
    pub fn restrict(&self, keep: &[bool]) -> (Generator, Vec<Option<StateId>>) {
        let mut map = vec![None; self.num_states()];
        let mut out = Generator::empty(self.alphabet.iter().copied());
        let Some(q0) = self.initial() else { return (out, map) };
        if !keep[q0] {
            return (out, map);
        }
        let mut order = vec![q0];
        map[q0] = Some(0);
        let mut i = 0;
        while i < order.len() {
            let s = order[i];
            i += 1;
            for (_, t) in self.transitions_from(s) {
                if keep[t] && map[t].is_none() {
                    map[t] = Some(order.len());
                    order.push(t);
                }
            }
        }
        out.delta = vec![BTreeMap::new(); order.len()];
        out.marked = order.iter().map(|&s| self.marked[s]).collect();
        for (new_s, &s) in order.iter().enumerate() {
            for (e, t) in self.transitions_from(s) {
                if let Some(nt) = map[t] {
                    out.delta[new_s].insert(e, nt);
                }
            }
        }
        (out, map)
    }

    /// Reachable part in canonical BFS numbering.
    pub fn canonical(&self) -> Generator {
        self.restrict(&vec![true; self.num_states()]).0
    }
}
