//! Timed transition graphs built from activity transition graphs.
//!
//! A timed state pairs an activity with a timer per activity event.
//! Timers count down on `tick`:
//!
//! * `tick` is eligible unless an enabled prospective event has timer 0;
//!   it decrements the timer of every enabled event (remote timers stop
//!   at 0) and leaves disabled events at their default.
//! * a prospective event is eligible once `timer <= upper - lower`, a
//!   remote event once `timer == 0`.
//! * when an event occurs its own timer resets; any other event keeps its
//!   timer iff it is enabled both before and after, otherwise it resets.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::automata::{Generator, StateId};
use crate::error::{Error, Result};
use crate::event::{Event, EventDef, EventTable, UpperBound};

pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimedState {
    pub activity: StateId,
    pub timers: BTreeMap<Event, u32>,
}

#[derive(Clone, Copy, Debug)]
pub struct TimedGraphOptions {
    pub state_cap: usize,
}

impl Default for TimedGraphOptions {
    fn default() -> Self {
        Self { state_cap: DEFAULT_STATE_CAP }
    }
}

/// A generator over `activity events ∪ {tick}` together with its event
/// table and, when built by [`timed_graph`], the timed state behind every
/// generator state.
#[derive(Clone, Debug)]
pub struct TimedGenerator {
    generator: Generator,
    events: EventTable,
    states: Option<Vec<TimedState>>,
}

impl TimedGenerator {
    /// Wraps an explicitly given timed behavior (e.g. a random test plant
    /// or a file-provided TTG). Tick is added to the alphabet.
    pub fn from_generator(mut generator: Generator, events: EventTable) -> Result<Self> {
        generator.add_event(Event::TICK);
        for &e in generator.alphabet() {
            if !e.is_tick() && !events.contains(e) {
                return Err(Error::MissingEventDef(e));
            }
        }
        Ok(Self { generator, events, states: None })
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn events(&self) -> &EventTable {
        &self.events
    }

    pub fn timed_state(&self, state: StateId) -> Option<&TimedState> {
        self.states.as_ref()?.get(state)
    }

    pub fn timed_states(&self) -> Option<&[TimedState]> {
        self.states.as_deref()
    }

    pub fn eligible(&self, state: StateId) -> Result<BTreeSet<Event>> {
        if !self.generator.has_state(state) {
            return Err(Error::UnknownState(state));
        }
        Ok(self.generator.eligible(state))
    }

    pub fn into_generator(self) -> Generator {
        self.generator
    }
}

/// Builds the timed transition graph of `atg` by forward exploration from
/// the initial timed state.
pub fn timed_graph(
    atg: &Generator,
    events: &EventTable,
    options: TimedGraphOptions,
) -> Result<TimedGenerator> {
    if atg.alphabet().contains(&Event::TICK) {
        return Err(Error::TickInActivityGraph);
    }
    let defs: Vec<EventDef> = atg
        .alphabet()
        .iter()
        .map(|&e| events.get(e).copied().ok_or(Error::MissingEventDef(e)))
        .collect::<Result<_>>()?;
    let mut alphabet = atg.alphabet().clone();
    alphabet.insert(Event::TICK);
    let mut out = Generator::empty(alphabet);
    let mut states = Vec::new();
    let Some(a0) = atg.initial() else {
        return Ok(TimedGenerator { generator: out, events: events.clone(), states: Some(states) });
    };

    let defaults: Vec<u32> = defs.iter().map(EventDef::default_timer).collect();
    let enabled = |a: StateId, i: usize| atg.successor(a, defs[i].label()).is_some();

    let mut interner = Interner { index: HashMap::new(), keys: Vec::new(), cap: options.state_cap };
    let mut queue = VecDeque::new();
    interner.intern((a0, defaults.clone()), atg, &mut out, &mut queue)?;
    while let Some(src) = queue.pop_front() {
        let (a, timers) = interner.keys[src].clone();
        // tick
        let deadline = (0..defs.len())
            .any(|i| !defs[i].is_remote() && enabled(a, i) && timers[i] == 0);
        if !deadline {
            let next: Vec<u32> = (0..defs.len())
                .map(|i| {
                    if enabled(a, i) {
                        timers[i].saturating_sub(1)
                    } else {
                        defaults[i]
                    }
                })
                .collect();
            let dst = interner.intern((a, next), atg, &mut out, &mut queue)?;
            out.add_transition(src, Event::TICK, dst)?;
        }
        // activity events, ascending label order
        for (i, def) in defs.iter().enumerate() {
            let Some(a2) = atg.successor(a, def.label()) else { continue };
            let eligible = match def.upper() {
                UpperBound::Finite(u) => timers[i] <= u - def.lower(),
                UpperBound::Infinite => timers[i] == 0,
            };
            if !eligible {
                continue;
            }
            let next: Vec<u32> = (0..defs.len())
                .map(|j| {
                    if j != i && enabled(a, j) && enabled(a2, j) {
                        timers[j]
                    } else {
                        defaults[j]
                    }
                })
                .collect();
            let dst = interner.intern((a2, next), atg, &mut out, &mut queue)?;
            out.add_transition(src, def.label(), dst)?;
        }
    }

    states.extend(interner.keys.into_iter().map(|(a, t)| TimedState {
        activity: a,
        timers: defs.iter().map(EventDef::label).zip(t).collect(),
    }));
    Ok(TimedGenerator { generator: out, events: events.clone(), states: Some(states) })
}

type Key = (StateId, Vec<u32>);

struct Interner {
    index: HashMap<Key, StateId>,
    keys: Vec<Key>,
    cap: usize,
}

impl Interner {
    fn intern(
        &mut self,
        key: Key,
        atg: &Generator,
        out: &mut Generator,
        queue: &mut VecDeque<StateId>,
    ) -> Result<StateId> {
        if let Some(&s) = self.index.get(&key) {
            return Ok(s);
        }
        if self.keys.len() >= self.cap {
            return Err(Error::StateCapExceeded(self.cap));
        }
        let s = out.add_state(atg.is_marked(key.0));
        self.index.insert(key.clone(), s);
        self.keys.push(key);
        queue.push_back(s);
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Control;

    fn def(label: u32, lower: u32, upper: Option<u32>) -> EventDef {
        let upper = upper.map_or(UpperBound::Infinite, UpperBound::Finite);
        EventDef::new(Event(label), Control::Prohibitible, false, lower, upper).unwrap()
    }

    fn self_loop(label: u32) -> Generator {
        let mut g = Generator::with_states(1, [Event(label)]);
        g.add_transition(0, Event(label), 0).unwrap();
        g.set_marked(0, true).unwrap();
        g
    }

    #[test]
    fn prospective_unit_bounds_alternate_tick_and_event() {
        let events: EventTable = [def(1, 1, Some(1))].into_iter().collect();
        let ttg = timed_graph(&self_loop(1), &events, Default::default()).unwrap();
        let g = ttg.generator();
        assert_eq!(g.num_states(), 2);
        // hand simulation: t=1 -tick-> t=0 -σ-> t=1
        assert_eq!(g.eligible(0), BTreeSet::from([Event::TICK]));
        assert_eq!(g.successor(0, Event::TICK), Some(1));
        assert_eq!(ttg.eligible(1).unwrap(), BTreeSet::from([Event(1)]));
        assert_eq!(g.successor(1, Event(1)), Some(0));
    }

    #[test]
    fn remote_lower_two_needs_two_ticks() {
        let events: EventTable = [def(1, 2, None)].into_iter().collect();
        let ttg = timed_graph(&self_loop(1), &events, Default::default()).unwrap();
        let g = ttg.generator();
        assert_eq!(g.num_states(), 3);
        assert!(!g.accepts_prefix(&[Event(1)]));
        assert!(!g.accepts_prefix(&[Event::TICK, Event(1)]));
        assert!(g.accepts_prefix(&[Event::TICK, Event::TICK, Event(1)]));
        assert!(g.accepts_prefix(&[Event::TICK; 7]));
        for s in 0..3 {
            assert!(g.eligible(s).contains(&Event::TICK));
        }
    }

    #[test]
    fn empty_activity_graph_ticks_forever() {
        let mut atg = Generator::with_states(1, []);
        atg.set_marked(0, true).unwrap();
        let ttg = timed_graph(&atg, &EventTable::new(), Default::default()).unwrap();
        let g = ttg.generator();
        assert_eq!(g.num_states(), 1);
        assert_eq!(g.successor(0, Event::TICK), Some(0));
    }

    #[test]
    fn missing_definition_is_named() {
        let err = timed_graph(&self_loop(9), &EventTable::new(), Default::default());
        assert!(matches!(err, Err(Error::MissingEventDef(Event(9)))));
    }

    #[test]
    fn state_cap_is_enforced() {
        let events: EventTable = [def(1, 2, None)].into_iter().collect();
        let err = timed_graph(&self_loop(1), &events, TimedGraphOptions { state_cap: 2 });
        assert_eq!(err.err(), Some(Error::StateCapExceeded(2)));
    }

    #[test]
    fn eligible_rejects_unknown_state() {
        let events: EventTable = [def(1, 1, Some(1))].into_iter().collect();
        let ttg = timed_graph(&self_loop(1), &events, Default::default()).unwrap();
        assert_eq!(ttg.eligible(5), Err(Error::UnknownState(5)));
    }

    #[test]
    fn initial_timers_are_defaults() {
        let events: EventTable = [def(1, 1, Some(3)), def(2, 2, None)].into_iter().collect();
        let mut atg = Generator::with_states(1, [Event(1), Event(2)]);
        atg.add_transition(0, Event(1), 0).unwrap();
        atg.add_transition(0, Event(2), 0).unwrap();
        let ttg = timed_graph(&atg, &events, Default::default()).unwrap();
        let q0 = ttg.timed_state(0).unwrap();
        assert_eq!(q0.timers[&Event(1)], 3);
        assert_eq!(q0.timers[&Event(2)], 2);
    }
}
