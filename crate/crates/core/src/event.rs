//! Event labels and their timing and control attributes.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An event label. Label `0` is reserved for `tick`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Event(pub u32);

impl Event {
    pub const TICK: Event = Event(0);

    pub fn is_tick(self) -> bool {
        self == Self::TICK
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_tick() {
            f.write_str("tick")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Control {
    Prohibitible,
    Uncontrollable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpperBound {
    Finite(u32),
    Infinite,
}

impl fmt::Display for UpperBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UpperBound::Finite(u) => write!(f, "{u}"),
            UpperBound::Infinite => f.write_str("inf"),
        }
    }
}

/// Control attribute, forcibility and timer bounds of one activity event.
///
/// An event with a finite upper bound is *prospective*: once enabled it must
/// occur within `[lower, upper]` ticks unless preempted. An event with an
/// infinite upper bound is *remote*: it may occur any time after `lower`
/// ticks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventDef {
    label: Event,
    control: Control,
    forcible: bool,
    lower: u32,
    upper: UpperBound,
}

impl EventDef {
    pub fn new(
        label: Event,
        control: Control,
        forcible: bool,
        lower: u32,
        upper: UpperBound,
    ) -> Result<Self> {
        if label.is_tick() {
            return Err(Error::ReservedTick);
        }
        if let UpperBound::Finite(u) = upper {
            if lower > u {
                return Err(Error::InvalidBounds { label, lower, upper: u });
            }
        }
        Ok(Self { label, control, forcible, lower, upper })
    }

    pub fn label(&self) -> Event {
        self.label
    }

    pub fn control(&self) -> Control {
        self.control
    }

    pub fn is_prohibitible(&self) -> bool {
        self.control == Control::Prohibitible
    }

    pub fn is_forcible(&self) -> bool {
        self.forcible
    }

    pub fn lower(&self) -> u32 {
        self.lower
    }

    pub fn upper(&self) -> UpperBound {
        self.upper
    }

    pub fn is_remote(&self) -> bool {
        self.upper == UpperBound::Infinite
    }

    /// Timer value on (re-)enablement: `upper` for prospective events,
    /// `lower` for remote ones.
    pub fn default_timer(&self) -> u32 {
        match self.upper {
            UpperBound::Finite(u) => u,
            UpperBound::Infinite => self.lower,
        }
    }
}

/// Event definitions keyed by label.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventTable {
    defs: BTreeMap<Event, EventDef>,
}

impl EventTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, def: EventDef) -> Result<()> {
        if self.defs.contains_key(&def.label) {
            return Err(Error::DuplicateEvent(def.label));
        }
        self.defs.insert(def.label, def);
        Ok(())
    }

    pub fn get(&self, event: Event) -> Option<&EventDef> {
        self.defs.get(&event)
    }

    pub fn contains(&self, event: Event) -> bool {
        self.defs.contains_key(&event)
    }

    pub fn iter(&self) -> impl Iterator<Item = &EventDef> {
        self.defs.values()
    }

    pub fn labels(&self) -> impl Iterator<Item = Event> + '_ {
        self.defs.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    /// Tick is never forcible.
    pub fn is_forcible(&self, event: Event) -> bool {
        self.get(event).is_some_and(EventDef::is_forcible)
    }

    /// Tick is never prohibitible; it can only be preempted.
    pub fn is_prohibitible(&self, event: Event) -> bool {
        self.get(event).is_some_and(EventDef::is_prohibitible)
    }

    /// Non-tick events that the supervisor cannot disable. Events missing
    /// from the table count as uncontrollable.
    pub fn is_uncontrollable(&self, event: Event) -> bool {
        !event.is_tick() && !self.is_prohibitible(event)
    }
}

impl FromIterator<EventDef> for EventTable {
    fn from_iter<I: IntoIterator<Item = EventDef>>(iter: I) -> Self {
        Self { defs: iter.into_iter().map(|d| (d.label, d)).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_label_is_reserved() {
        let err = EventDef::new(Event::TICK, Control::Prohibitible, false, 0, UpperBound::Infinite);
        assert_eq!(err, Err(Error::ReservedTick));
    }

    #[test]
    fn lower_above_upper_rejected() {
        let err = EventDef::new(Event(5), Control::Uncontrollable, false, 3, UpperBound::Finite(2));
        assert!(matches!(err, Err(Error::InvalidBounds { .. })));
    }

    #[test]
    fn default_timers() {
        let p = EventDef::new(Event(12), Control::Uncontrollable, false, 0, UpperBound::Finite(3))
            .unwrap();
        let r = EventDef::new(Event(31), Control::Prohibitible, true, 2, UpperBound::Infinite)
            .unwrap();
        assert_eq!(p.default_timer(), 3);
        assert!(!p.is_remote());
        assert_eq!(r.default_timer(), 2);
        assert!(r.is_remote());
    }

    #[test]
    fn tick_is_neither_forcible_nor_prohibitible() {
        let table = EventTable::new();
        assert!(!table.is_forcible(Event::TICK));
        assert!(!table.is_prohibitible(Event::TICK));
        assert!(!table.is_uncontrollable(Event::TICK));
        assert!(table.is_uncontrollable(Event(7)));
    }

    #[test]
    fn duplicate_label_rejected() {
        let d = EventDef::new(Event(1), Control::Prohibitible, false, 0, UpperBound::Infinite)
            .unwrap();
        let mut t = EventTable::new();
        t.insert(d).unwrap();
        assert_eq!(t.insert(d), Err(Error::DuplicateEvent(Event(1))));
    }
}
