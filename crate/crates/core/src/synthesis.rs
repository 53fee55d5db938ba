//! Supremal controllable sublanguage synthesis for timed plants.
//!
//! Controllability follows the timed convention: uncontrollable events
//! eligible in the plant may never be disabled, and `tick` may only be
//! disabled (preempted) where some forcible event remains eligible.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::automata::{
    allevents, meet_with_map, refine_partition, sync_product, Generator, StateId,
};
use crate::error::{Error, Result};
use crate::event::{Event, EventTable};
use crate::tdes::{timed_graph, TimedGenerator, TimedGraphOptions};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ControlAction {
    /// Prohibitible events the plant could execute here but the supervisor
    /// forbids.
    pub disabled: BTreeSet<Event>,
    pub tick_preempted: bool,
}

/// A synthesized supervisor: a trim product automaton that refines the
/// plant, with the plant state and control action of every state.
#[derive(Clone, Debug)]
pub struct Supervisor {
    generator: Generator,
    plant_state: Vec<StateId>,
    control: Vec<ControlAction>,
    events: EventTable,
}

impl Supervisor {
    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn events(&self) -> &EventTable {
        &self.events
    }

    pub fn plant_state(&self, state: StateId) -> StateId {
        self.plant_state[state]
    }

    pub fn control(&self, state: StateId) -> &ControlAction {
        &self.control[state]
    }

    pub fn num_states(&self) -> usize {
        self.generator.num_states()
    }

    pub fn is_empty(&self) -> bool {
        self.generator.is_empty()
    }

    /// Whether the supervisor ever disables an event or preempts tick.
    pub fn is_permissive(&self) -> bool {
        self.control.iter().all(|c| c.disabled.is_empty() && !c.tick_preempted)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ControllabilityWitness {
    pub candidate_state: StateId,
    pub plant_state: StateId,
    pub event: Event,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Controllability {
    Controllable,
    Violated(ControllabilityWitness),
}

impl Controllability {
    pub fn is_controllable(&self) -> bool {
        matches!(self, Controllability::Controllable)
    }
}

/// Checks whether `L(candidate) ∩ L(plant)` is controllable with respect to
/// the plant. Events outside the candidate's alphabet count as disabled.
pub fn controllable(candidate: &Generator, plant: &TimedGenerator) -> Controllability {
    let product = meet_with_map(candidate, plant.generator());
    let events = plant.events();
    let g = &product.generator;
    for x in 0..g.num_states() {
        let (c, p) = (product.tuples[x][0], product.tuples[x][1]);
        let enabled = |e: Event| g.successor(x, e).is_some();
        if let Some(event) = violation(plant.generator(), p, events, enabled) {
            return Controllability::Violated(ControllabilityWitness {
                candidate_state: c,
                plant_state: p,
                event,
            });
        }
    }
    Controllability::Controllable
}

/// First plant-eligible event at `plant_state` whose disablement breaks
/// controllability, given the supervisor's `enabled` predicate.
fn violation(
    plant: &Generator,
    plant_state: StateId,
    events: &EventTable,
    enabled: impl Fn(Event) -> bool,
) -> Option<Event> {
    let mut tick_blocked = false;
    for (e, _) in plant.transitions_from(plant_state) {
        if enabled(e) {
            continue;
        }
        if e.is_tick() {
            tick_blocked = true;
        } else if events.is_uncontrollable(e) {
            return Some(e);
        }
    }
    if tick_blocked {
        let forced = plant
            .transitions_from(plant_state)
            .any(|(e, _)| events.is_forcible(e) && enabled(e));
        if !forced {
            return Some(Event::TICK);
        }
    }
    None
}

/// Supremal controllable and nonblocking sublanguage of
/// `L(spec) ∩ Lm(plant)`, as a greatest fixpoint over the product
/// `plant × spec`: states violating controllability are removed, then states
/// that cannot reach a marked state, until nothing changes.
pub fn supcon(plant: &TimedGenerator, spec: &Generator) -> Result<Supervisor> {
    let pg = plant.generator();
    if let Some(&e) = spec.alphabet().iter().find(|e| !pg.alphabet().contains(e)) {
        return Err(Error::SpecEventOutsidePlant(e));
    }
    let events = plant.events();
    let product = meet_with_map(pg, spec);
    let g = &product.generator;
    let plant_of = |x: StateId| product.tuples[x][0];

    let mut alive = g.coreachable();
    loop {
        let mut changed = false;
        for x in 0..g.num_states() {
            if !alive[x] {
                continue;
            }
            let enabled = |e: Event| g.successor(x, e).is_some_and(|t| alive[t]);
            if violation(pg, plant_of(x), events, enabled).is_some() {
                alive[x] = false;
                changed = true;
            }
        }
        // coreachability within the surviving states
        let co = coreachable_within(g, &alive);
        for x in 0..g.num_states() {
            if alive[x] && !co[x] {
                alive[x] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let (trimmed, map) = g.restrict(&alive);
    let mut trimmed_plant = vec![0; trimmed.num_states()];
    for (old, new) in map.iter().enumerate() {
        if let Some(new) = *new {
            trimmed_plant[new] = plant_of(old);
        }
    }
    let (generator, plant_state) = merge_equivalent(&trimmed, &trimmed_plant);
    let control = (0..generator.num_states())
        .map(|s| control_action(&generator, s, pg, plant_state[s], events))
        .collect();
    Ok(Supervisor { generator, plant_state, control, events: events.clone() })
}

/// Merges states over the same plant state whose futures coincide, so the
/// supervisor is the coarsest plant-refining automaton of its language.
fn merge_equivalent(g: &Generator, plant_of: &[StateId]) -> (Generator, Vec<StateId>) {
    let mut keys: BTreeMap<(StateId, bool), usize> = BTreeMap::new();
    let initial: Vec<usize> = (0..g.num_states())
        .map(|s| {
            let n = keys.len();
            *keys.entry((plant_of[s], g.is_marked(s))).or_insert(n)
        })
        .collect();
    let class = refine_partition(g, &initial);
    let n = class.iter().copied().max().map_or(0, |m| m + 1);
    let mut merged = Generator::with_states(n, g.alphabet().iter().copied());
    let mut merged_plant = vec![0; n];
    for s in 0..g.num_states() {
        merged_plant[class[s]] = plant_of[s];
        if g.is_marked(s) {
            merged.set_marked(class[s], true).expect("class in range");
        }
        for (e, t) in g.transitions_from(s) {
            merged.add_transition(class[s], e, class[t]).expect("compatible partition");
        }
    }
    if let Some(q0) = g.initial() {
        merged.set_initial(class[q0]).expect("class in range");
    }
    let (out, map) = merged.restrict(&vec![true; n]);
    let mut plant_state = vec![0; out.num_states()];
    for (old, new) in map.iter().enumerate() {
        if let Some(new) = *new {
            plant_state[new] = merged_plant[old];
        }
    }
    (out, plant_state)
}

fn coreachable_within(g: &Generator, alive: &[bool]) -> Vec<bool> {
    let preds = g.predecessors();
    let mut seen: Vec<bool> = (0..g.num_states()).map(|s| alive[s] && g.is_marked(s)).collect();
    let mut stack: Vec<StateId> = (0..g.num_states()).filter(|&s| seen[s]).collect();
    while let Some(t) = stack.pop() {
        for &(s, _) in &preds[t] {
            if alive[s] && !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
    }
    seen
}

fn control_action(
    sup: &Generator,
    s: StateId,
    plant: &Generator,
    p: StateId,
    events: &EventTable,
) -> ControlAction {
    let mut action = ControlAction::default();
    for (e, _) in plant.transitions_from(p) {
        if sup.successor(s, e).is_some() {
            continue;
        }
        if e.is_tick() {
            action.tick_preempted = true;
        } else if events.is_prohibitible(e) {
            action.disabled.insert(e);
        }
    }
    action
}

/// Everything produced by the centralized synthesis pipeline.
#[derive(Clone, Debug)]
pub struct TcrsSynthesis {
    pub mode_atg: Generator,
    pub plant: TimedGenerator,
    pub spec: Generator,
    pub supervisor: Supervisor,
    pub reconfig_events: BTreeSet<Event>,
    pub warnings: Vec<String>,
}

/// Composes the component activity graphs with the reconfiguration
/// specification, builds the timed graph of the result and synthesizes the
/// supervisor against `allevents(plant) ∥ behavioral_spec`.
pub fn synthesize_tcrs(
    components: &[&Generator],
    reconfig_spec: &Generator,
    behavioral_spec: &Generator,
    events: &EventTable,
    options: TimedGraphOptions,
) -> Result<TcrsSynthesis> {
    let component_events: BTreeSet<Event> =
        components.iter().flat_map(|g| g.alphabet().iter().copied()).collect();
    let reconfig_events: BTreeSet<Event> =
        reconfig_spec.alphabet().difference(&component_events).copied().collect();
    for &e in &reconfig_events {
        let def = events.get(e).ok_or(Error::MissingEventDef(e))?;
        if !def.is_prohibitible() {
            return Err(Error::ReconfigEventNotProhibitible(e));
        }
    }
    let mut all: Vec<&Generator> = components.to_vec();
    all.push(reconfig_spec);
    let mode_atg = sync_product(&all)?;
    let plant = timed_graph(&mode_atg, events, options)?;
    let spec = sync_product(&[&allevents(plant.generator()), behavioral_spec])?;
    let supervisor = supcon(&plant, &spec)?;
    let mut warnings = Vec::new();
    if supervisor.is_empty() {
        warnings.push("no admissible behavior".to_string());
    }
    Ok(TcrsSynthesis { mode_atg, plant, spec, supervisor, reconfig_events, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{is_nonblocking, language_equal};
    use crate::event::{Control, EventDef, UpperBound};

    fn ev(n: u32) -> Event {
        Event(n)
    }

    fn table(defs: &[(u32, bool, bool)]) -> EventTable {
        defs.iter()
            .map(|&(l, hib, forcible)| {
                let c = if hib { Control::Prohibitible } else { Control::Uncontrollable };
                EventDef::new(ev(l), c, forcible, 0, UpperBound::Infinite).unwrap()
            })
            .collect()
    }

    fn plant(n: usize, edges: &[(usize, u32, usize)], marked: &[usize], t: EventTable) -> TimedGenerator {
        let mut alphabet: BTreeSet<Event> = edges.iter().map(|e| ev(e.1)).collect();
        alphabet.insert(Event::TICK);
        let mut g = Generator::with_states(n, alphabet);
        for &(s, e, d) in edges {
            g.add_transition(s, ev(e), d).unwrap();
        }
        for &m in marked {
            g.set_marked(m, true).unwrap();
        }
        TimedGenerator::from_generator(g, t).unwrap()
    }

    #[test]
    fn plant_is_controllable_wrt_itself() {
        let p = plant(2, &[(0, 1, 1), (1, 0, 0), (0, 2, 0)], &[0], table(&[(1, true, false), (2, false, false)]));
        assert!(controllable(p.generator(), &p).is_controllable());
    }

    #[test]
    fn removing_uncontrollable_transition_is_witnessed() {
        let p = plant(2, &[(0, 1, 1), (1, 2, 0)], &[0], table(&[(1, true, false), (2, false, false)]));
        let mut cand = p.generator().clone();
        cand.remove_transition(1, ev(2));
        assert_eq!(
            controllable(&cand, &p),
            Controllability::Violated(ControllabilityWitness {
                candidate_state: 1,
                plant_state: 1,
                event: ev(2),
            })
        );
    }

    #[test]
    fn tick_disabled_without_forcible_event_is_witnessed() {
        // 0 -tick-> 1, 0 -5-> 2 ; 5 prohibitible but not forcible
        let t = table(&[(5, true, false)]);
        let p = plant(3, &[(0, 0, 1), (0, 5, 2)], &[1, 2], t);
        let mut cand = p.generator().clone();
        cand.remove_transition(0, Event::TICK);
        let verdict = controllable(&cand, &p);
        assert_eq!(
            verdict,
            Controllability::Violated(ControllabilityWitness {
                candidate_state: 0,
                plant_state: 0,
                event: Event::TICK,
            })
        );
        // the same cut is fine once 5 is forcible
        let t = table(&[(5, true, true)]);
        let p = plant(3, &[(0, 0, 1), (0, 5, 2)], &[1, 2], t);
        assert!(controllable(&cand, &p).is_controllable());
    }

    #[test]
    fn allevents_spec_returns_plant() {
        let p = plant(3, &[(0, 1, 1), (1, 2, 2), (2, 0, 0)], &[0], table(&[(1, true, false), (2, false, false)]));
        let sup = supcon(&p, &allevents(p.generator())).unwrap();
        assert!(language_equal(sup.generator(), p.generator()).unwrap());
        assert!(sup.is_permissive());
    }

    #[test]
    fn empty_spec_gives_empty_supervisor() {
        let p = plant(2, &[(0, 1, 1)], &[1], table(&[(1, true, false)]));
        let spec = Generator::empty(p.generator().alphabet().iter().copied());
        assert!(supcon(&p, &spec).unwrap().is_empty());
    }

    #[test]
    fn spec_event_outside_plant_rejected() {
        let p = plant(2, &[(0, 1, 1)], &[1], table(&[(1, true, false)]));
        let spec = Generator::with_states(1, [ev(9)]);
        assert_eq!(supcon(&p, &spec).err(), Some(Error::SpecEventOutsidePlant(ev(9))));
    }

    #[test]
    fn uncontrollable_bad_branch_cuts_controllable_predecessor() {
        // 0 -1c-> 1 -2u-> 2(bad) ; 1 -3c-> 3 ; 0 -4c-> 4 ; 3,4 marked ; 2 marked
        // spec forbids 2 after 1; supervisor must disable 1 at state 0.
        let t = table(&[(1, true, false), (2, false, false), (3, true, false), (4, true, false)]);
        let p = plant(5, &[(0, 1, 1), (1, 2, 2), (1, 3, 3), (0, 4, 4)], &[2, 3, 4], t);
        let mut spec = Generator::with_states(3, p.generator().alphabet().iter().copied());
        spec.add_transition(0, ev(1), 1).unwrap();
        spec.add_transition(0, ev(4), 2).unwrap();
        spec.add_transition(1, ev(3), 2).unwrap();
        spec.set_marked(2, true).unwrap();
        let sup = supcon(&p, &spec).unwrap();
        assert!(sup.generator().accepts_marked(&[ev(4)]));
        assert!(!sup.generator().accepts_prefix(&[ev(1)]));
        assert!(is_nonblocking(sup.generator()));
        assert_eq!(sup.control(0).disabled, BTreeSet::from([ev(1)]));
        assert!(controllable(sup.generator(), &p).is_controllable());
    }

    #[test]
    fn reconfiguration_event_must_be_prohibitible() {
        let t: EventTable = [
            EventDef::new(ev(1), Control::Prohibitible, false, 0, UpperBound::Infinite).unwrap(),
            EventDef::new(ev(91), Control::Uncontrollable, false, 0, UpperBound::Infinite).unwrap(),
        ]
        .into_iter()
        .collect();
        let mut m = Generator::with_states(1, [ev(1)]);
        m.add_transition(0, ev(1), 0).unwrap();
        m.set_marked(0, true).unwrap();
        let mut r = Generator::with_states(1, [ev(91)]);
        r.add_transition(0, ev(91), 0).unwrap();
        r.set_marked(0, true).unwrap();
        let spec = allevents(&m);
        let err = synthesize_tcrs(&[&m], &r, &spec, &t, Default::default());
        assert_eq!(err.err(), Some(Error::ReconfigEventNotProhibitible(ev(91))));
    }
}
