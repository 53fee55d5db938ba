//! Localization of a centralized supervisor into per-event controllers and
//! the checks that the localized supervisor solves the same
//! reconfiguration problems.
//!
//! Every prohibitible event of the package's event list gets a local
//! *event controller* that reproduces the supervisor's enable/disable
//! decisions for that event; every forcible event gets a local *tick
//! controller* that reproduces the tick preemptions it is responsible for.
//! Local controllers are quotients of the supervisor by a greedily built
//! control-consistent partition. The composition of all controllers with the
//! plant must give back the supervisor's closed and marked languages; when
//! the greedy partition fails that check the trivial localization (every
//! controller is the full supervisor) is used instead.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::automata::{
    language_equal, sync_product, sync_product_with_map, Generator, StateId,
};
use crate::error::{Error, Result};
use crate::event::Event;
use crate::reconfig::{
    trs, verify_projection_commutativity, CommutativityReport, ReconfigProblem,
};
use crate::synthesis::Supervisor;
use crate::tdes::TimedGenerator;

#[derive(Clone, Debug)]
pub struct DecentralizationPackage {
    plant: TimedGenerator,
    supervisor: Supervisor,
    event_list: BTreeSet<Event>,
}

impl DecentralizationPackage {
    pub fn new(
        plant: TimedGenerator,
        supervisor: Supervisor,
        event_list: BTreeSet<Event>,
    ) -> Result<Self> {
        if let Some(&e) =
            event_list.iter().find(|e| !supervisor.generator().alphabet().contains(e))
        {
            return Err(Error::InvalidPackage(format!(
                "event {e} is not in the supervisor's alphabet"
            )));
        }
        Ok(Self { plant, supervisor, event_list })
    }

    /// Package localizing on every prohibitible or forcible event of the
    /// supervisor.
    pub fn with_all_controllable(plant: TimedGenerator, supervisor: Supervisor) -> Result<Self> {
        let events = supervisor.events();
        let list = supervisor
            .generator()
            .alphabet()
            .iter()
            .copied()
            .filter(|&e| events.is_prohibitible(e) || events.is_forcible(e))
            .collect();
        Self::new(plant, supervisor, list)
    }

    pub fn plant(&self) -> &TimedGenerator {
        &self.plant
    }

    /// The supervisor component of the package, unchanged.
    pub fn supervisor(&self) -> &Supervisor {
        &self.supervisor
    }

    pub fn event_list(&self) -> &BTreeSet<Event> {
        &self.event_list
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ControllerKind {
    Tick,
    Event,
}

#[derive(Clone, Debug)]
pub struct LocalController {
    pub owner: Event,
    pub kind: ControllerKind,
    /// Alphabet is the controller's local event set; events outside it are
    /// implicitly self-looped.
    pub generator: Generator,
}

impl LocalController {
    /// Name used when exporting, e.g. `loc_tick_23` or `loc_event_11`.
    pub fn name(&self) -> String {
        match self.kind {
            ControllerKind::Tick => format!("loc_tick_{}", self.owner),
            ControllerKind::Event => format!("loc_event_{}", self.owner),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LocalizedSupervisor {
    pub tick_controllers: Vec<LocalController>,
    pub event_controllers: Vec<LocalController>,
    /// Composition of the tick controllers.
    pub loc_p: Generator,
    /// Composition of the event controllers.
    pub loc_c: Generator,
    /// `loc_p ∥ loc_c`.
    pub tdrs: Generator,
    /// Whether the trivial localization had to be used.
    pub fallback: bool,
}

impl LocalizedSupervisor {
    pub fn controllers(&self) -> impl Iterator<Item = &LocalController> {
        self.tick_controllers.iter().chain(&self.event_controllers)
    }

    fn assemble(tick: Vec<LocalController>, event: Vec<LocalController>, fallback: bool) -> Result<Self> {
        let compose = |cs: &[LocalController]| -> Result<Generator> {
            if cs.is_empty() {
                let mut unit = Generator::with_states(1, []);
                unit.set_marked(0, true)?;
                return Ok(unit);
            }
            let gens: Vec<&Generator> = cs.iter().map(|c| &c.generator).collect();
            sync_product(&gens)
        };
        let loc_p = compose(&tick)?;
        let loc_c = compose(&event)?;
        let tdrs = sync_product(&[&loc_p, &loc_c])?;
        Ok(Self { tick_controllers: tick, event_controllers: event, loc_p, loc_c, tdrs, fallback })
    }
}

/// Closed loop of the plant under the localized supervisor, with the
/// component tuple `(plant state, tdrs state)` of each state.
pub fn closed_loop(pkg: &DecentralizationPackage, loc: &LocalizedSupervisor) -> Result<(Generator, Vec<Vec<StateId>>)> {
    let p = sync_product_with_map(&[pkg.plant.generator(), &loc.tdrs])?;
    Ok((p.generator, p.tuples))
}

/// `L(G) ∩ L(TDRS) = L(TCRS)` and the same for marked languages.
pub fn verify_localization(pkg: &DecentralizationPackage, loc: &LocalizedSupervisor) -> Result<bool> {
    let (mut lp, _) = closed_loop(pkg, loc)?;
    let mut sup = pkg.supervisor.generator().clone();
    // align alphabets: both are sublanguages of the plant's
    for &e in pkg.plant.generator().alphabet() {
        lp.add_event(e);
        sup.add_event(e);
    }
    language_equal(&lp, &sup)
}

pub fn timed_localize(pkg: &DecentralizationPackage) -> Result<LocalizedSupervisor> {
    let sup = &pkg.supervisor;
    if sup.is_empty() {
        return Err(Error::InvalidPackage("supervisor is empty".into()));
    }
    let events = sup.events();
    let owners_tick: Vec<Event> =
        pkg.event_list.iter().copied().filter(|&e| events.is_forcible(e)).collect();
    let owners_event: Vec<Event> =
        pkg.event_list.iter().copied().filter(|&e| events.is_prohibitible(e)).collect();
    if owners_tick.is_empty() && owners_event.is_empty() {
        return Err(Error::InvalidPackage(
            "event list contains no prohibitible or forcible event".into(),
        ));
    }

    let tick: Vec<LocalController> =
        owners_tick.iter().map(|&b| localize_one(pkg, b, ControllerKind::Tick)).collect();
    let event: Vec<LocalController> =
        owners_event.iter().map(|&a| localize_one(pkg, a, ControllerKind::Event)).collect();
    let greedy = LocalizedSupervisor::assemble(tick, event, false)?;
    if verify_localization(pkg, &greedy)? {
        return Ok(greedy);
    }

    let trivial = |owner: Event, kind: ControllerKind| LocalController {
        owner,
        kind,
        generator: sup.generator().clone(),
    };
    let tick = owners_tick.iter().map(|&b| trivial(b, ControllerKind::Tick)).collect();
    let event = owners_event.iter().map(|&a| trivial(a, ControllerKind::Event)).collect();
    let fallback = LocalizedSupervisor::assemble(tick, event, true)?;
    if verify_localization(pkg, &fallback)? {
        Ok(fallback)
    } else {
        Err(Error::Internal("trivial localization failed verification".into()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Flags {
    enabled: bool,
    disabled: bool,
    marked_in_both: bool,
    unmarked_plant_marked: bool,
}

impl Flags {
    fn union(self, o: Flags) -> Flags {
        Flags {
            enabled: self.enabled | o.enabled,
            disabled: self.disabled | o.disabled,
            marked_in_both: self.marked_in_both | o.marked_in_both,
            unmarked_plant_marked: self.unmarked_plant_marked | o.unmarked_plant_marked,
        }
    }

    fn conflicting(self) -> bool {
        (self.enabled && self.disabled) || (self.marked_in_both && self.unmarked_plant_marked)
    }
}

fn state_flags(pkg: &DecentralizationPackage, owner: Event, kind: ControllerKind) -> Vec<Flags> {
    let sup = &pkg.supervisor;
    let g = sup.generator();
    let plant = pkg.plant.generator();
    (0..g.num_states())
        .map(|x| {
            let action = sup.control(x);
            let (enabled, disabled) = match kind {
                ControllerKind::Event => {
                    (g.successor(x, owner).is_some(), action.disabled.contains(&owner))
                }
                ControllerKind::Tick => (
                    g.successor(x, Event::TICK).is_some(),
                    action.tick_preempted && g.successor(x, owner).is_some(),
                ),
            };
            let plant_marked = plant.is_marked(sup.plant_state(x));
            Flags {
                enabled,
                disabled,
                marked_in_both: plant_marked && g.is_marked(x),
                unmarked_plant_marked: plant_marked && !g.is_marked(x),
            }
        })
        .collect()
}

/// Union-find over supervisor states that can roll back a failed merge.
struct Cover<'a> {
    g: &'a Generator,
    parent: Vec<usize>,
    size: Vec<usize>,
    flags: Vec<Flags>,
    succ: Vec<BTreeMap<Event, StateId>>,
    log: Vec<Undo>,
}

struct Undo {
    child: usize,
    root: usize,
    flags: Flags,
    succ: BTreeMap<Event, StateId>,
}

impl<'a> Cover<'a> {
    fn new(g: &'a Generator, flags: Vec<Flags>) -> Self {
        let n = g.num_states();
        Self {
            g,
            parent: (0..n).collect(),
            size: vec![1; n],
            flags,
            succ: (0..n).map(|s| g.transitions_from(s).collect()).collect(),
            log: Vec::new(),
        }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    /// Merges the classes of `a` and `b` and everything their common
    /// successors force together; leaves the cover unchanged on conflict.
    fn try_merge(&mut self, a: usize, b: usize) -> bool {
        let checkpoint = self.log.len();
        let mut pending = vec![(a, b)];
        while let Some((x, y)) = pending.pop() {
            let (mut rx, mut ry) = (self.find(x), self.find(y));
            if rx == ry {
                continue;
            }
            let merged = self.flags[rx].union(self.flags[ry]);
            if merged.conflicting() {
                self.rollback(checkpoint);
                return false;
            }
            if self.size[rx] < self.size[ry] {
                std::mem::swap(&mut rx, &mut ry);
            }
            // ry joins rx
            self.log.push(Undo { child: ry, root: rx, flags: self.flags[rx], succ: self.succ[rx].clone() });
            self.parent[ry] = rx;
            self.size[rx] += self.size[ry];
            self.flags[rx] = merged;
            let other = self.succ[ry].clone();
            for (e, t) in other {
                match self.succ[rx].get(&e) {
                    Some(&t0) => pending.push((t0, t)),
                    None => {
                        self.succ[rx].insert(e, t);
                    }
                }
            }
        }
        self.log.clear();
        true
    }

    fn rollback(&mut self, checkpoint: usize) {
        while self.log.len() > checkpoint {
            let u = self.log.pop().unwrap();
            self.parent[u.child] = u.child;
            self.size[u.root] -= self.size[u.child];
            self.flags[u.root] = u.flags;
            self.succ[u.root] = u.succ;
        }
    }

    fn classes(&self) -> Vec<usize> {
        let n = self.g.num_states();
        let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
        (0..n)
            .map(|x| {
                let r = self.find(x);
                let next = ids.len();
                *ids.entry(r).or_insert(next)
            })
            .collect()
    }
}

fn localize_one(pkg: &DecentralizationPackage, owner: Event, kind: ControllerKind) -> LocalController {
    let g = pkg.supervisor.generator();
    let mut cover = Cover::new(g, state_flags(pkg, owner, kind));
    // one representative per class among the states seen so far
    let mut reps: Vec<usize> = Vec::new();
    for x in 0..g.num_states() {
        for &r in &reps {
            if cover.find(r) != cover.find(x) {
                cover.try_merge(x, r);
            }
        }
        reps.push(x);
        let mut seen = BTreeSet::new();
        reps.retain(|&r| seen.insert(cover.find(r)));
    }
    let class = cover.classes();

    let mut alphabet = BTreeSet::from([owner]);
    if kind == ControllerKind::Tick {
        alphabet.insert(Event::TICK);
    }
    for (s, e, t) in g.transitions() {
        if class[s] != class[t] {
            alphabet.insert(e);
        }
    }
    alphabet.retain(|e| g.alphabet().contains(e));
    let n = class.iter().copied().max().map_or(0, |m| m + 1);
    let mut local = Generator::with_states(n, alphabet.iter().copied());
    local.set_initial(class[g.initial().unwrap()]).unwrap();
    for x in g.marked_states() {
        local.set_marked(class[x], true).unwrap();
    }
    for (s, e, t) in g.transitions() {
        if alphabet.contains(&e) {
            local
                .add_transition(class[s], e, class[t])
                .expect("merge closure keeps the quotient deterministic");
        }
    }
    LocalController { owner, kind, generator: local.canonical() }
}

/// Relates every supervisor state to the closed-loop states reached by the
/// same strings.
fn correspondence(sup: &Generator, lp: &Generator) -> Vec<BTreeSet<StateId>> {
    let mut rel = vec![BTreeSet::new(); sup.num_states()];
    let (Some(a), Some(b)) = (sup.initial(), lp.initial()) else { return rel };
    let mut stack = vec![(a, b)];
    rel[a].insert(b);
    while let Some((x, m)) = stack.pop() {
        for (e, t) in sup.transitions_from(x) {
            if let Some(u) = lp.successor(m, e) {
                if rel[t].insert(u) {
                    stack.push((t, u));
                }
            }
        }
    }
    rel
}

#[derive(Clone, Debug, Serialize)]
pub struct SolutionEquivalenceReport {
    pub centralized: BTreeSet<Vec<Event>>,
    pub decentralized: BTreeSet<Vec<Event>>,
    pub identical: bool,
    /// Whether the closed loop is isomorphic to the supervisor.
    pub isomorphic: bool,
    pub decentralized_source: StateId,
    pub decentralized_target: StateId,
    /// Every centralized path, replayed in both global local controllers,
    /// ends where the reconfiguration event is defined.
    pub replay_ok: bool,
    pub replay_failures: Vec<Vec<Event>>,
}

struct Mapped {
    closed_loop: Generator,
    source: StateId,
    target: StateId,
    isomorphic: bool,
}

fn map_problem(
    pkg: &DecentralizationPackage,
    loc: &LocalizedSupervisor,
    source: StateId,
    target: StateId,
) -> Result<Mapped> {
    let (lp, _) = closed_loop(pkg, loc)?;
    let rel = correspondence(pkg.supervisor.generator(), &lp);
    let single = |x: StateId| -> Result<StateId> {
        let set = rel.get(x).ok_or(Error::CorrespondenceNotEstablished)?;
        match set.len() {
            1 => Ok(*set.iter().next().unwrap()),
            _ => Err(Error::CorrespondenceNotEstablished),
        }
    };
    let (s, t) = (single(source)?, single(target)?);
    let functional = rel.iter().all(|r| r.len() == 1);
    let covered: BTreeSet<StateId> = rel.iter().flatten().copied().collect();
    let isomorphic = functional && covered.len() == rel.len() && lp.num_states() == rel.len();
    Ok(Mapped { closed_loop: lp, source: s, target: t, isomorphic })
}

fn require_decentralizable(pkg: &DecentralizationPackage, reconfig_event: Event) -> Result<()> {
    let events = pkg.supervisor.events();
    if !(events.is_prohibitible(reconfig_event) && events.is_forcible(reconfig_event)) {
        return Err(Error::InvalidPackage(format!(
            "reconfiguration event {reconfig_event} must be both prohibitible and forcible \
             so that it belongs to the event sets of both the local tick controllers and \
             the local event controllers"
        )));
    }
    if !pkg.event_list.contains(&reconfig_event) {
        return Err(Error::InvalidPackage(format!(
            "reconfiguration event {reconfig_event} is not in the event list"
        )));
    }
    Ok(())
}

/// Solves the problem on the supervisor and on the plant under the
/// localized supervisor and compares the path sets. Also replays every
/// path through both global local controllers.
pub fn verify_solution_equivalence(
    pkg: &DecentralizationPackage,
    loc: &LocalizedSupervisor,
    source: StateId,
    target: StateId,
    reconfig_event: Event,
) -> Result<SolutionEquivalenceReport> {
    require_decentralizable(pkg, reconfig_event)?;
    let problem = ReconfigProblem::on_supervisor(&pkg.supervisor, source, target, reconfig_event)?;
    let central = trs(&problem);

    let mapped = map_problem(pkg, loc, source, target)?;
    let events = pkg.supervisor.events();
    let dproblem =
        ReconfigProblem::new(&mapped.closed_loop, events, mapped.source, mapped.target, reconfig_event)?;
    let decentral = trs(&dproblem);

    let prefix = crate::reconfig::access_word(pkg.supervisor.generator(), source)
        .ok_or(Error::CorrespondenceNotEstablished)?;
    let mut replay_failures = Vec::new();
    for path in central.paths.strings() {
        let mut word = prefix.clone();
        word.extend(&path);
        let ok = [&loc.loc_p, &loc.loc_c].iter().all(|local| {
            let projected: Vec<Event> =
                word.iter().copied().filter(|e| local.alphabet().contains(e)).collect();
            local
                .initial()
                .and_then(|q| local.run(q, &projected))
                .is_some_and(|q| local.successor(q, reconfig_event).is_some())
        });
        if !ok {
            replay_failures.push(path);
        }
    }

    let centralized = central.paths.strings();
    let decentralized = decentral.paths.strings();
    Ok(SolutionEquivalenceReport {
        identical: centralized == decentralized,
        centralized,
        decentralized,
        isomorphic: mapped.isomorphic,
        decentralized_source: mapped.source,
        decentralized_target: mapped.target,
        replay_ok: replay_failures.is_empty(),
        replay_failures,
    })
}

/// The projection commutativity check run on the plant under the
/// localized supervisor.
pub fn verify_projection_commutativity_decentralized(
    pkg: &DecentralizationPackage,
    loc: &LocalizedSupervisor,
    source: StateId,
    target: StateId,
    reconfig_event: Event,
) -> Result<CommutativityReport> {
    let mapped = map_problem(pkg, loc, source, target)?;
    let problem = ReconfigProblem::new(
        &mapped.closed_loop,
        pkg.supervisor.events(),
        mapped.source,
        mapped.target,
        reconfig_event,
    )?;
    verify_projection_commutativity(&problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::allevents;
    use crate::event::{Control, EventDef, EventTable, UpperBound};
    use crate::synthesis::supcon;
    use crate::tdes::{timed_graph, TimedGraphOptions};

    fn def(l: u32, hib: bool, forcible: bool, lower: u32, upper: Option<u32>) -> EventDef {
        let c = if hib { Control::Prohibitible } else { Control::Uncontrollable };
        let u = upper.map_or(UpperBound::Infinite, UpperBound::Finite);
        EventDef::new(Event(l), c, forcible, lower, u).unwrap()
    }

    /// 0 -1-> 1 -2-> 0 and 0 -3-> 2 -2-> 0, timed.
    fn plant() -> TimedGenerator {
        let events: EventTable = [
            def(1, true, true, 0, Some(2)),
            def(2, false, false, 1, Some(1)),
            def(3, true, false, 0, None),
        ]
        .into_iter()
        .collect();
        let mut atg = Generator::with_states(3, [Event(1), Event(2), Event(3)]);
        atg.set_marked(0, true).unwrap();
        for (s, e, t) in [(0, 1, 1), (1, 2, 0), (0, 3, 2), (2, 2, 0)] {
            atg.add_transition(s, Event(e), t).unwrap();
        }
        timed_graph(&atg, &events, TimedGraphOptions::default()).unwrap()
    }

    fn no_three(p: &TimedGenerator) -> Generator {
        let mut spec = Generator::with_states(1, p.generator().alphabet().iter().copied());
        spec.set_marked(0, true).unwrap();
        for e in [Event::TICK, Event(1), Event(2)] {
            spec.add_transition(0, e, 0).unwrap();
        }
        spec
    }

    #[test]
    fn permissive_supervisor_gives_one_state_controllers() {
        let p = plant();
        let sup = supcon(&p, &allevents(p.generator())).unwrap();
        assert!(sup.is_permissive());
        let pkg = DecentralizationPackage::with_all_controllable(p, sup).unwrap();
        let loc = timed_localize(&pkg).unwrap();
        assert!(!loc.fallback);
        for c in loc.controllers() {
            assert_eq!(c.generator.num_states(), 1, "{}", c.name());
        }
        assert!(verify_localization(&pkg, &loc).unwrap());
    }

    #[test]
    fn restrictive_supervisor_is_reproduced() {
        let p = plant();
        let spec = no_three(&p);
        let sup = supcon(&p, &spec).unwrap();
        assert!(!sup.is_empty());
        let pkg = DecentralizationPackage::with_all_controllable(p, sup).unwrap();
        let loc = timed_localize(&pkg).unwrap();
        assert!(verify_localization(&pkg, &loc).unwrap());
        let names: Vec<String> = loc.controllers().map(LocalController::name).collect();
        assert_eq!(names, vec!["loc_tick_1", "loc_event_1", "loc_event_3"]);
        let three = &loc.event_controllers[1];
        assert_eq!(three.generator.num_states(), 1);
        assert!(three.generator.eligible(0).is_empty());
    }

    #[test]
    fn replacing_a_controller_by_allevents_breaks_verification() {
        let p = plant();
        let spec = no_three(&p);
        let sup = supcon(&p, &spec).unwrap();
        let pkg = DecentralizationPackage::with_all_controllable(p, sup).unwrap();
        let loc = timed_localize(&pkg).unwrap();
        let mut tick = loc.tick_controllers.clone();
        let mut event = loc.event_controllers.clone();
        event[1].generator = allevents(&event[1].generator);
        let broken = LocalizedSupervisor::assemble(std::mem::take(&mut tick), std::mem::take(&mut event), false)
            .unwrap();
        assert!(!verify_localization(&pkg, &broken).unwrap());
    }

    #[test]
    fn event_list_outside_alphabet_rejected() {
        let p = plant();
        let sup = supcon(&p, &allevents(p.generator())).unwrap();
        assert!(matches!(
            DecentralizationPackage::new(p, sup, BTreeSet::from([Event(9)])),
            Err(Error::InvalidPackage(_))
        ));
    }

    #[test]
    fn reconfig_event_must_be_prohibitible_and_forcible() {
        let p = plant();
        let sup = supcon(&p, &allevents(p.generator())).unwrap();
        let pkg = DecentralizationPackage::with_all_controllable(p, sup).unwrap();
        let loc = timed_localize(&pkg).unwrap();
        let target = pkg.supervisor().generator().initial().unwrap();
        let err = verify_solution_equivalence(&pkg, &loc, target, target, Event(3)).unwrap_err();
        assert!(err.to_string().contains("prohibitible and forcible"));
        let ok = verify_solution_equivalence(&pkg, &loc, target, target, Event(1)).unwrap();
        assert!(ok.identical && ok.replay_ok);
    }
}
