#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tdes_reconfig::synthesis::{synthesize_tcrs, TcrsSynthesis};
use tdes_reconfig::tdes::TimedGraphOptions;
use tdes_reconfig::{Control, Event, EventDef, EventTable, Generator, StateId, UpperBound};

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    rand::SeedableRng::seed_from_u64(seed)
}

pub const SIGMA_R: Event = Event(91);

pub fn def(label: u32, prohibitible: bool, forcible: bool, lower: u32, upper: Option<u32>) -> EventDef {
    let c = if prohibitible { Control::Prohibitible } else { Control::Uncontrollable };
    let u = upper.map_or(UpperBound::Infinite, UpperBound::Finite);
    EventDef::new(Event(label), c, forcible, lower, u).unwrap()
}

pub fn random_def(rng: &mut Rng8, label: u32, max_bound: u32) -> EventDef {
    let lower = rng.gen_range(0..=max_bound);
    let upper = if rng.gen_bool(0.5) { Some(rng.gen_range(lower..=max_bound.max(lower))) } else { None };
    def(label, rng.gen_bool(0.6), rng.gen_bool(0.4), lower, upper)
}

/// Deterministic generator with `n` states over `labels`; each (state,
/// event) pair gets a transition with probability `density`.
pub fn random_generator(rng: &mut Rng8, n: usize, labels: &[Event], density: f64) -> Generator {
    let mut g = Generator::with_states(n, labels.iter().copied());
    g.set_initial(0).unwrap();
    for s in 0..n {
        for &e in labels {
            if rng.gen_bool(density) {
                g.add_transition(s, e, rng.gen_range(0..n)).unwrap();
            }
        }
        if s == 0 || rng.gen_bool(0.3) {
            g.set_marked(s, true).unwrap();
        }
    }
    g
}

pub fn word(s: &str) -> Vec<Event> {
    s.split(',')
        .filter(|t| !t.is_empty())
        .map(|t| if t == "tick" { Event::TICK } else { Event(t.parse().unwrap()) })
        .collect()
}

/// Size knobs for a random reconfiguration scenario.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub components: usize,
    pub activities: (usize, usize),
    pub events_per_component: (usize, usize),
    pub max_bound: u32,
    pub state_cap: usize,
}

impl Shape {
    pub const SMALL: Shape = Shape {
        components: 2,
        activities: (2, 3),
        events_per_component: (1, 2),
        max_bound: 2,
        state_cap: 4_000,
    };
    pub const LARGE: Shape = Shape {
        components: 2,
        activities: (2, 4),
        events_per_component: (2, 3),
        max_bound: 3,
        state_cap: 20_000,
    };
}

/// Random components with disjoint alphabets, a two-mode reconfiguration
/// specification toggled by [`SIGMA_R`] (prohibitible and forcible) that
/// blocks one component event in the second mode, and a random behavioral
/// specification over a few component events.
pub fn random_scenario(rng: &mut Rng8, shape: Shape) -> Option<TcrsSynthesis> {
    let mut events = EventTable::new();
    let mut components = Vec::new();
    let mut all_labels = Vec::new();
    let mut next = 1;
    for _ in 0..shape.components {
        let k = rng.gen_range(shape.events_per_component.0..=shape.events_per_component.1);
        let labels: Vec<Event> = (0..k).map(|i| Event(next + i as u32)).collect();
        next += k as u32;
        for &e in &labels {
            events.insert(random_def(rng, e.0, shape.max_bound)).unwrap();
        }
        let n = rng.gen_range(shape.activities.0..=shape.activities.1);
        let mut g = random_generator(rng, n, &labels, 0.7);
        // keep every component live from its initial activity
        if g.transitions_from(0).next().is_none() {
            g.add_transition(0, labels[0], rng.gen_range(0..n)).unwrap();
        }
        all_labels.extend(labels);
        components.push(g);
    }
    let r_lower = rng.gen_range(0..=shape.max_bound);
    events.insert(def(SIGMA_R.0, true, true, r_lower, None)).unwrap();
    let blocked = *all_labels.choose(rng).unwrap();
    let mut r = Generator::with_states(2, [SIGMA_R, blocked]);
    r.set_initial(0).unwrap();
    r.add_transition(0, SIGMA_R, 1).unwrap();
    r.add_transition(1, SIGMA_R, 0).unwrap();
    r.add_transition(0, blocked, 0).unwrap();
    r.set_marked(0, true).unwrap();
    r.set_marked(1, true).unwrap();

    let k = rng.gen_range(1..=2.min(all_labels.len()));
    let spec_labels: Vec<Event> = all_labels.choose_multiple(rng, k).copied().collect();
    let mut spec = random_generator(rng, 2, &spec_labels, 0.85);
    spec.set_marked(1, rng.gen_bool(0.5)).unwrap();

    let refs: Vec<&Generator> = components.iter().collect();
    let opts = TimedGraphOptions { state_cap: shape.state_cap };
    let syn = synthesize_tcrs(&refs, &r, &spec, &events, opts).ok()?;
    if syn.supervisor.is_empty() {
        return None;
    }
    Some(syn)
}

/// A random (source, target) pair of distinct supervisor states with the
/// reconfiguration event defined at the target.
pub fn random_endpoints(rng: &mut Rng8, g: &Generator) -> Option<(StateId, StateId)> {
    let targets: Vec<StateId> =
        (0..g.num_states()).filter(|&s| g.successor(s, SIGMA_R).is_some()).collect();
    let &t = targets.choose(rng)?;
    let s = rng.gen_range(0..g.num_states());
    (s != t).then_some((s, t))
}

/// Independent check of the executability condition of a single step.
pub fn oracle_step_ok(g: &Generator, events: &EventTable, from: StateId, e: Event, to: StateId) -> bool {
    if !e.is_tick() && events.get(e).is_some_and(|d| d.is_forcible()) {
        return true;
    }
    g.transitions_from(from).all(|(f, t)| {
        t == to || (!f.is_tick() && events.get(f).is_some_and(|d| d.is_prohibitible()))
    })
}

/// Every simple path from `source` to `target` made of executable steps,
/// by forward depth-first enumeration. `None` once `limit` is exceeded.
pub fn oracle_forcible_paths(
    g: &Generator,
    events: &EventTable,
    source: StateId,
    target: StateId,
    limit: usize,
) -> Option<BTreeSet<Vec<Event>>> {
    #[allow(clippy::too_many_arguments)]
    fn go(
        g: &Generator,
        events: &EventTable,
        at: StateId,
        target: StateId,
        on_path: &mut Vec<bool>,
        prefix: &mut Vec<Event>,
        out: &mut BTreeSet<Vec<Event>>,
        limit: usize,
    ) -> bool {
        if at == target {
            out.insert(prefix.clone());
            return out.len() <= limit;
        }
        for (e, t) in g.transitions_from(at) {
            if on_path[t] || !oracle_step_ok(g, events, at, e, t) {
                continue;
            }
            on_path[t] = true;
            prefix.push(e);
            let ok = go(g, events, t, target, on_path, prefix, out, limit);
            prefix.pop();
            on_path[t] = false;
            if !ok {
                return false;
            }
        }
        true
    }
    let mut on_path = vec![false; g.num_states()];
    on_path[source] = true;
    let mut out = BTreeSet::new();
    go(g, events, source, target, &mut on_path, &mut Vec::new(), &mut out, limit).then_some(out)
}

/// Language equality of two deterministic generators by a synchronized
/// walk, written independently of the library's own check.
pub fn oracle_same_language(a: &Generator, b: &Generator) -> bool {
    let (ia, ib) = match (a.initial(), b.initial()) {
        (None, None) => return true,
        (Some(x), Some(y)) => (x, y),
        _ => return false,
    };
    let mut seen = BTreeMap::new();
    let mut queue = VecDeque::from([(ia, ib)]);
    seen.insert((ia, ib), ());
    while let Some((x, y)) = queue.pop_front() {
        if a.is_marked(x) != b.is_marked(y) {
            return false;
        }
        let ex: BTreeMap<Event, StateId> = a.transitions_from(x).collect();
        let ey: BTreeMap<Event, StateId> = b.transitions_from(y).collect();
        if ex.keys().ne(ey.keys()) {
            return false;
        }
        for (e, &tx) in &ex {
            let p = (tx, ey[e]);
            if seen.insert(p, ()).is_none() {
                queue.push_back(p);
            }
        }
    }
    true
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Supremal controllable nonblocking behavior by exhaustive search over
/// the state subsets of the reachable product `plant × spec` (both over the
/// same alphabet). A subset is admissible when every member can reach a
/// marked member inside it and never refuses an uncontrollable plant event,
/// nor a tick unless a forcible event stays enabled. The answer is the
/// union of all admissible subsets.
pub fn oracle_supcon(plant: &Generator, events: &EventTable, spec: &Generator) -> Generator {
    let alphabet: Vec<Event> = plant.alphabet().iter().copied().collect();
    let (Some(p0), Some(s0)) = (plant.initial(), spec.initial()) else {
        return Generator::empty(alphabet);
    };
    let mut pairs = vec![(p0, s0)];
    let mut index = BTreeMap::from([((p0, s0), 0usize)]);
    let mut edges: Vec<Vec<(Event, usize)>> = vec![Vec::new()];
    let mut i = 0;
    while i < pairs.len() {
        let (p, s) = pairs[i];
        for &e in &alphabet {
            if let (Some(p2), Some(s2)) = (plant.successor(p, e), spec.successor(s, e)) {
                let j = *index.entry((p2, s2)).or_insert_with(|| {
                    pairs.push((p2, s2));
                    edges.push(Vec::new());
                    pairs.len() - 1
                });
                edges[i].push((e, j));
            }
        }
        i += 1;
    }
    let n = pairs.len();
    assert!(n <= 16, "product too large for exhaustive search");
    let uncontrollable = |e: Event| !e.is_tick() && events.get(e).is_some_and(|d| !d.is_prohibitible());
    let forcible = |e: Event| !e.is_tick() && events.get(e).is_some_and(|d| d.is_forcible());
    let marked = |x: usize| plant.is_marked(pairs[x].0) && spec.is_marked(pairs[x].1);

    let admissible = |set: u32| -> bool {
        let inside = |x: usize| set >> x & 1 == 1;
        for x in (0..n).filter(|&x| inside(x)) {
            let kept = |e: Event| edges[x].iter().any(|&(f, t)| f == e && inside(t));
            let mut tick_refused = false;
            for (e, _) in plant.transitions_from(pairs[x].0) {
                if kept(e) {
                    continue;
                }
                if e.is_tick() {
                    tick_refused = true;
                } else if uncontrollable(e) {
                    return false;
                }
            }
            if tick_refused && !edges[x].iter().any(|&(f, t)| forcible(f) && inside(t)) {
                return false;
            }
        }
        // every member reaches a marked member within the subset
        let mut good: Vec<bool> = (0..n).map(|x| inside(x) && marked(x)).collect();
        loop {
            let mut grew = false;
            for x in 0..n {
                if inside(x) && !good[x] && edges[x].iter().any(|&(_, t)| inside(t) && good[t]) {
                    good[x] = true;
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        (0..n).all(|x| !inside(x) || good[x])
    };

    let mut union = 0u32;
    for set in (0..1u32 << n).filter(|s| s & 1 == 1) {
        if admissible(set) {
            union |= set;
        }
    }
    let mut out = Generator::empty(alphabet.iter().copied());
    if union == 0 {
        return out;
    }
    let ids: Vec<Option<StateId>> = (0..n)
        .map(|x| (union >> x & 1 == 1).then(|| out.add_state(marked(x))))
        .collect();
    out.set_initial(ids[0].unwrap()).unwrap();
    for x in 0..n {
        for &(e, t) in &edges[x] {
            if let (Some(a), Some(b)) = (ids[x], ids[t]) {
                out.add_transition(a, e, b).unwrap();
            }
        }
    }
    out
}
