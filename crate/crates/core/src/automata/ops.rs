//! Language operations on deterministic generators.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::generator::{Generator, StateId};
use crate::error::{Error, Result};
use crate::event::Event;

/// A product generator together with the component state tuple behind
/// every product state.
#[derive(Clone, Debug)]
pub struct Product {
    pub generator: Generator,
    pub tuples: Vec<Vec<StateId>>,
}

/// Synchronous composition: shared events synchronize, private events
/// interleave. Only the reachable part is built; a product state is marked
/// iff every component state is marked.
pub fn sync_product(components: &[&Generator]) -> Result<Generator> {
    sync_product_with_map(components).map(|p| p.generator)
}

pub fn sync_product_with_map(components: &[&Generator]) -> Result<Product> {
    if components.is_empty() {
        return Err(Error::NoComponents);
    }
    let alphabet: BTreeSet<Event> =
        components.iter().flat_map(|g| g.alphabet().iter().copied()).collect();
    product(components, &alphabet, |g, e| g.alphabet().contains(&e))
}

/// Product over the union alphabet synchronizing on every event: an event
/// missing from one operand's alphabet is blocked.
pub fn meet(a: &Generator, b: &Generator) -> Generator {
    meet_with_map(a, b).generator
}

pub fn meet_with_map(a: &Generator, b: &Generator) -> Product {
    let alphabet: BTreeSet<Event> = a.alphabet().union(b.alphabet()).copied().collect();
    product(&[a, b], &alphabet, |_, _| true).expect("two components")
}

fn product(
    components: &[&Generator],
    alphabet: &BTreeSet<Event>,
    participates: impl Fn(&Generator, Event) -> bool,
) -> Result<Product> {
    let mut out = Generator::empty(alphabet.iter().copied());
    let mut tuples = Vec::new();
    if components.iter().any(|g| g.is_empty()) {
        return Ok(Product { generator: out, tuples });
    }
    let start: Vec<StateId> = components.iter().map(|g| g.initial().unwrap()).collect();
    let mut index: HashMap<Vec<StateId>, StateId> = HashMap::new();
    let marked = |t: &[StateId]| components.iter().zip(t).all(|(g, &s)| g.is_marked(s));
    out.add_state(marked(&start));
    index.insert(start.clone(), 0);
    tuples.push(start);
    let mut queue = VecDeque::from([0usize]);
    while let Some(src) = queue.pop_front() {
        'events: for &e in alphabet {
            let mut next = tuples[src].clone();
            for (i, g) in components.iter().enumerate() {
                if participates(g, e) {
                    match g.successor(next[i], e) {
                        Some(t) => next[i] = t,
                        None => continue 'events,
                    }
                }
            }
            let dst = match index.get(&next) {
                Some(&d) => d,
                None => {
                    let d = out.add_state(marked(&next));
                    index.insert(next.clone(), d);
                    tuples.push(next);
                    queue.push_back(d);
                    d
                }
            };
            out.add_transition(src, e, dst)?;
        }
    }
    Ok(Product { generator: out, tuples })
}

/// A projected generator with the set of source states behind every
/// projected state.
#[derive(Clone, Debug)]
pub struct Projection {
    pub generator: Generator,
    pub subsets: Vec<BTreeSet<StateId>>,
}

impl Projection {
    /// Projected states whose subset contains `state`.
    pub fn images_of(&self, state: StateId) -> impl Iterator<Item = StateId> + '_ {
        self.subsets
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.contains(&state))
            .map(|(i, _)| i)
    }
}

/// Natural projection erasing `erase`: erased transitions become silent,
/// the result is determinized by subset construction and then minimized. A
/// subset state is marked iff it contains a marked state. States are
/// numbered in BFS order.
pub fn project(g: &Generator, erase: &BTreeSet<Event>) -> Projection {
    let alphabet: BTreeSet<Event> = g.alphabet().difference(erase).copied().collect();
    let mut out = Generator::empty(alphabet.iter().copied());
    let mut subsets: Vec<BTreeSet<StateId>> = Vec::new();
    let Some(q0) = g.initial() else {
        return Projection { generator: out, subsets };
    };
    let closure = |seed: BTreeSet<StateId>| -> BTreeSet<StateId> {
        let mut set = seed;
        let mut stack: Vec<StateId> = set.iter().copied().collect();
        while let Some(s) = stack.pop() {
            for (e, t) in g.transitions_from(s) {
                if erase.contains(&e) && set.insert(t) {
                    stack.push(t);
                }
            }
        }
        set
    };
    let start = closure(BTreeSet::from([q0]));
    let mut index: BTreeMap<BTreeSet<StateId>, StateId> = BTreeMap::new();
    let is_marked = |set: &BTreeSet<StateId>| set.iter().any(|&s| g.is_marked(s));
    out.add_state(is_marked(&start));
    index.insert(start.clone(), 0);
    subsets.push(start);
    let mut queue = VecDeque::from([0usize]);
    while let Some(src) = queue.pop_front() {
        for &e in &alphabet {
            let seed: BTreeSet<StateId> =
                subsets[src].iter().filter_map(|&s| g.successor(s, e)).collect();
            if seed.is_empty() {
                continue;
            }
            let next = closure(seed);
            let dst = match index.get(&next) {
                Some(&d) => d,
                None => {
                    let d = out.add_state(is_marked(&next));
                    index.insert(next.clone(), d);
                    subsets.push(next);
                    queue.push_back(d);
                    d
                }
            };
            out.add_transition(src, e, dst).expect("deterministic by construction");
        }
    }
    minimize_projection(out, subsets)
}

/// Merges language-equivalent subset states; the subset of a merged state
/// is the union of its members.
fn minimize_projection(g: Generator, subsets: Vec<BTreeSet<StateId>>) -> Projection {
    let initial: Vec<usize> = (0..g.num_states()).map(|s| usize::from(g.is_marked(s))).collect();
    let class = refine_partition(&g, &initial);
    let n = class.iter().copied().max().map_or(0, |m| m + 1);
    let mut merged = Generator::with_states(n, g.alphabet().iter().copied());
    let mut merged_subsets = vec![BTreeSet::new(); n];
    for s in 0..g.num_states() {
        if g.is_marked(s) {
            merged.set_marked(class[s], true).unwrap();
        }
        for (e, t) in g.transitions_from(s) {
            merged.add_transition(class[s], e, class[t]).expect("compatible partition");
        }
        merged_subsets[class[s]].extend(subsets[s].iter().copied());
    }
    if let Some(q0) = g.initial() {
        merged.set_initial(class[q0]).unwrap();
    }
    let (generator, map) = merged.restrict(&vec![true; n]);
    let mut subsets = vec![BTreeSet::new(); generator.num_states()];
    for (old, new) in map.into_iter().enumerate() {
        if let Some(new) = new {
            subsets[new] = std::mem::take(&mut merged_subsets[old]);
        }
    }
    Projection { generator, subsets }
}

/// One marked state with a self-loop on every event of `g`'s alphabet.
pub fn allevents(g: &Generator) -> Generator {
    let mut out = Generator::with_states(1, g.alphabet().iter().copied());
    out.set_marked(0, true).unwrap();
    for &e in g.alphabet() {
        out.add_transition(0, e, 0).unwrap();
    }
    out
}

/// Reachable and coreachable part, BFS-renumbered.
pub fn trim(g: &Generator) -> Generator {
    trim_with_map(g).0
}

pub fn trim_with_map(g: &Generator) -> (Generator, Vec<Option<StateId>>) {
    // Coreachability first, then restrict() keeps only what is reachable
    // through coreachable states.
    let co = g.coreachable();
    g.restrict(&co)
}

pub fn is_nonblocking(g: &Generator) -> bool {
    let reach = g.reachable();
    let co = g.coreachable();
    reach.iter().zip(&co).all(|(&r, &c)| !r || c)
}

/// Decides `L(a) = L(b)` and `Lm(a) = Lm(b)`.
pub fn language_equal(a: &Generator, b: &Generator) -> Result<bool> {
    if a.alphabet() != b.alphabet() {
        return Err(Error::AlphabetMismatch);
    }
    Ok(language_equal_unchecked(a, b))
}

/// Synchronized walk over both deterministic generators: the languages
/// coincide iff every jointly reachable pair has the same eligible events
/// and the same marking.
pub(crate) fn language_equal_unchecked(a: &Generator, b: &Generator) -> bool {
    match (a.initial(), b.initial()) {
        (None, None) => true,
        (None, Some(_)) | (Some(_), None) => false,
        (Some(qa), Some(qb)) => {
            let mut seen = BTreeSet::from([(qa, qb)]);
            let mut stack = vec![(qa, qb)];
            while let Some((x, y)) = stack.pop() {
                if a.is_marked(x) != b.is_marked(y) {
                    return false;
                }
                let ex: Vec<_> = a.transitions_from(x).collect();
                let ey: Vec<_> = b.transitions_from(y).collect();
                if ex.len() != ey.len() {
                    return false;
                }
                for (&(e1, t1), &(e2, t2)) in ex.iter().zip(&ey) {
                    if e1 != e2 {
                        return false;
                    }
                    if seen.insert((t1, t2)) {
                        stack.push((t1, t2));
                    }
                }
            }
            true
        }
    }
}

/// `L(sub) ⊆ L(sup)` (closed behavior).
pub fn language_contained(sub: &Generator, sup: &Generator) -> bool {
    let (Some(qa), Some(qb)) = (sub.initial(), sup.initial()) else {
        return sub.is_empty();
    };
    let mut seen = BTreeSet::from([(qa, qb)]);
    let mut stack = vec![(qa, qb)];
    while let Some((x, y)) = stack.pop() {
        for (e, t1) in sub.transitions_from(x) {
            let Some(t2) = sup.successor(y, e) else { return false };
            if seen.insert((t1, t2)) {
                stack.push((t1, t2));
            }
        }
    }
    true
}

/// Coarsest partition refining `initial_class` that is compatible with the
/// transition structure. Returns a class index per state.
pub fn refine_partition(g: &Generator, initial_class: &[usize]) -> Vec<usize> {
    let mut class = initial_class.to_vec();
    loop {
        let mut keys: BTreeMap<(usize, Vec<(Event, usize)>), usize> = BTreeMap::new();
        let mut next = vec![0; g.num_states()];
        for s in 0..g.num_states() {
            let sig: Vec<(Event, usize)> =
                g.transitions_from(s).map(|(e, t)| (e, class[t])).collect();
            let n = keys.len();
            next[s] = *keys.entry((class[s], sig)).or_insert(n);
        }
        let before = class.iter().collect::<BTreeSet<_>>().len();
        if keys.len() == before {
            return next;
        }
        class = next;
    }
}

/// Quotient of `g` by a transition-compatible partition.
pub fn quotient(g: &Generator, class: &[usize]) -> Generator {
    let n = class.iter().copied().max().map_or(0, |m| m + 1);
    let mut out = Generator::with_states(n, g.alphabet().iter().copied());
    if let Some(q0) = g.initial() {
        out.set_initial(class[q0]).unwrap();
    }
    for s in 0..g.num_states() {
        if g.is_marked(s) {
            out.set_marked(class[s], true).unwrap();
        }
        for (e, t) in g.transitions_from(s) {
            out.add_transition(class[s], e, class[t]).expect("compatible partition");
        }
    }
    out.canonical()
}

/// State-minimal generator for the same closed and marked languages.
pub fn minimize(g: &Generator) -> Generator {
    let t = g.canonical();
    let initial: Vec<usize> = (0..t.num_states()).map(|s| usize::from(t.is_marked(s))).collect();
    let class = refine_partition(&t, &initial);
    quotient(&t, &class)
}
