use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::bft::{attraction_field, build_bft_with, forcible_reach, prune_to_pbft, Bft, TrsLimits};
use super::{step_is_forcible, ReconfigProblem};
use crate::automata::StateId;
use crate::error::{Error, Result};
use crate::event::Event;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum PathKind {
    /// Read off a branch of the proper tree.
    Direct,
    /// Any other forcible path through the attraction field.
    Branching,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ForciblePath {
    pub events: Vec<Event>,
    pub kind: PathKind,
}

impl ForciblePath {
    pub fn ticks(&self) -> usize {
        self.events.iter().filter(|e| e.is_tick()).count()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// The path with every `tick` erased.
    pub fn untimed(&self) -> Vec<Event> {
        self.events.iter().copied().filter(|e| !e.is_tick()).collect()
    }
}

impl fmt::Display for ForciblePath {
    /// Comma-separated labels, `tick` spelled out.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.events.iter().map(Event::to_string).collect();
        f.write_str(&labels.join(","))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ForciblePathSet {
    /// Sorted lexicographically by event sequence.
    pub paths: Vec<ForciblePath>,
    pub attraction_field: BTreeSet<StateId>,
}

impl ForciblePathSet {
    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn strings(&self) -> BTreeSet<Vec<Event>> {
        self.paths.iter().map(|p| p.events.clone()).collect()
    }

    /// Tick-erased images of every path.
    pub fn untimed_strings(&self) -> BTreeSet<Vec<Event>> {
        self.paths.iter().map(ForciblePath::untimed).collect()
    }

    /// One path per line.
    pub fn to_lines(&self) -> String {
        self.paths.iter().map(|p| format!("{p}\n")).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TrsStatus {
    Solved,
    Unsolvable,
}

#[derive(Clone, Debug, Serialize)]
pub struct Solution {
    pub status: TrsStatus,
    pub paths: ForciblePathSet,
    pub bft_nodes: usize,
    pub pbft_nodes: usize,
    /// A limit was hit; the path set may be incomplete.
    pub truncated: bool,
}

impl Solution {
    pub fn is_solved(&self) -> bool {
        self.status == TrsStatus::Solved
    }
}

/// Solves a reconfiguration problem: builds the backtracking tree, prunes
/// it to the branches reaching the source, reads the direct paths off the
/// remaining branches and adds the branching paths found by a forward
/// search confined to the attraction field.
///
/// Only simple paths are returned, so the set is finite.
pub fn trs(problem: &ReconfigProblem<'_>) -> Solution {
    trs_with(problem, TrsLimits::default())
}

/// [`trs`] with explicit work limits. Subtrees whose states cannot be
/// reached from the source by forcible steps are never expanded; this does
/// not change the proper tree.
pub fn trs_with(problem: &ReconfigProblem<'_>, limits: TrsLimits) -> Solution {
    let reach = forcible_reach(problem);
    let tree = build_bft_with(problem, Some(&reach), limits.max_tree_nodes);
    let pbft = prune_to_pbft(&tree, problem.source());
    let bft_nodes = tree.len();
    let pbft_nodes = pbft.len();
    if pbft.is_empty() {
        return Solution {
            status: TrsStatus::Unsolvable,
            paths: ForciblePathSet::default(),
            bft_nodes,
            pbft_nodes,
            truncated: tree.truncated,
        };
    }
    let field = attraction_field(&pbft);
    let direct = direct_paths(&pbft);
    let mut all = BTreeSet::new();
    let forward_truncated = forward_paths(problem, &field, limits, &mut all);
    // direct paths are forward paths by construction
    all.extend(direct.iter().cloned());
    let paths = all
        .into_iter()
        .map(|events| {
            let kind = if direct.contains(&events) { PathKind::Direct } else { PathKind::Branching };
            ForciblePath { events, kind }
        })
        .collect();
    Solution {
        status: TrsStatus::Solved,
        paths: ForciblePathSet { paths, attraction_field: field },
        bft_nodes,
        pbft_nodes,
        truncated: tree.truncated || forward_truncated,
    }
}

fn direct_paths(pbft: &Bft) -> BTreeSet<Vec<Event>> {
    pbft.leaves().map(|l| pbft.branch_events(l)).collect()
}

/// Every simple path from source to target inside `field` whose steps are
/// all forcible. Returns whether a limit cut the search short.
fn forward_paths(
    problem: &ReconfigProblem<'_>,
    field: &BTreeSet<StateId>,
    limits: TrsLimits,
    out: &mut BTreeSet<Vec<Event>>,
) -> bool {
    let g = problem.automaton();
    let events = problem.events();
    let target = problem.target();
    if problem.source() == target {
        out.insert(Vec::new());
        return false;
    }
    let mut budget = limits.max_tree_nodes;
    let mut on_path = vec![false; g.num_states()];
    let mut word = Vec::new();
    // (state, outgoing steps, next step to try)
    type Frame = (StateId, Vec<(Event, StateId)>, usize);
    let mut stack: Vec<Frame> = Vec::new();
    let steps = |s: StateId| -> Vec<(Event, StateId)> {
        g.transitions_from(s)
            .filter(|&(e, t)| field.contains(&t) && step_is_forcible(g, events, s, e, t))
            .collect()
    };
    on_path[problem.source()] = true;
    stack.push((problem.source(), steps(problem.source()), 0));
    while let Some((state, succ, pos)) = stack.last_mut() {
        let Some(&(e, t)) = succ.get(*pos) else {
            on_path[*state] = false;
            stack.pop();
            word.pop();
            continue;
        };
        *pos += 1;
        if on_path[t] {
            continue;
        }
        if budget == 0 || out.len() >= limits.max_paths {
            return true;
        }
        budget -= 1;
        word.push(e);
        if t == target {
            out.insert(word.clone());
            word.pop();
            continue;
        }
        on_path[t] = true;
        let next = steps(t);
        stack.push((t, next, 0));
    }
    false
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Criterion {
    /// Fewest ticks, then shortest, then lexicographic.
    MinTicks,
    /// Shortest, then fewest ticks, then lexicographic.
    MinLength,
}

pub fn select_optimal(paths: &ForciblePathSet, criterion: Criterion) -> Result<&ForciblePath> {
    paths.paths.iter().min_by(|a, b| compare(a, b, criterion)).ok_or(Error::NoSolution)
}

/// Total order used by [`select_optimal`].
pub fn compare(a: &ForciblePath, b: &ForciblePath, criterion: Criterion) -> Ordering {
    let key = |p: &ForciblePath| match criterion {
        Criterion::MinTicks => (p.ticks(), p.len()),
        Criterion::MinLength => (p.len(), p.ticks()),
    };
    key(a).cmp(&key(b)).then_with(|| a.events.cmp(&b.events))
}
