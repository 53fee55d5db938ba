use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{eligibility_set_with, step_is_forcible, ReconfigProblem};
use crate::automata::StateId;
use crate::event::Event;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BftNode {
    pub state: StateId,
    pub parent: Option<usize>,
    /// Event leading from this node's state to its parent's state.
    pub event: Option<Event>,
    pub children: Vec<usize>,
}

/// Backtracking forcibility tree. Node 0 is the root (the target state);
/// nodes are stored in depth-first preorder. An empty node list is the
/// empty tree.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Bft {
    pub nodes: Vec<BftNode>,
    /// Set when expansion stopped at the node limit.
    pub truncated: bool,
}

/// Bounds on the work done by the solver. The number of simple paths can
/// grow exponentially with the number of states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TrsLimits {
    pub max_tree_nodes: usize,
    pub max_paths: usize,
}

impl Default for TrsLimits {
    fn default() -> Self {
        Self { max_tree_nodes: 2_000_000, max_paths: 100_000 }
    }
}

impl Bft {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> Option<&BftNode> {
        self.nodes.first()
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].children.is_empty())
    }

    /// Events from `leaf` up to the root, i.e. the forward path from the
    /// leaf's state to the target.
    pub fn branch_events(&self, leaf: usize) -> Vec<Event> {
        let mut events = Vec::new();
        let mut i = leaf;
        while let Some(p) = self.nodes[i].parent {
            events.push(self.nodes[i].event.expect("non-root nodes carry an event"));
            i = p;
        }
        events
    }

    /// States from `leaf` up to the root.
    pub fn branch_states(&self, leaf: usize) -> Vec<StateId> {
        let mut states = vec![self.nodes[leaf].state];
        let mut i = leaf;
        while let Some(p) = self.nodes[i].parent {
            states.push(self.nodes[p].state);
            i = p;
        }
        states
    }

    pub fn depth(&self) -> usize {
        self.leaves().map(|l| self.branch_states(l).len()).max().unwrap_or(0)
    }
}

/// Expands the tree from the target by repeatedly taking the eligibility
/// set of the current node. A branch ends at the source, when nothing is
/// backtrackable, or when every candidate already occurs on the branch.
///
/// Predecessors that the source cannot reach along forcible steps are not
/// expanded, since no branch through them can end at the source.
///
/// One child is created per predecessor state; when several events lead
/// from the same predecessor, the edge carries the smallest one and the
/// others are recovered later as branching paths.
pub fn build_bft(problem: &ReconfigProblem<'_>) -> Bft {
    build_bft_with(problem, None, TrsLimits::default().max_tree_nodes)
}

/// States reachable from the source by forcible steps. Only these can lie
/// on a branch that ends at the source.
pub(crate) fn forcible_reach(problem: &ReconfigProblem<'_>) -> Vec<bool> {
    let g = problem.automaton();
    let events = problem.events();
    let mut seen = vec![false; g.num_states()];
    seen[problem.source()] = true;
    let mut stack = vec![problem.source()];
    while let Some(s) = stack.pop() {
        for (e, t) in g.transitions_from(s) {
            if !seen[t] && step_is_forcible(g, events, s, e, t) {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    seen
}

/// [`build_bft`] that only expands states marked in `admissible` and stops
/// after `max_nodes` nodes.
pub(crate) fn build_bft_with(
    problem: &ReconfigProblem<'_>,
    admissible: Option<&[bool]>,
    max_nodes: usize,
) -> Bft {
    let g = problem.automaton();
    let events = problem.events();
    let preds = g.predecessors();
    let (source, target) = (problem.source(), problem.target());

    let mut nodes = vec![BftNode { state: target, parent: None, event: None, children: Vec::new() }];
    if source == target {
        return Bft { nodes, truncated: false };
    }
    let mut truncated = false;
    let mut on_branch = vec![false; g.num_states()];
    on_branch[target] = true;

    // a branch through a state the source cannot reach by forcible steps
    // never ends at the source, so such states are not expanded
    let mut useful = vec![false; g.num_states()];
    useful[source] = true;
    let mut stack = vec![source];
    while let Some(s) = stack.pop() {
        for (e, t) in g.transitions_from(s) {
            if !useful[t] && step_is_forcible(g, events, s, e, t) {
                useful[t] = true;
                stack.push(t);
            }
        }
    }

    let candidates = |q: StateId| -> Vec<(StateId, Event)> {
        let mut by_state: BTreeMap<StateId, Event> = BTreeMap::new();
        for (p, e) in eligibility_set_with(g, events, &preds, q).entries {
            if useful[p] {
                by_state.entry(p).or_insert(e);
            }
        }
        by_state.into_iter().collect()
    };

    // explicit DFS: (node, its candidates, next candidate index)
    let mut stack = vec![(0usize, candidates(target), 0usize)];
    while let Some((node, cands, pos)) = stack.last_mut() {
        let Some(&(child_state, event)) = cands.get(*pos) else {
            on_branch[nodes[*node].state] = false;
            stack.pop();
            continue;
        };
        *pos += 1;
        if on_branch[child_state] || admissible.is_some_and(|a| !a[child_state]) {
            continue;
        }
        if nodes.len() >= max_nodes {
            truncated = true;
            break;
        }
        let parent = *node;
        let child = nodes.len();
        nodes.push(BftNode { state: child_state, parent: Some(parent), event: Some(event), children: Vec::new() });
        nodes[parent].children.push(child);
        if child_state != source {
            on_branch[child_state] = true;
            let next = candidates(child_state);
            stack.push((child, next, 0));
        }
    }
    Bft { nodes, truncated }
}

/// Keeps exactly the branches that end at `source`; the result is empty if
/// none does.
pub fn prune_to_pbft(tree: &Bft, source: StateId) -> Bft {
    let n = tree.nodes.len();
    let mut keep = vec![false; n];
    // children always have larger indices than their parent
    for i in (0..n).rev() {
        let node = &tree.nodes[i];
        keep[i] = if node.children.is_empty() {
            node.state == source
        } else {
            node.children.iter().any(|&c| keep[c])
        };
    }
    if n == 0 || !keep[0] {
        return Bft { nodes: Vec::new(), truncated: tree.truncated };
    }
    let mut remap = vec![usize::MAX; n];
    let mut nodes: Vec<BftNode> = Vec::new();
    for i in 0..n {
        if !keep[i] {
            continue;
        }
        remap[i] = nodes.len();
        let old = &tree.nodes[i];
        let parent = old.parent.map(|p| remap[p]);
        if let Some(p) = parent {
            let id = nodes.len();
            nodes[p].children.push(id);
        }
        nodes.push(BftNode { state: old.state, parent, event: old.event, children: Vec::new() });
    }
    Bft { nodes, truncated: tree.truncated }
}

/// Every state occurring in a proper tree.
pub fn attraction_field(pbft: &Bft) -> BTreeSet<StateId> {
    pbft.nodes.iter().map(|n| n.state).collect()
}

#[cfg(test)]
mod tests {
    use super::super::tests::{automaton, table};
    use super::*;

    fn leaf_states(t: &Bft) -> BTreeSet<StateId> {
        t.leaves().map(|l| t.nodes[l].state).collect()
    }

    #[test]
    fn source_equals_target_is_single_node() {
        let t = table(&[(1, true, true), (91, true, true)]);
        let g = automaton(2, &[(0, 1, 1), (0, 91, 0)]);
        let p = ReconfigProblem::new(&g, &t, 0, 0, Event(91)).unwrap();
        let tree = build_bft(&p);
        assert_eq!(tree.len(), 1);
        assert_eq!(prune_to_pbft(&tree, 0), tree);
        assert_eq!(attraction_field(&prune_to_pbft(&tree, 0)), BTreeSet::from([0]));
    }

    #[test]
    fn linear_forcible_two_nodes() {
        let t = table(&[(1, true, true), (91, true, true)]);
        let g = automaton(2, &[(0, 1, 1), (1, 91, 1)]);
        let p = ReconfigProblem::new(&g, &t, 0, 1, Event(91)).unwrap();
        let tree = build_bft(&p);
        assert_eq!(tree.len(), 2);
        assert_eq!(tree.branch_events(1), vec![Event(1)]);
        assert_eq!(attraction_field(&prune_to_pbft(&tree, 0)), BTreeSet::from([0, 1]));
    }

    #[test]
    fn no_source_leaf_prunes_to_empty() {
        // 2 -1-> 1 backtrackable but the source 0 is disconnected
        let t = table(&[(1, true, true), (91, true, true), (3, true, false)]);
        let g = automaton(3, &[(0, 3, 2), (2, 1, 1), (1, 91, 1)]);
        let p = ReconfigProblem::new(&g, &t, 0, 1, Event(91)).unwrap();
        let tree = build_bft(&p);
        // 0 -3-> 2 is prohibitible with no competitors, so 0 is reached
        assert!(leaf_states(&tree).contains(&0));
        let g2 = automaton(3, &[(0, 3, 2), (0, 2, 0), (2, 1, 1), (1, 91, 1)]);
        let t2 = table(&[(1, true, true), (91, true, true), (3, true, false), (2, false, false)]);
        let p2 = ReconfigProblem::new(&g2, &t2, 0, 1, Event(91)).unwrap();
        let tree2 = build_bft(&p2);
        assert!(!leaf_states(&tree2).contains(&0));
        assert!(prune_to_pbft(&tree2, 0).is_empty());
    }

    #[test]
    fn branches_never_repeat_states() {
        // cycle 1 <-> 2 both forcible, source 0 -> 1
        let t = table(&[(1, true, true), (91, true, true)]);
        let g = automaton(3, &[(0, 1, 1), (1, 1, 2), (2, 1, 1), (2, 91, 2)]);
        let p = ReconfigProblem::new(&g, &t, 0, 2, Event(91)).unwrap();
        let tree = build_bft(&p);
        for leaf in tree.leaves() {
            let states = tree.branch_states(leaf);
            let unique: BTreeSet<_> = states.iter().collect();
            assert_eq!(unique.len(), states.len());
        }
        let pbft = prune_to_pbft(&tree, 0);
        assert_eq!(leaf_states(&pbft), BTreeSet::from([0]));
    }
}
