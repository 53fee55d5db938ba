use std::collections::{BTreeSet, VecDeque};
use std::time::Instant;

use serde::Serialize;

use super::paths::trs;
use super::ReconfigProblem;
use crate::automata::{project, Generator, Projection, StateId};
use crate::error::{Error, Result};
use crate::event::Event;

/// Outcome of solving a problem before and after erasing `tick`.
#[derive(Clone, Debug, Serialize)]
pub struct CommutativityReport {
    /// Tick-erased images of the timed solution.
    pub project_after_solve: BTreeSet<Vec<Event>>,
    /// Solution of the tick-projected problem.
    pub solve_after_project: BTreeSet<Vec<Event>>,
    pub equal: bool,
    pub timed_solved: bool,
    pub projected_solved: bool,
    pub projected_source: StateId,
    pub projected_target: StateId,
    pub timed_states: usize,
    pub timed_transitions: usize,
    pub projected_states: usize,
    pub projected_transitions: usize,
    /// Wall time of solve-then-project, in microseconds.
    pub project_after_solve_micros: u128,
    /// Wall time of project-then-solve (projection included).
    pub solve_after_project_micros: u128,
}

/// Runs the solver on the timed supervisor and on its tick projection and
/// compares the tick-free solution sets.
pub fn verify_projection_commutativity(problem: &ReconfigProblem<'_>) -> Result<CommutativityReport> {
    let g = problem.automaton();

    let start = Instant::now();
    let timed = trs(problem);
    let project_after_solve = timed.paths.untimed_strings();
    let project_after_solve_micros = start.elapsed().as_micros();

    let start = Instant::now();
    let projection = project(g, &BTreeSet::from([Event::TICK]));
    let projected_source = projected_state(g, &projection, problem.source())?;
    let projected_target = projected_state(g, &projection, problem.target())?;
    let projected_problem = ReconfigProblem::new(
        &projection.generator,
        problem.events(),
        projected_source,
        projected_target,
        problem.reconfig_event(),
    )?;
    let untimed = trs(&projected_problem);
    let solve_after_project = untimed.paths.strings();
    let solve_after_project_micros = start.elapsed().as_micros();

    Ok(CommutativityReport {
        equal: project_after_solve == solve_after_project,
        project_after_solve,
        solve_after_project,
        timed_solved: timed.is_solved(),
        projected_solved: untimed.is_solved(),
        projected_source,
        projected_target,
        timed_states: g.num_states(),
        timed_transitions: g.num_transitions(),
        projected_states: projection.generator.num_states(),
        projected_transitions: projection.generator.num_transitions(),
        project_after_solve_micros,
        solve_after_project_micros,
    })
}

/// The projected state reached by the tick-erased image of the first
/// breadth-first word leading to `state`.
pub(crate) fn projected_state(
    g: &Generator,
    projection: &Projection,
    state: StateId,
) -> Result<StateId> {
    let word = access_word(g, state).ok_or(Error::StateLostUnderProjection)?;
    let erased: Vec<Event> = word.into_iter().filter(|e| !e.is_tick()).collect();
    let image = projection
        .generator
        .initial()
        .and_then(|q| projection.generator.run(q, &erased))
        .ok_or(Error::StateLostUnderProjection)?;
    if projection.subsets[image].contains(&state) {
        Ok(image)
    } else {
        Err(Error::StateLostUnderProjection)
    }
}

/// Shortest word (ties broken by event order) reaching `state`.
pub fn access_word(g: &Generator, state: StateId) -> Option<Vec<Event>> {
    let q0 = g.initial()?;
    let mut parent: Vec<Option<(StateId, Event)>> = vec![None; g.num_states()];
    let mut seen = vec![false; g.num_states()];
    seen[q0] = true;
    let mut queue = VecDeque::from([q0]);
    while let Some(s) = queue.pop_front() {
        if s == state {
            break;
        }
        for (e, t) in g.transitions_from(s) {
            if !seen[t] {
                seen[t] = true;
                parent[t] = Some((s, e));
                queue.push_back(t);
            }
        }
    }
    if !seen.get(state).copied().unwrap_or(false) {
        return None;
    }
    let mut word = Vec::new();
    let mut s = state;
    while let Some((p, e)) = parent[s] {
        word.push(e);
        s = p;
    }
    word.reverse();
    Some(word)
}
