//! Line-oriented model files.
//!
//! ```text
//! # comment
//! events
//!   11 prohibitible forcible lower=1 upper=inf
//!   12 uncontrollable lower=0 upper=3
//!
//! atg M1
//!   states idle busy
//!   initial idle
//!   marked idle
//!   alphabet 11 12
//!   idle 11 busy
//!   busy 12 idle
//!
//! spec SPEC
//!   ...
//!
//! scenario
//!   components M1 M2
//!   reconfig R
//!   behavior SPEC
//! ```
//!
//! Section headers start a block; every following line belongs to it until
//! the next header. Indentation is not significant. `tick` may appear in
//! `spec` blocks only. A block's alphabet is its `alphabet` line plus every
//! event on a transition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::automata::{Generator, StateId};
use crate::error::{Error, Result};
use crate::event::{Control, Event, EventDef, EventTable, UpperBound};
use crate::tdes::TimedGenerator;

/// A problem found at a 1-based line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParseErrors(pub Vec<Diagnostic>);

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_char('\n')?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseErrors {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BlockKind {
    Atg,
    Spec,
}

impl BlockKind {
    fn keyword(self) -> &'static str {
        match self {
            BlockKind::Atg => "atg",
            BlockKind::Spec => "spec",
        }
    }
}

/// A named automaton with symbolic state names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Block {
    pub name: String,
    pub kind: BlockKind,
    pub states: Vec<String>,
    /// Index into `states`; `None` only for a block without states.
    pub initial: Option<usize>,
    pub marked: BTreeSet<usize>,
    pub alphabet: BTreeSet<Event>,
    pub transitions: Vec<(usize, Event, usize)>,
}

impl Block {
    /// Block of `g` with states named by their indices.
    pub fn from_generator(name: &str, kind: BlockKind, g: &Generator) -> Self {
        Self::from_generator_named(name, kind, g, |s| s.to_string())
    }

    pub fn from_generator_named(
        name: &str,
        kind: BlockKind,
        g: &Generator,
        state_name: impl Fn(StateId) -> String,
    ) -> Self {
        Block {
            name: name.to_string(),
            kind,
            states: (0..g.num_states()).map(state_name).collect(),
            initial: g.initial(),
            marked: g.marked_states().collect(),
            alphabet: g.alphabet().clone(),
            transitions: g.transitions().collect(),
        }
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn to_generator(&self) -> Result<Generator> {
        let mut g = Generator::with_states(self.states.len(), self.alphabet.iter().copied());
        if let Some(q0) = self.initial {
            g.set_initial(q0)?;
        }
        for &m in &self.marked {
            g.set_marked(m, true)?;
        }
        for &(s, e, t) in &self.transitions {
            g.add_transition(s, e, t)?;
        }
        Ok(g)
    }
}

/// Names of the blocks making up the reconfiguration scenario.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Scenario {
    pub components: Vec<String>,
    pub reconfig: Option<String>,
    pub spec: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModelFile {
    pub events: EventTable,
    /// In file order; names are unique across all blocks.
    pub blocks: Vec<Block>,
    pub scenario: Option<Scenario>,
}

impl ModelFile {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty() && self.blocks.is_empty() && self.scenario.is_none()
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn generator(&self, name: &str) -> Result<Generator> {
        self.block(name)
            .ok_or_else(|| Error::InvalidProblem(format!("no block named {name}")))?
            .to_generator()
    }

    /// Treats a spec block as an explicitly given timed behavior.
    pub fn timed_generator(&self, name: &str) -> Result<TimedGenerator> {
        TimedGenerator::from_generator(self.generator(name)?, self.events.clone())
    }

    pub fn push_block(&mut self, block: Block) {
        self.blocks.retain(|b| b.name != block.name);
        self.blocks.push(block);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if !self.events.is_empty() {
            out.push_str("events\n");
            for d in self.events.iter() {
                out.push_str("  ");
                out.push_str(&render_event(d));
                out.push('\n');
            }
        }
        for b in &self.blocks {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&render_block(b));
        }
        if let Some(sc) = &self.scenario {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str("scenario\n");
            if !sc.components.is_empty() {
                let _ = writeln!(out, "  components {}", sc.components.join(" "));
            }
            if let Some(r) = &sc.reconfig {
                let _ = writeln!(out, "  reconfig {r}");
            }
            if let Some(s) = &sc.spec {
                let _ = writeln!(out, "  behavior {s}");
            }
        }
        out
    }
}

pub fn render_event(d: &EventDef) -> String {
    let control = match d.control() {
        Control::Prohibitible => "prohibitible",
        Control::Uncontrollable => "uncontrollable",
    };
    let forcible = if d.is_forcible() { " forcible" } else { "" };
    format!("{} {control}{forcible} lower={} upper={}", d.label(), d.lower(), d.upper())
}

pub fn render_block(b: &Block) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", b.kind.keyword(), b.name);
    if !b.states.is_empty() {
        let _ = writeln!(out, "  states {}", b.states.join(" "));
    }
    if let Some(q0) = b.initial {
        let _ = writeln!(out, "  initial {}", b.states[q0]);
    }
    if !b.marked.is_empty() {
        let names: Vec<&str> = b.marked.iter().map(|&m| b.states[m].as_str()).collect();
        let _ = writeln!(out, "  marked {}", names.join(" "));
    }
    if !b.alphabet.is_empty() {
        let labels: Vec<String> = b.alphabet.iter().map(Event::to_string).collect();
        let _ = writeln!(out, "  alphabet {}", labels.join(" "));
    }
    for &(s, e, t) in &b.transitions {
        let _ = writeln!(out, "  {} {e} {}", b.states[s], b.states[t]);
    }
    out
}

enum Section {
    None,
    Events,
    Block(usize),
    Scenario,
}

/// A block still holding names, resolved once every line has been read.
struct RawBlock {
    header_line: usize,
    name: String,
    kind: BlockKind,
    states: Vec<(usize, Vec<String>)>,
    initial: Vec<(usize, String)>,
    marked: Vec<(usize, Vec<String>)>,
    alphabet: Vec<(usize, String)>,
    transitions: Vec<(usize, String, String, String)>,
}

pub fn parse_model(text: &str) -> std::result::Result<ModelFile, ParseErrors> {
    let mut diags = Vec::new();
    let mut events = EventTable::new();
    let mut raw: Vec<RawBlock> = Vec::new();
    let mut scenario: Option<Scenario> = None;
    let mut section = Section::None;

    for (idx, full) in text.lines().enumerate() {
        let line = idx + 1;
        let content = full.split('#').next().unwrap_or("");
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let mut err = |message: String| diags.push(Diagnostic { line, message });
        match fields[0] {
            "events" if fields.len() == 1 => {
                section = Section::Events;
                continue;
            }
            "scenario" if fields.len() == 1 => {
                if scenario.is_some() {
                    err("duplicate scenario section".into());
                }
                scenario.get_or_insert_with(Scenario::default);
                section = Section::Scenario;
                continue;
            }
            kw @ ("atg" | "spec") => {
                if fields.len() != 2 {
                    err(format!("expected `{kw} <name>`"));
                    section = Section::None;
                    continue;
                }
                let name = fields[1].to_string();
                if raw.iter().any(|b| b.name == name) {
                    err(format!("duplicate block name {name}"));
                }
                let kind = if kw == "atg" { BlockKind::Atg } else { BlockKind::Spec };
                raw.push(RawBlock {
                    header_line: line,
                    name,
                    kind,
                    states: Vec::new(),
                    initial: Vec::new(),
                    marked: Vec::new(),
                    alphabet: Vec::new(),
                    transitions: Vec::new(),
                });
                section = Section::Block(raw.len() - 1);
                continue;
            }
            _ => {}
        }
        match section {
            Section::None => err("line outside of any section".into()),
            Section::Events => match parse_event(&fields) {
                Ok(def) => {
                    if let Err(e) = events.insert(def) {
                        err(e.to_string());
                    }
                }
                Err(m) => err(m),
            },
            Section::Scenario => {
                let sc = scenario.as_mut().expect("scenario section open");
                match (fields[0], &fields[1..]) {
                    ("components", rest) if !rest.is_empty() => {
                        sc.components.extend(rest.iter().map(|s| s.to_string()))
                    }
                    ("reconfig", [r]) => sc.reconfig = Some(r.to_string()),
                    ("behavior", [s]) => sc.spec = Some(s.to_string()),
                    _ => err(format!("unrecognized scenario line `{}`", fields.join(" "))),
                }
            }
            Section::Block(i) => {
                let b = &mut raw[i];
                let rest = || fields[1..].iter().map(|s| s.to_string()).collect::<Vec<_>>();
                match fields[0] {
                    "states" => b.states.push((line, rest())),
                    "initial" if fields.len() == 2 => b.initial.push((line, fields[1].to_string())),
                    "marked" => b.marked.push((line, rest())),
                    "alphabet" => b.alphabet.extend(rest().into_iter().map(|e| (line, e))),
                    _ if fields.len() == 3 => b.transitions.push((
                        line,
                        fields[0].to_string(),
                        fields[1].to_string(),
                        fields[2].to_string(),
                    )),
                    _ => err(format!("unrecognized line `{}`", fields.join(" "))),
                }
            }
        }
    }

    let blocks: Vec<Block> =
        raw.into_iter().filter_map(|b| resolve_block(b, &events, &mut diags)).collect();

    if let Some(sc) = &scenario {
        let names = sc.components.iter().chain(&sc.reconfig).chain(&sc.spec);
        for n in names {
            if !blocks.iter().any(|b| &b.name == n) {
                let line = text
                    .lines()
                    .position(|l| l.trim() == "scenario")
                    .map_or(0, |p| p + 1);
                diags.push(Diagnostic { line, message: format!("scenario refers to unknown block {n}") });
            }
        }
    }

    if diags.is_empty() {
        Ok(ModelFile { events, blocks, scenario })
    } else {
        diags.sort_by_key(|d| d.line);
        Err(ParseErrors(diags))
    }
}

fn parse_event(fields: &[&str]) -> std::result::Result<EventDef, String> {
    let label: u32 = fields[0]
        .parse()
        .map_err(|_| format!("malformed event label `{}`", fields[0]))?;
    let mut control = None;
    let mut forcible = false;
    let mut lower = 0;
    let mut upper = UpperBound::Infinite;
    for &f in &fields[1..] {
        match f {
            "prohibitible" => control = Some(Control::Prohibitible),
            "uncontrollable" => control = Some(Control::Uncontrollable),
            "forcible" => forcible = true,
            _ => {
                if let Some(v) = f.strip_prefix("lower=") {
                    lower = v.parse().map_err(|_| {
                        if v == "inf" {
                            "`inf` is only permitted as an upper bound".to_string()
                        } else {
                            format!("malformed bound `{f}`")
                        }
                    })?;
                } else if let Some(v) = f.strip_prefix("upper=") {
                    upper = if v == "inf" {
                        UpperBound::Infinite
                    } else {
                        UpperBound::Finite(v.parse().map_err(|_| format!("malformed bound `{f}`"))?)
                    };
                } else {
                    return Err(format!("unrecognized event attribute `{f}`"));
                }
            }
        }
    }
    let control = control.ok_or_else(|| {
        format!("event {label}: expected `prohibitible` or `uncontrollable`")
    })?;
    EventDef::new(Event(label), control, forcible, lower, upper).map_err(|e| e.to_string())
}

fn resolve_block(raw: RawBlock, events: &EventTable, diags: &mut Vec<Diagnostic>) -> Option<Block> {
    let start = diags.len();
    let mut err = |line: usize, message: String| diags.push(Diagnostic { line, message });

    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut states = Vec::new();
    for (line, names) in &raw.states {
        for n in names {
            if index.insert(n.clone(), states.len()).is_some() {
                err(*line, format!("duplicate state {n}"));
            } else {
                states.push(n.clone());
            }
        }
    }
    let lookup = |line: usize, n: &str, err: &mut dyn FnMut(usize, String)| match index.get(n) {
        Some(&i) => Some(i),
        None => {
            err(line, format!("unknown state {n} in {}", raw.name));
            None
        }
    };

    let initial = match raw.initial.as_slice() {
        [] => (!states.is_empty()).then_some(0),
        [(line, n)] => lookup(*line, n, &mut err),
        [_, (line, _), ..] => {
            err(*line, "initial state given twice".into());
            None
        }
    };
    let mut marked = BTreeSet::new();
    for (line, names) in &raw.marked {
        for n in names {
            marked.extend(lookup(*line, n, &mut err));
        }
    }
    let tick_ok = raw.kind == BlockKind::Spec;
    let event = |line: usize, tok: &str, err: &mut dyn FnMut(usize, String)| -> Option<Event> {
        let e = if tok == "tick" {
            Event::TICK
        } else {
            match tok.parse::<u32>() {
                Ok(l) => Event(l),
                Err(_) => {
                    err(line, format!("malformed event `{tok}`"));
                    return None;
                }
            }
        };
        if e.is_tick() {
            if !tick_ok {
                err(line, "tick is not allowed in an activity transition graph".into());
                return None;
            }
        } else if !events.contains(e) {
            err(line, format!("unknown event {e}"));
            return None;
        }
        Some(e)
    };
    let mut alphabet = BTreeSet::new();
    for (line, tok) in &raw.alphabet {
        alphabet.extend(event(*line, tok, &mut err));
    }
    let mut transitions = Vec::new();
    let mut seen: BTreeMap<(usize, Event), usize> = BTreeMap::new();
    for (line, s, e, t) in &raw.transitions {
        let s = lookup(*line, s, &mut err);
        let e = event(*line, e, &mut err);
        let t = lookup(*line, t, &mut err);
        if let (Some(s), Some(e), Some(t)) = (s, e, t) {
            alphabet.insert(e);
            match seen.insert((s, e), t) {
                Some(prev) if prev != t => {
                    err(*line, format!("nondeterministic transition from {} on {e}", states[s]))
                }
                Some(_) => {}
                None => transitions.push((s, e, t)),
            }
        }
    }
    if states.is_empty() && !raw.transitions.is_empty() {
        err(raw.header_line, format!("block {} declares no states", raw.name));
    }
    (diags.len() == start).then_some(Block {
        name: raw.name,
        kind: raw.kind,
        states,
        initial,
        marked,
        alphabet,
        transitions,
    })
}
