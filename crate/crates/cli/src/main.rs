use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use tdes_reconfig::automata::{project, sync_product, to_dot};
use tdes_reconfig::decentral::{
    timed_localize, verify_localization, verify_solution_equivalence, DecentralizationPackage,
    LocalizedSupervisor,
};
use tdes_reconfig::model::{parse_model, Block, BlockKind, ModelFile};
use tdes_reconfig::reconfig::{
    compare, trs, verify_projection_commutativity, Criterion, ReconfigProblem,
};
use tdes_reconfig::synthesis::{supcon, synthesize_tcrs, Supervisor, TcrsSynthesis};
use tdes_reconfig::tdes::{timed_graph, TimedGenerator, TimedGraphOptions};
use tdes_reconfig::{Event, Generator, StateId};

#[derive(Parser)]
#[command(name = "tdesr", version, about = "Timed reconfiguration supervisors for timed DES")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Cap on the number of timed states explored.
    #[arg(long, global = true, default_value_t = tdes_reconfig::tdes::DEFAULT_STATE_CAP)]
    state_cap: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synchronous product of blocks (default: scenario components and reconfig).
    Compose {
        model: PathBuf,
        #[arg(long, value_delimiter = ',')]
        blocks: Vec<String>,
        #[arg(long, default_value = "composed")]
        name: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Timed transition graph of an activity graph (default: composed scenario).
    TimedGraph {
        model: PathBuf,
        #[arg(long)]
        block: Option<String>,
        #[arg(long, default_value = "ttg")]
        name: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Supremal controllable supervisor of a plant block against a spec block.
    Supcon {
        model: PathBuf,
        /// An `atg` block (its timed graph is built) or a `spec` block
        /// holding an explicit timed behavior.
        #[arg(long)]
        plant: String,
        #[arg(long)]
        spec: String,
        #[arg(long, default_value = "sup")]
        name: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Centralized reconfiguration supervisor of the scenario.
    SynthTcrs {
        model: PathBuf,
        #[arg(long, default_value = "tcrs")]
        name: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Timed forcible reconfiguration paths.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Print the optimal path first.
        #[arg(long, value_enum)]
        optimal: Option<Optimal>,
    },
    /// Natural projection of the supervisor (default: erase tick).
    Project {
        #[command(flatten)]
        source: SupervisorArgs,
        #[arg(long, value_delimiter = ',', default_value = "tick")]
        erase: Vec<String>,
        #[arg(long, default_value = "projected")]
        name: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Local tick and event controllers of the scenario's supervisor.
    Localize {
        model: PathBuf,
        /// Events to localize (default: every prohibitible or forcible event).
        #[arg(long, value_delimiter = ',')]
        events: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compares solving before and after erasing tick.
    VerifyCommutativity {
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Checks the localized supervisor against the centralized one.
    VerifyDecentralized {
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Graphviz rendering of a block or of the scenario's supervisor.
    ExportDot {
        #[command(flatten)]
        source: SupervisorArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SupervisorArgs {
    model: PathBuf,
    /// Use this block instead of synthesizing from the scenario.
    #[arg(long)]
    block: Option<String>,
}

#[derive(Args)]
struct ProblemArgs {
    #[command(flatten)]
    source: SupervisorArgs,
    /// State index, or `@` followed by a comma-separated event word read
    /// from the initial state (e.g. `@tick,tick,11`).
    #[arg(long)]
    from: String,
    #[arg(long)]
    to: String,
    /// Reconfiguration event.
    #[arg(long)]
    event: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum Optimal {
    Ticks,
    Length,
}

enum Outcome {
    Done,
    Unsolvable,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Unsolvable) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load(path: &Path) -> Result<ModelFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_model(&text).map_err(|e| anyhow!("{}:\n{e}", path.display()))
}

fn options(cli: &Cli) -> TimedGraphOptions {
    TimedGraphOptions { state_cap: cli.state_cap }
}

fn scenario_blocks(model: &ModelFile) -> Result<Vec<String>> {
    let sc = model.scenario.as_ref().ok_or_else(|| anyhow!("model has no scenario section"))?;
    let mut names = sc.components.clone();
    names.extend(sc.reconfig.iter().cloned());
    Ok(names)
}

fn synthesize(model: &ModelFile, cli: &Cli) -> Result<TcrsSynthesis> {
    let sc = model.scenario.as_ref().ok_or_else(|| anyhow!("model has no scenario section"))?;
    let comps: Vec<Generator> =
        sc.components.iter().map(|n| model.generator(n)).collect::<Result<_, _>>()?;
    let refs: Vec<&Generator> = comps.iter().collect();
    let r = model.generator(sc.reconfig.as_deref().ok_or_else(|| anyhow!("scenario has no reconfig"))?)?;
    let e = match &sc.spec {
        Some(name) => model.generator(name)?,
        None => {
            // no behavioral constraint
            let mut g = Generator::with_states(1, []);
            g.set_initial(0)?;
            g.set_marked(0, true)?;
            g
        }
    };
    Ok(synthesize_tcrs(&refs, &r, &e, &model.events, options(cli))?)
}

/// The automaton a problem is posed on: the scenario's supervisor or a
/// named block read as an explicit supervisor.
enum Subject {
    Synthesized(Box<TcrsSynthesis>),
    Block(Generator),
}

impl Subject {
    fn load(model: &ModelFile, args: &SupervisorArgs, cli: &Cli) -> Result<Self> {
        match &args.block {
            Some(name) => Ok(Subject::Block(model.generator(name)?)),
            None => Ok(Subject::Synthesized(Box::new(synthesize(model, cli)?))),
        }
    }

    fn generator(&self) -> &Generator {
        match self {
            Subject::Synthesized(s) => s.supervisor.generator(),
            Subject::Block(g) => g,
        }
    }

    fn supervisor(&self) -> Result<&Supervisor> {
        match self {
            Subject::Synthesized(s) => Ok(&s.supervisor),
            Subject::Block(_) => bail!("this command needs the supervisor synthesized from the scenario"),
        }
    }
}

fn parse_event(s: &str) -> Result<Event> {
    match s.trim() {
        "tick" => Ok(Event::TICK),
        t => Ok(Event(t.parse().with_context(|| format!("bad event `{t}`"))?)),
    }
}

fn parse_state(g: &Generator, s: &str) -> Result<StateId> {
    if let Some(w) = s.strip_prefix('@') {
        let word: Vec<Event> =
            w.split(',').filter(|t| !t.is_empty()).map(parse_event).collect::<Result<_>>()?;
        let q0 = g.initial().ok_or_else(|| anyhow!("automaton is empty"))?;
        return g.run(q0, &word).ok_or_else(|| anyhow!("word `{w}` is not accepted"));
    }
    let q: StateId = s.parse().with_context(|| format!("bad state `{s}`"))?;
    if !g.has_state(q) {
        bail!("no state {q}");
    }
    Ok(q)
}

fn words(ws: &BTreeSet<Vec<Event>>) -> Vec<String> {
    ws.iter().map(|w| w.iter().map(Event::to_string).collect::<Vec<_>>().join(",")).collect()
}

/// Writes `blocks` with the model's events as a model file, or prints it.
fn emit_model(model: &ModelFile, blocks: Vec<Block>, output: Option<&Path>) -> Result<()> {
    let mut out = ModelFile { events: model.events.clone(), ..Default::default() };
    for b in blocks {
        out.push_block(b);
    }
    write_or_print(&out.render(), output)
}

fn write_or_print(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn summary(cli: &Cli, name: &str, g: &Generator, extra: serde_json::Value) {
    if cli.json {
        let mut v = json!({
            "name": name,
            "states": g.num_states(),
            "transitions": g.num_transitions(),
            "marked": g.marked_states().count(),
        });
        if let (Some(m), serde_json::Value::Object(e)) = (v.as_object_mut(), extra) {
            m.extend(e);
        }
        println!("{v}");
    } else {
        eprintln!("{name}: {} states, {} transitions", g.num_states(), g.num_transitions());
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Compose { model, blocks, name, output } => {
            let m = load(model)?;
            let names = if blocks.is_empty() { scenario_blocks(&m)? } else { blocks.clone() };
            let gens: Vec<Generator> = names.iter().map(|n| m.generator(n)).collect::<Result<_, _>>()?;
            let refs: Vec<&Generator> = gens.iter().collect();
            let g = sync_product(&refs)?;
            let kind = if gens.iter().any(|g| g.alphabet().contains(&Event::TICK)) {
                BlockKind::Spec
            } else {
                BlockKind::Atg
            };
            finish_automaton(cli, &m, name, kind, &g, output.as_deref(), json!({}))
        }
        Command::TimedGraph { model, block, name, output } => {
            let m = load(model)?;
            let atg = match block {
                Some(b) => m.generator(b)?,
                None => {
                    let names = scenario_blocks(&m)?;
                    let gens: Vec<Generator> =
                        names.iter().map(|n| m.generator(n)).collect::<Result<_, _>>()?;
                    sync_product(&gens.iter().collect::<Vec<_>>())?
                }
            };
            let ttg = timed_graph(&atg, &m.events, options(cli))?;
            finish_automaton(cli, &m, name, BlockKind::Spec, ttg.generator(), output.as_deref(), json!({}))
        }
        Command::Supcon { model, plant, spec, name, output } => {
            let m = load(model)?;
            let pb = m.block(plant).ok_or_else(|| anyhow!("no block named {plant}"))?;
            let plant_g = match pb.kind {
                BlockKind::Atg => timed_graph(&pb.to_generator()?, &m.events, options(cli))?,
                BlockKind::Spec => TimedGenerator::from_generator(pb.to_generator()?, m.events.clone())?,
            };
            let sup = supcon(&plant_g, &m.generator(spec)?)?;
            let extra = json!({ "plant_states": plant_g.generator().num_states(), "empty": sup.is_empty() });
            finish_automaton(cli, &m, name, BlockKind::Spec, sup.generator(), output.as_deref(), extra)
        }
        Command::SynthTcrs { model, name, output } => {
            let m = load(model)?;
            let syn = synthesize(&m, cli)?;
            for w in &syn.warnings {
                eprintln!("warning: {w}");
            }
            let extra = json!({
                "plant_states": syn.plant.generator().num_states(),
                "plant_transitions": syn.plant.generator().num_transitions(),
                "reconfig_events": syn.reconfig_events,
                "warnings": syn.warnings,
            });
            finish_automaton(cli, &m, name, BlockKind::Spec, syn.supervisor.generator(), output.as_deref(), extra)
        }
        Command::Solve { problem, optimal } => solve(cli, problem, *optimal),
        Command::Project { source, erase, name, output } => {
            let m = load(&source.model)?;
            let subject = Subject::load(&m, source, cli)?;
            let erase: BTreeSet<Event> = erase.iter().map(|s| parse_event(s)).collect::<Result<_>>()?;
            let p = project(subject.generator(), &erase);
            let extra = json!({
                "source_states": subject.generator().num_states(),
                "source_transitions": subject.generator().num_transitions(),
            });
            finish_automaton(cli, &m, name, BlockKind::Spec, &p.generator, output.as_deref(), extra)
        }
        Command::Localize { model, events, output } => {
            let m = load(model)?;
            let syn = synthesize(&m, cli)?;
            let pkg = package(&syn, events)?;
            let loc = timed_localize(&pkg)?;
            let ok = verify_localization(&pkg, &loc)?;
            report_localization(cli, &m, &loc, ok, output.as_deref())?;
            if !ok {
                bail!("localized supervisor does not reproduce the centralized behavior");
            }
            Ok(Outcome::Done)
        }
        Command::VerifyCommutativity { problem } => {
            let m = load(&problem.source.model)?;
            let subject = Subject::load(&m, &problem.source, cli)?;
            let g = subject.generator();
            let p = ReconfigProblem::new(
                g,
                &m.events,
                parse_state(g, &problem.from)?,
                parse_state(g, &problem.to)?,
                Event(problem.event),
            )?;
            let r = verify_projection_commutativity(&p)?;
            if cli.json {
                println!("{}", serde_json::to_string(&r)?);
            } else {
                println!("equal: {}", r.equal);
                println!("timed: {} states, {} transitions", r.timed_states, r.timed_transitions);
                println!("projected: {} states, {} transitions", r.projected_states, r.projected_transitions);
                println!("solve then project: {} us, {} strings", r.project_after_solve_micros, r.project_after_solve.len());
                println!("project then solve: {} us, {} strings", r.solve_after_project_micros, r.solve_after_project.len());
                for w in words(&r.project_after_solve) {
                    println!("  timed  {w}");
                }
                for w in words(&r.solve_after_project) {
                    println!("  projected  {w}");
                }
            }
            Ok(Outcome::Done)
        }
        Command::VerifyDecentralized { problem } => {
            let m = load(&problem.source.model)?;
            let syn = synthesize(&m, cli)?;
            let g = syn.supervisor.generator();
            let (s, t) = (parse_state(g, &problem.from)?, parse_state(g, &problem.to)?);
            let sigma = Event(problem.event);
            let pkg = package(&syn, &[])?;
            let loc = timed_localize(&pkg)?;
            let ok = verify_localization(&pkg, &loc)?;
            let rep = verify_solution_equivalence(&pkg, &loc, s, t, sigma)?;
            if cli.json {
                let v = json!({ "localization_ok": ok, "fallback": loc.fallback, "report": rep });
                println!("{v}");
            } else {
                println!("localization: {}", if ok { "ok" } else { "FAILED" });
                println!("fallback: {}", loc.fallback);
                println!("identical: {}", rep.identical);
                println!("isomorphic: {}", rep.isomorphic);
                println!("replay: {}", if rep.replay_ok { "ok" } else { "FAILED" });
                for w in words(&rep.decentralized) {
                    println!("  {w}");
                }
            }
            if !(ok && rep.identical && rep.replay_ok) {
                bail!("decentralized verification failed");
            }
            if rep.centralized.is_empty() {
                println!("unsolvable");
                return Ok(Outcome::Unsolvable);
            }
            Ok(Outcome::Done)
        }
        Command::ExportDot { source, output } => {
            let m = load(&source.model)?;
            let subject = Subject::load(&m, source, cli)?;
            let name = source.block.as_deref().unwrap_or("tcrs");
            write_or_print(&to_dot(subject.generator(), name), output.as_deref())?;
            Ok(Outcome::Done)
        }
    }
}

fn finish_automaton(
    cli: &Cli,
    m: &ModelFile,
    name: &str,
    kind: BlockKind,
    g: &Generator,
    output: Option<&Path>,
    extra: serde_json::Value,
) -> Result<Outcome> {
    summary(cli, name, g, extra);
    if output.is_some() || !cli.json {
        emit_model(m, vec![Block::from_generator(name, kind, g)], output)?;
    }
    Ok(Outcome::Done)
}

fn package(syn: &TcrsSynthesis, events: &[String]) -> Result<DecentralizationPackage> {
    let (plant, sup) = (syn.plant.clone(), syn.supervisor.clone());
    if events.is_empty() {
        return Ok(DecentralizationPackage::with_all_controllable(plant, sup)?);
    }
    let list = events.iter().map(|s| parse_event(s)).collect::<Result<_>>()?;
    Ok(DecentralizationPackage::new(plant, sup, list)?)
}

fn report_localization(
    cli: &Cli,
    m: &ModelFile,
    loc: &LocalizedSupervisor,
    ok: bool,
    output: Option<&Path>,
) -> Result<()> {
    if cli.json {
        let controllers: Vec<_> = loc
            .controllers()
            .map(|c| {
                json!({
                    "name": c.name(),
                    "states": c.generator.num_states(),
                    "alphabet": c.generator.alphabet(),
                })
            })
            .collect();
        let v = json!({
            "controllers": controllers,
            "tdrs_states": loc.tdrs.num_states(),
            "fallback": loc.fallback,
            "verified": ok,
        });
        println!("{v}");
    } else {
        for c in loc.controllers() {
            let labels: Vec<String> = c.generator.alphabet().iter().map(Event::to_string).collect();
            println!("{}: {} states over {}", c.name(), c.generator.num_states(), labels.join(","));
        }
        println!("tdrs: {} states", loc.tdrs.num_states());
        println!("fallback: {}", loc.fallback);
        println!("verified: {ok}");
    }
    if let Some(p) = output {
        let blocks =
            loc.controllers().map(|c| Block::from_generator(&c.name(), BlockKind::Spec, &c.generator)).collect();
        emit_model(m, blocks, Some(p))?;
    }
    Ok(())
}

fn solve(cli: &Cli, args: &ProblemArgs, optimal: Option<Optimal>) -> Result<Outcome> {
    let m = load(&args.source.model)?;
    let subject = Subject::load(&m, &args.source, cli)?;
    let g = subject.generator();
    let events = match &subject {
        Subject::Synthesized(_) => subject.supervisor()?.events(),
        Subject::Block(_) => &m.events,
    };
    let p = ReconfigProblem::new(
        g,
        events,
        parse_state(g, &args.from)?,
        parse_state(g, &args.to)?,
        Event(args.event),
    )?;
    let sol = trs(&p);
    let mut paths: Vec<_> = sol.paths.paths.iter().collect();
    if let Some(o) = optimal {
        let c = match o {
            Optimal::Ticks => Criterion::MinTicks,
            Optimal::Length => Criterion::MinLength,
        };
        // optimal first, the rest in their usual order
        if let Some(i) = (0..paths.len()).min_by(|&a, &b| compare(paths[a], paths[b], c)) {
            let best = paths.remove(i);
            paths.insert(0, best);
        }
    }
    if cli.json {
        let v = json!({
            "status": if sol.is_solved() { "solved" } else { "unsolvable" },
            "source": p.source(),
            "target": p.target(),
            "paths": paths.iter().map(|p| json!({
                "events": p.to_string(),
                "kind": p.kind,
                "length": p.len(),
                "ticks": p.ticks(),
            })).collect::<Vec<_>>(),
            "attraction_field": sol.paths.attraction_field,
            "truncated": sol.truncated,
        });
        println!("{v}");
    } else if sol.is_solved() {
        for p in &paths {
            println!("{p}");
        }
    } else {
        println!("unsolvable");
    }
    if sol.truncated {
        eprintln!("warning: search limit reached, path set may be incomplete");
    }
    Ok(if sol.is_solved() { Outcome::Done } else { Outcome::Unsolvable })
}
