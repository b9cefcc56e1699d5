mod config;
mod load;

use std::fs;
use std::io::{self, Read, Write};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use percept_core::engine::{
    describe, format_answer, BeliefState, CycleOutcome, Engine, EngineError, FilterConfig,
    MatchConfig,
};
use percept_core::ontology::RobotProfile;
use percept_core::planner::{Plan, PlanError};
use percept_core::query::{parse_query, Query, ResolutionError};
use percept_core::registry::scene::Episode;
use percept_core::registry::Registry;

/// Query-driven perception over recorded or synthetic episodes.
///
/// Exit codes: 0 success, 2 nothing matched, 3 ambiguous `the`,
/// 4 no pipeline could be planned, 1 anything else.
#[derive(Parser, Debug)]
#[command(name = "percept", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Debug)]
struct Global {
    /// Domain ontology: kitchen, chemlab, retail or a file. Repeatable.
    #[arg(long, global = true)]
    ontology: Vec<String>,
    /// Robot profile: pr2, no-depth, a profile name or a file.
    #[arg(long, global = true, default_value = "pr2")]
    robot: String,
    /// Bundled episode name or episode JSON file.
    #[arg(long, global = true)]
    episode: Option<String>,
    /// Bundled scene name or scene JSON file, run as a single frame.
    #[arg(long, global = true)]
    scene: Option<String>,
    /// Query text. Read from stdin when a command needs one and it is absent.
    #[arg(long, global = true)]
    query: Option<String>,
    /// Seed for sensor noise and stochastic annotators.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the last analysis structure as JSON to this file.
    #[arg(long, global = true)]
    dump_cas: Option<String>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Frame and region filters for continuous cycles.
    #[arg(long, global = true, value_enum, default_value_t = Switch::On)]
    filters: Switch,
    /// Annotator, filter and matching overrides.
    #[arg(long, global = true)]
    config: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the pipeline for a query, or for a list of attributes.
    Plan {
        /// Comma-separated attributes, instead of a query.
        #[arg(long, value_delimiter = ',')]
        attributes: Vec<String>,
    },
    /// Print the pipeline with the reason for every step.
    Explain {
        #[arg(long, value_delimiter = ',')]
        attributes: Vec<String>,
    },
    /// Answer a query against an episode.
    Run,
    /// Run the continuous pipeline over every frame of an episode.
    Continuous,
    /// Print the belief state after the continuous run (and a query, if given).
    Belief,
}

struct Session {
    registry: Registry,
    robot: RobotProfile,
    overrides: config::Overrides,
    matching: MatchConfig,
}

impl Session {
    fn open(g: &Global) -> Result<Self> {
        let kb = load::knowledge_base(&g.ontology, &g.robot)?;
        let robot = load::robot(&kb, &g.robot)?;
        let mut registry = Registry::shipped(kb)?;
        let overrides = match &g.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
                config::parse(&text).with_context(|| format!("in {path}"))?
            }
            None => config::Overrides::default(),
        };
        overrides.apply_params(&mut registry)?;
        // Report bad filter settings before any episode is loaded.
        overrides.filters(FilterConfig::default())?;
        Ok(Session {
            registry,
            robot,
            matching: overrides.matching(MatchConfig::default())?,
            overrides,
        })
    }

    /// Filters on use the episode's task regions unless the config names others.
    fn engine(&self, g: &Global, episode: &Episode) -> Result<Engine<'_>> {
        let base = match g.filters {
            Switch::On => FilterConfig::on(&episode.task_regions),
            Switch::Off => FilterConfig::off(),
        };
        Ok(Engine::new(&self.registry, &self.robot)
            .with_filters(self.overrides.filters(base)?)
            .with_matching(self.matching.clone())
            .with_seed(g.seed))
    }
}

fn query_text(g: &Global) -> Result<String> {
    if let Some(q) = &g.query {
        return Ok(q.clone());
    }
    let mut text = String::new();
    io::stdin()
        .read_to_string(&mut text)
        .context("reading the query from stdin")?;
    if text.trim().is_empty() {
        bail!("no query given (use --query or stdin)");
    }
    Ok(text)
}

fn query(g: &Global) -> Result<Query> {
    Ok(parse_query(&query_text(g)?)?)
}

fn plan_of(session: &Session, g: &Global, attributes: &[String]) -> Result<Plan> {
    let planner = percept_core::planner::Planner::new(&session.registry, &session.robot);
    Ok(if attributes.is_empty() {
        planner.plan_for_query(&query(g)?)?
    } else {
        planner.plan_for_attributes(attributes)?
    })
}

fn plan_json(plan: &Plan) -> serde_json::Value {
    json!({
        "pipeline": plan.names(),
        "steps": plan.steps.iter().map(|s| json!({
            "annotator": s.annotator,
            "reasons": s.reasons.iter().map(ToString::to_string).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "continuous": plan.continuous,
    })
}

fn objects_json(belief: &BeliefState, ids: &[String]) -> serde_json::Value {
    ids.iter()
        .filter_map(|id| belief.object(id))
        .map(|o| {
            let attrs: serde_json::Map<String, serde_json::Value> = describe(o)
                .into_iter()
                .map(|(k, v)| (k, json!(v)))
                .collect();
            json!({ "id": o.id, "attributes": attrs })
        })
        .collect()
}

fn dump_cas(engine: &Engine<'_>, g: &Global) -> Result<()> {
    if let Some(path) = &g.dump_cas {
        let cas = engine
            .last_cas()
            .context("no perception cycle ran, nothing to dump")?;
        fs::write(path, cas.to_json()).with_context(|| format!("writing {path}"))?;
    }
    Ok(())
}

fn continuous(
    engine: &mut Engine<'_>,
    episode: &Episode,
    belief: &mut BeliefState,
) -> Result<Vec<(u64, CycleOutcome, usize)>> {
    let base = engine.planner().continuous_base()?;
    Ok(engine
        .run_continuous(episode, &base, belief)?
        .into_iter()
        .map(|(tick, outcome, b)| (tick, outcome, b.len()))
        .collect())
}

fn execute(cli: &Cli, out: &mut impl Write) -> Result<()> {
    let g = &cli.global;
    let session = Session::open(g)?;
    match &cli.command {
        Command::Plan { attributes } => {
            let plan = plan_of(&session, g, attributes)?;
            if g.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&plan_json(&plan))?)?;
            } else {
                for name in plan.names() {
                    writeln!(out, "{name}")?;
                }
            }
        }
        Command::Explain { attributes } => {
            let plan = plan_of(&session, g, attributes)?;
            if g.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&plan_json(&plan))?)?;
            } else {
                for need in &plan.needs {
                    writeln!(out, "need {need}")?;
                }
                write!(out, "{}", plan.explain())?;
            }
        }
        Command::Run => {
            let q = query(g)?;
            let episode = load::episode(g.episode.as_deref(), g.scene.as_deref())?;
            let mut engine = session.engine(g, &episode)?;
            let mut belief = BeliefState::new();
            let answer = engine.answer_query(&q, &episode, &mut belief);
            dump_cas(&engine, g)?;
            let answer = answer?;
            if g.json {
                let v = json!({
                    "ids": answer.ids,
                    "plan": answer.plan.as_ref().map(Plan::names),
                    "detail": answer.detail,
                    "objects": objects_json(&belief, &answer.ids),
                });
                writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
            } else {
                write!(out, "{}", format_answer(&answer, &belief))?;
            }
        }
        Command::Continuous => {
            let episode = load::episode(g.episode.as_deref(), g.scene.as_deref())?;
            let mut engine = session.engine(g, &episode)?;
            let mut belief = BeliefState::new();
            let trajectory = continuous(&mut engine, &episode, &mut belief)?;
            dump_cas(&engine, g)?;
            if g.json {
                let frames: Vec<_> = trajectory
                    .iter()
                    .map(|(tick, outcome, n)| match outcome {
                        CycleOutcome::Processed(r) => json!({
                            "tick": tick, "processed": true, "matched": r.assignments.len().saturating_sub(r.created),
                            "created": r.created, "dropped": r.dropped, "objects": n,
                        }),
                        CycleOutcome::Skipped(why) => json!({
                            "tick": tick, "processed": false, "skipped": why, "objects": n,
                        }),
                    })
                    .collect();
                let v = json!({ "frames": frames, "objects": belief.len() });
                writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
            } else {
                for (tick, outcome, n) in &trajectory {
                    match outcome {
                        CycleOutcome::Processed(r) => writeln!(
                            out,
                            "tick {tick}: {} matched, {} new, {} outside the task regions ({n} objects)",
                            r.assignments.len().saturating_sub(r.created),
                            r.created,
                            r.dropped
                        )?,
                        CycleOutcome::Skipped(why) => writeln!(out, "tick {tick}: skipped, {why} ({n} objects)")?,
                    }
                }
                writeln!(out, "objects: {}", belief.len())?;
            }
        }
        Command::Belief => {
            let episode = load::episode(g.episode.as_deref(), g.scene.as_deref())?;
            let mut engine = session.engine(g, &episode)?;
            let mut belief = BeliefState::new();
            continuous(&mut engine, &episode, &mut belief)?;
            if g.query.is_some() {
                engine.answer_query(&query(g)?, &episode, &mut belief)?;
            }
            dump_cas(&engine, g)?;
            writeln!(out, "{}", belief.dump())?;
        }
    }
    Ok(())
}

/// 2 nothing matched, 3 ambiguous, 4 planning failed, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    let resolution = |r: &ResolutionError| match r {
        ResolutionError::NotFound => 2,
        ResolutionError::Ambiguity(_) => 3,
    };
    if let Some(e) = err.downcast_ref::<EngineError>() {
        return match e {
            EngineError::Resolution(r) => resolution(r),
            EngineError::Plan(_) => 4,
            _ => 1,
        };
    }
    if let Some(r) = err.downcast_ref::<ResolutionError>() {
        return resolution(r);
    }
    if err.downcast_ref::<PlanError>().is_some() {
        return 4;
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match execute(&cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed pipe (`percept belief | head`) is not a failure.
        Err(err)
            if err
                .downcast_ref::<io::Error>()
                .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(err) => {
            let _ = out.flush();
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
