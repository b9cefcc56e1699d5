//! `count`, `track` and `scan`.

use serde::Serialize;

use super::{render_frame, Answer, BeliefObject, BeliefState, Detail, Engine, EngineError};
use crate::cas::{init_cas, Annotation};
use crate::ontology::Value;
use crate::planner::Need;
use crate::query::{resolve_determiner, Compound, ObjectDescription, Query, QueryValue, Verb};
use crate::registry::scene::Episode;

/// Shelf rows or separator columns closer than this, in pixels, are the
/// same physical element.
pub const SCAN_MERGE_PX: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackPoint {
    pub tick: u64,
    pub id: String,
    /// Camera-frame position in meters, `None` when not seen in this frame.
    pub position: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ScanResult {
    pub floors: Vec<String>,
    pub separators: Vec<String>,
}

enum Command {
    Start,
    Stop,
}

fn command(desc: &ObjectDescription) -> Result<Command, EngineError> {
    match desc.value_of("command") {
        None => Ok(Command::Start),
        Some(v) => match v.as_symbol() {
            Some("start") => Ok(Command::Start),
            Some("stop") => Ok(Command::Stop),
            _ => Err(EngineError::UnknownCommand(format!("{v:?}"))),
        },
    }
}

/// The description without task parameters, for matching belief objects.
fn perceivable(desc: &ObjectDescription) -> ObjectDescription {
    let mut d = desc.clone();
    d.constraints
        .retain(|c| !matches!(c.attribute.as_str(), "command" | "width" | "pose"));
    d
}

pub(super) fn run_compound(
    engine: &mut Engine<'_>,
    query: &Query,
    c: &Compound,
    episode: &Episode,
    belief: &mut BeliefState,
) -> Result<Answer, EngineError> {
    match c.verb {
        Verb::Count => count(engine, query, c, episode, belief),
        Verb::Track => track(engine, query, c, episode, belief),
        Verb::Scan => scan(engine, c, episode, belief),
    }
}

fn count(
    engine: &mut Engine<'_>,
    query: &Query,
    c: &Compound,
    episode: &Episode,
    belief: &mut BeliefState,
) -> Result<Answer, EngineError> {
    if c.inner
        .value_of("width")
        .and_then(QueryValue::as_number)
        .is_none()
    {
        return Err(EngineError::MissingParameter("width".into()));
    }
    let plan = engine.planner().plan_for_query(query)?;
    let obs = engine.last_observation(episode)?;
    engine.run_cycle(obs.clone(), &plan.names(), Some(query), belief)?;
    let candidates = engine.matching_objects(&perceivable(&c.inner), &obs, belief);
    let counted: Vec<String> = candidates
        .into_iter()
        .filter(|id| {
            belief
                .object(id)
                .is_some_and(|o| o.has_type("CountAnnotation"))
        })
        .collect();
    let ids = resolve_determiner(c.inner.determiner, counted)?;
    let counts = ids
        .iter()
        .filter_map(|id| {
            let n = belief.object(id)?.latest("CountAnnotation")?.get("count")?;
            match n {
                Value::Integer(n) => Some((id.clone(), *n)),
                _ => None,
            }
        })
        .collect();
    Ok(Answer {
        ids,
        plan: Some(plan),
        detail: Detail::Counts(counts),
    })
}

fn track(
    engine: &mut Engine<'_>,
    query: &Query,
    c: &Compound,
    episode: &Episode,
    belief: &mut BeliefState,
) -> Result<Answer, EngineError> {
    if let Command::Stop = command(&c.inner)? {
        return Ok(Answer {
            ids: Vec::new(),
            plan: None,
            detail: Detail::Track(Vec::new()),
        });
    }
    let plan = engine.planner().plan_for_query(query)?;
    let names = plan.names();
    let desc = perceivable(&c.inner);
    let mut target: Option<String> = None;
    let mut points = Vec::new();
    for frame in &episode.frames {
        let obs = render_frame(episode, frame, engine.seed)?;
        engine.run_cycle(obs.clone(), &names, Some(query), belief)?;
        let id = match &target {
            Some(id) => id.clone(),
            None => {
                let matches = engine.matching_objects(&desc, &obs, belief);
                let found = resolve_determiner(c.inner.determiner, matches)?;
                let Some(first) = found.into_iter().next() else {
                    return Err(crate::query::ResolutionError::NotFound.into());
                };
                target = Some(first.clone());
                first
            }
        };
        let o = belief
            .object(&id)
            .expect("tracked objects stay in the belief state");
        points.push(TrackPoint {
            tick: frame.tick,
            position: (o.last_seen == frame.tick).then(|| o.position_mm.map(|v| v / 1000.0)),
            id,
        });
    }
    Ok(Answer {
        ids: target.into_iter().collect(),
        plan: Some(plan),
        detail: Detail::Track(points),
    })
}

/// Replaces the continuous pipeline with the shelf experts for every frame
/// of the episode and merges the per-frame detections in scene
/// coordinates.
fn scan(
    engine: &mut Engine<'_>,
    c: &Compound,
    episode: &Episode,
    belief: &mut BeliefState,
) -> Result<Answer, EngineError> {
    let collect = |belief: &BeliefState, class: &str| -> Vec<String> {
        belief
            .objects
            .iter()
            .filter(|o| o.class.as_deref() == Some(class))
            .map(|o| o.id.clone())
            .collect()
    };
    if let Command::Stop = command(&c.inner)? {
        let result = ScanResult {
            floors: collect(belief, "ShelfFloor"),
            separators: collect(belief, "Separator"),
        };
        return Ok(Answer {
            ids: result.floors.clone(),
            plan: None,
            detail: Detail::Scan(result),
        });
    }
    let plan = engine.planner().plan_needs(&[
        Need::attribute("scan", "ShelfAnnotation", None),
        Need::attribute("scan", "SeparatorAnnotation", None),
    ])?;
    for frame in &episode.frames {
        let obs = render_frame(episode, frame, engine.seed)?;
        let mm = obs.mm_per_pixel;
        let reach = SCAN_MERGE_PX * mm;
        // Scene position in millimeters of an image row or column.
        let (ox, oy) = (
            frame.camera_pose.position[0] * 1000.0,
            frame.camera_pose.position[1] * 1000.0,
        );
        let mut cas = init_cas(obs)?;
        for name in plan.names() {
            cas = engine.registry().run_annotator(name, cas, engine.seed)?;
        }
        for h in &cas.hypotheses {
            let Some(row) = h.latest("ShelfAnnotation").and_then(|a| a.real("row")) else {
                continue;
            };
            let y = row * mm + oy;
            merge(belief, "ShelfFloor", frame.tick, [0.0, y, 0.0], |o| {
                (o.position_mm[1] - y).abs() <= reach
            });
        }
        for a in cas
            .scene_annotations
            .iter()
            .filter(|a| a.type_name == "SeparatorAnnotation")
        {
            let (Some(col), Some(row)) = (a.real("column"), a.real("shelfRow")) else {
                continue;
            };
            let (x, y) = (col * mm + ox, row * mm + oy);
            merge(belief, "Separator", frame.tick, [x, y, 0.0], |o| {
                (o.position_mm[0] - x).abs() <= reach && (o.position_mm[1] - y).abs() <= reach
            });
        }
    }

    // Floors are numbered from the top of the shelf.
    let mut floors: Vec<(f64, String)> = belief
        .objects
        .iter()
        .filter(|o| o.class.as_deref() == Some("ShelfFloor"))
        .map(|o| (o.position_mm[1], o.id.clone()))
        .collect();
    floors.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tick = episode.frames.last().map_or(0, |f| f.tick);
    for (i, (y, id)) in floors.iter().enumerate() {
        let o = belief.object_mut(id).expect("floor exists");
        o.absorb(
            tick,
            Annotation::new("ShelfAnnotation")
                .with("floor", Value::Integer(i as i64 + 1))
                .with("row", Value::Real(y / 1000.0)),
        );
    }
    for id in collect(belief, "Separator") {
        let o = belief.object_mut(&id).expect("separator exists");
        let [x, y, _] = o.position_mm;
        o.absorb(
            tick,
            Annotation::new("SeparatorAnnotation")
                .with("column", Value::Real(x / 1000.0))
                .with("shelfRow", Value::Real(y / 1000.0)),
        );
    }
    let result = ScanResult {
        floors: collect(belief, "ShelfFloor"),
        separators: collect(belief, "Separator"),
    };
    Ok(Answer {
        ids: result.floors.clone(),
        plan: Some(plan),
        detail: Detail::Scan(result),
    })
}

/// The existing object of `class` accepted by `same`, or a new one.
fn merge<'b>(
    belief: &'b mut BeliefState,
    class: &str,
    tick: u64,
    position: [f64; 3],
    same: impl Fn(&BeliefObject) -> bool,
) -> &'b mut BeliefObject {
    let existing = belief
        .objects
        .iter()
        .position(|o| o.class.as_deref() == Some(class) && same(o));
    let o = match existing {
        Some(i) => &mut belief.objects[i],
        None => {
            let o = belief.create(tick, position);
            o.absorb(tick, crate::registry::classification(class, 1.0, "scan"));
            o
        }
    };
    o.last_seen = tick;
    o
}
