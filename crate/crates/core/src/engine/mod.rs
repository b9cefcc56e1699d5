//! The perception cycle: collection reader, planned pipeline, then the
//! fusion and identity consumers that update the belief state.

pub mod belief;
mod compound;
pub mod fusion;
pub mod identity;

use std::fmt::Write as _;

use serde::Serialize;

pub use belief::{BeliefObject, BeliefState};
pub use compound::{ScanResult, TrackPoint};
pub use fusion::{fuse_annotations, FusionError, FusionModel};
pub use identity::{FilterConfig, MatchConfig, Resolution, SkipReason};

use crate::cas::{init_cas, Cas, CasError, Observation};
use crate::ontology::{RobotProfile, Value};
use crate::planner::{needs_for_query, Plan, PlanError, Planner};
use crate::query::{resolve_determiner, MatchContext, Query, ResolutionError, ATTRIBUTE_TABLE};
use crate::registry::render::{render_observation, RenderOptions};
use crate::registry::scene::{Episode, Frame};
use crate::registry::{Registry, RegistryError};
use identity::FrameMemory;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Resolution(#[from] ResolutionError),
    #[error(transparent)]
    Cas(#[from] CasError),
    #[error("episode `{0}` has no frames")]
    EmptyEpisode(String),
    #[error("frame {tick} references unknown scene `{scene}`")]
    UnknownScene { scene: String, tick: u64 },
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error("missing parameter `{0}`")]
    MissingParameter(String),
    #[error("no belief object `{0}`")]
    UnknownObject(String),
    #[error("`{0}` cannot run in the continuous loop")]
    NotContinuous(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CycleOutcome {
    Processed(Resolution),
    Skipped(SkipReason),
}

/// Extra results of compound queries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Detail {
    None,
    Counts(Vec<(String, i64)>),
    Track(Vec<TrackPoint>),
    Scan(ScanResult),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub ids: Vec<String>,
    /// The pipeline that was run, or `None` when the belief state sufficed.
    pub plan: Option<Plan>,
    pub detail: Detail,
}

/// Renders one episode frame with the episode's noise level.
pub fn render_frame(
    episode: &Episode,
    frame: &Frame,
    seed: u64,
) -> Result<Observation, EngineError> {
    let scene = episode
        .scene(&frame.scene)
        .ok_or_else(|| EngineError::UnknownScene {
            scene: frame.scene.clone(),
            tick: frame.tick,
        })?;
    Ok(render_observation(
        scene,
        frame.camera_pose,
        frame.blur_score,
        &episode.name,
        RenderOptions {
            noise_sigma: episode.noise_sigma,
            seed,
            timestamp: frame.tick,
        },
    ))
}

pub struct Engine<'a> {
    registry: &'a Registry,
    robot: &'a RobotProfile,
    pub fusion: FusionModel,
    pub filters: FilterConfig,
    pub matching: MatchConfig,
    pub seed: u64,
    memory: FrameMemory,
    last_cas: Option<Cas>,
}

impl<'a> Engine<'a> {
    pub fn new(registry: &'a Registry, robot: &'a RobotProfile) -> Self {
        Engine {
            registry,
            robot,
            fusion: FusionModel::kitchen(),
            filters: FilterConfig::default(),
            matching: MatchConfig::default(),
            seed: 0,
            memory: FrameMemory::default(),
            last_cas: None,
        }
    }

    pub fn with_filters(mut self, filters: FilterConfig) -> Self {
        self.filters = filters;
        self
    }

    pub fn with_matching(mut self, matching: MatchConfig) -> Self {
        self.matching = matching;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn registry(&self) -> &Registry {
        self.registry
    }

    pub fn planner(&self) -> Planner<'_> {
        Planner::new(self.registry, self.robot)
    }

    /// The CAS of the most recent processed cycle.
    pub fn last_cas(&self) -> Option<&Cas> {
        self.last_cas.as_ref()
    }

    /// One cycle. Continuous cycles (no query) pass the frame and ROI
    /// filters first; tasked cycles always look at the frame they are given.
    pub fn run_cycle<S: AsRef<str>>(
        &mut self,
        obs: Observation,
        pipeline: &[S],
        query: Option<&Query>,
        belief: &mut BeliefState,
    ) -> Result<CycleOutcome, EngineError> {
        if pipeline.is_empty() {
            return Ok(CycleOutcome::Processed(Resolution::default()));
        }
        let continuous = query.is_none();
        if continuous {
            if let Err(reason) = self.memory.admit(&obs, &self.filters) {
                return Ok(CycleOutcome::Skipped(reason));
            }
        }
        let tick = obs.timestamp;
        let mut cas = init_cas(obs)?;
        cas.query = query.cloned();
        for name in pipeline {
            cas = self.registry.run_annotator(name.as_ref(), cas, self.seed)?;
        }
        self.fuse(&mut cas)?;

        let roi = continuous && self.filters.roi_enabled;
        let admitted: Vec<_> = cas
            .hypotheses
            .iter()
            .filter(|h| !roi || identity::in_roi(cas.observation(), h, &self.filters.task_regions))
            .collect();
        let dropped = cas.hypotheses.len() - admitted.len();
        let mut resolution =
            identity::resolve_identity(&cas, &admitted, belief, &self.matching, tick);
        resolution.dropped = dropped;
        self.last_cas = Some(cas);
        Ok(CycleOutcome::Processed(resolution))
    }

    /// Classifies every hypothesis that carries evidence-stub atoms.
    fn fuse(&self, cas: &mut Cas) -> Result<(), EngineError> {
        let tbox = self.registry.tbox();
        let fused: Vec<(String, crate::cas::Annotation)> = cas
            .hypotheses
            .iter()
            .filter(|h| {
                h.annotations
                    .iter()
                    .any(|a| fusion::STUB_ATOMS.contains(&a.type_name.as_str()))
            })
            .filter_map(|h| {
                fuse_annotations(h, &self.fusion)
                    .ok()
                    .map(|a| (h.id.clone(), a))
            })
            .collect();
        for (id, a) in fused {
            cas.annotate(tbox, &id, a)?;
        }
        Ok(())
    }

    /// Runs `base` over every frame and returns the belief after each one.
    pub fn run_continuous(
        &mut self,
        episode: &Episode,
        base: &Plan,
        belief: &mut BeliefState,
    ) -> Result<Vec<(u64, CycleOutcome, BeliefState)>, EngineError> {
        for step in &base.steps {
            let eligible = self
                .registry
                .descriptor(&step.annotator)
                .is_some_and(|d| d.continuous_eligible);
            if !eligible {
                return Err(EngineError::NotContinuous(step.annotator.clone()));
            }
        }
        let names = base.names();
        let mut trajectory = Vec::with_capacity(episode.frames.len());
        for frame in &episode.frames {
            let obs = render_frame(episode, frame, self.seed)?;
            let outcome = self.run_cycle(obs, &names, None, belief)?;
            trajectory.push((frame.tick, outcome, belief.clone()));
        }
        Ok(trajectory)
    }

    fn last_observation(&self, episode: &Episode) -> Result<Observation, EngineError> {
        let frame = episode
            .frames
            .last()
            .ok_or_else(|| EngineError::EmptyEpisode(episode.name.clone()))?;
        render_frame(episode, frame, self.seed)
    }

    /// True iff every belief object already carries every annotation type
    /// the query needs.
    pub fn belief_covers(&self, query: &Query, belief: &BeliefState) -> Result<bool, EngineError> {
        let tbox = self.registry.tbox();
        let needs = needs_for_query(tbox, query)?;
        Ok(!belief.is_empty()
            && belief.objects.iter().all(|o| {
                needs.iter().all(|n| {
                    o.annotations
                        .iter()
                        .any(|a| tbox.subsumed(&a.type_name, &n.type_name))
                })
            }))
    }

    /// Answers `query` against the newest frame of `episode`, planning and
    /// running a pipeline only when the belief state cannot answer it.
    pub fn answer_query(
        &mut self,
        query: &Query,
        episode: &Episode,
        belief: &mut BeliefState,
    ) -> Result<Answer, EngineError> {
        match query {
            Query::Compound(c) => compound::run_compound(self, query, c, episode, belief),
            Query::Inspect { uid, attributes } => {
                let uid = uid.trim_start_matches('#');
                let class = belief
                    .object(uid)
                    .ok_or_else(|| EngineError::UnknownObject(uid.to_string()))?
                    .class
                    .clone();
                let plan = self
                    .planner()
                    .plan_inspection(class.as_deref(), attributes)?;
                let obs = self.last_observation(episode)?;
                self.run_cycle(obs, &plan.names(), Some(query), belief)?;
                Ok(Answer {
                    ids: vec![uid.to_string()],
                    plan: Some(plan),
                    detail: Detail::None,
                })
            }
            Query::Detect(desc) => {
                let obs = self.last_observation(episode)?;
                let plan = if self.belief_covers(query, belief)? {
                    None
                } else {
                    let plan = self.planner().plan_for_query(query)?;
                    self.run_cycle(obs.clone(), &plan.names(), Some(query), belief)?;
                    Some(plan)
                };
                let matches = self.matching_objects(desc, &obs, belief);
                let ids = resolve_determiner(desc.determiner, matches)?;
                Ok(Answer {
                    ids,
                    plan,
                    detail: Detail::None,
                })
            }
        }
    }

    pub(crate) fn matching_objects(
        &self,
        desc: &crate::query::ObjectDescription,
        obs: &Observation,
        belief: &BeliefState,
    ) -> Vec<String> {
        let ctx = MatchContext {
            tbox: self.registry.tbox(),
            semantic_map: &obs.semantic_map,
        };
        belief
            .objects
            .iter()
            .filter(|o| crate::query::match_object(desc, &o.annotations, &ctx))
            .map(|o| o.id.clone())
            .collect()
    }
}

/// Attribute values of a belief object, in vocabulary order.
pub fn describe(o: &BeliefObject) -> Vec<(String, String)> {
    let mut out = Vec::new();
    if let Some(c) = &o.class {
        out.push(("class".to_string(), c.clone()));
    }
    for (attr, type_name, property) in ATTRIBUTE_TABLE {
        if type_name == "ClassificationAnnotation" {
            continue;
        }
        let Some(v) = o.latest(type_name).and_then(|a| a.get(property)) else {
            continue;
        };
        let text = match v {
            Value::Symbol(s) => s.clone(),
            Value::Real(r) => format!("{r:.3}"),
            Value::Integer(i) => i.to_string(),
            Value::Pose(p) => {
                let [x, y, z] = p.position;
                format!("({x:.3} {y:.3} {z:.3})")
            }
            Value::Vector(_) => continue,
        };
        out.push((attr.to_string(), text));
    }
    out
}

/// The answer as S-expressions, one object per line.
pub fn format_answer(answer: &Answer, belief: &BeliefState) -> String {
    let mut out = String::new();
    for id in &answer.ids {
        let _ = write!(out, "(object {id}");
        if let Some(o) = belief.object(id) {
            for (a, v) in describe(o) {
                let _ = write!(out, " ({a} {v})");
            }
        }
        out.push_str(")\n");
    }
    match &answer.detail {
        Detail::None => {}
        Detail::Counts(counts) => {
            for (id, n) in counts {
                let _ = writeln!(out, "(count {id} {n})");
            }
        }
        Detail::Track(points) => {
            for p in points {
                match p.position {
                    Some([x, y, z]) => {
                        let _ = writeln!(out, "(track {} {} ({x:.3} {y:.3} {z:.3}))", p.tick, p.id);
                    }
                    None => {
                        let _ = writeln!(out, "(track {} {} lost)", p.tick, p.id);
                    }
                }
            }
        }
        Detail::Scan(s) => {
            let _ = writeln!(
                out,
                "(scan (floors {}) (separators {}))",
                s.floors.len(),
                s.separators.len()
            );
        }
    }
    out
}
