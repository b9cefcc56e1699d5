//! Knowledge filters and identity resolution of hypotheses against the
//! belief state.

use serde::{Deserialize, Serialize};

use super::belief::{BeliefObject, BeliefState};
use crate::cas::{Annotation, Cas, Hypothesis, Observation};
use crate::geometry::Pose;
use crate::ontology::Value;
use crate::palette;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub roi_enabled: bool,
    /// Semantic region labels hypotheses must fall in. Empty means anywhere.
    pub task_regions: Vec<String>,
    pub static_skip_enabled: bool,
    /// Mean absolute depth change, in millimeters, below which a frame is static.
    pub static_epsilon_mm: f64,
    pub motion_enabled: bool,
    pub max_translation_m: f64,
    pub max_rotation_rad: f64,
    pub max_blur: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            roi_enabled: true,
            task_regions: Vec::new(),
            static_skip_enabled: true,
            static_epsilon_mm: 2.0,
            motion_enabled: true,
            max_translation_m: 0.05,
            max_rotation_rad: 0.1,
            max_blur: 100.0,
        }
    }
}

impl FilterConfig {
    pub fn on(task_regions: &[String]) -> Self {
        FilterConfig {
            task_regions: task_regions.to_vec(),
            ..Default::default()
        }
    }

    pub fn off() -> Self {
        FilterConfig {
            roi_enabled: false,
            static_skip_enabled: false,
            motion_enabled: false,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let values = [
            self.static_epsilon_mm,
            self.max_translation_m,
            self.max_rotation_rad,
            self.max_blur,
        ];
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err("filter thresholds must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    pub pose_weight: f64,
    /// Pose distance that counts as 1.0, in millimeters.
    pub pose_scale_mm: f64,
    pub histogram_weight: f64,
    pub shape_weight: f64,
    pub class_weight: f64,
    pub threshold: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            pose_weight: 1.0,
            pose_scale_mm: 500.0,
            histogram_weight: 1.0,
            shape_weight: 1.0,
            class_weight: 1.0,
            threshold: 0.5,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<(), String> {
        let w = [
            self.pose_weight,
            self.histogram_weight,
            self.shape_weight,
            self.class_weight,
        ];
        if w.iter().any(|v| !(*v >= 0.0)) || !w.iter().any(|v| *v > 0.0) {
            return Err("match weights must be non-negative with at least one positive".into());
        }
        if !(self.pose_scale_mm > 0.0) || !(self.threshold >= 0.0) {
            return Err("pose scale must be positive and the threshold non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SkipReason {
    Motion,
    Blur,
    Static,
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SkipReason::Motion => "camera motion",
            SkipReason::Blur => "motion blur",
            SkipReason::Static => "static scene",
        })
    }
}

/// What the frame-level filters remember between frames.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameMemory {
    previous_pose: Option<Pose>,
    processed_depth: Option<Vec<u16>>,
}

fn task_mask(obs: &Observation, regions: &[String]) -> Vec<usize> {
    let rects: Vec<_> = obs
        .semantic_map
        .iter()
        .filter(|r| regions.contains(&r.label))
        .map(|r| r.rect)
        .collect();
    (0..obs.pixel_count())
        .filter(|&i| {
            rects.is_empty()
                || rects
                    .iter()
                    .any(|r| r.contains_px(i as u32 % obs.width, i as u32 / obs.width))
        })
        .collect()
}

impl FrameMemory {
    /// Applies the frame-level filters and remembers this frame. The camera
    /// pose is compared with the previous frame seen; the depth with the
    /// previous frame processed.
    pub fn admit(&mut self, obs: &Observation, cfg: &FilterConfig) -> Result<(), SkipReason> {
        let previous = self.previous_pose.replace(obs.camera_pose);
        if cfg.motion_enabled {
            if let Some(p) = previous {
                if p.translation_distance(&obs.camera_pose) > cfg.max_translation_m
                    || p.angular_distance(&obs.camera_pose) > cfg.max_rotation_rad
                {
                    return Err(SkipReason::Motion);
                }
            }
            if obs.blur_score > cfg.max_blur {
                return Err(SkipReason::Blur);
            }
        }
        if cfg.static_skip_enabled {
            if let Some(last) = self
                .processed_depth
                .as_ref()
                .filter(|d| d.len() == obs.depth.len())
            {
                let mask = task_mask(obs, &cfg.task_regions);
                let total: f64 = mask
                    .iter()
                    .map(|&i| (obs.depth[i] as f64 - last[i] as f64).abs())
                    .sum();
                if mask.is_empty() || total / (mask.len() as f64) < cfg.static_epsilon_mm {
                    return Err(SkipReason::Static);
                }
            }
        }
        self.processed_depth = Some(obs.depth.clone());
        Ok(())
    }
}

/// True iff the hypothesis centroid lies in one of the task regions.
pub fn in_roi(obs: &Observation, h: &Hypothesis, regions: &[String]) -> bool {
    if regions.is_empty() {
        return true;
    }
    let (x, y) = h.region.centroid(obs.width);
    obs.regions_at(x, y).any(|r| regions.contains(&r.label))
}

/// The cues identity resolution compares.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub position_mm: [f64; 3],
    pub histogram: Option<Vec<f64>>,
    pub shape: Option<String>,
    pub class: Option<String>,
}

fn histogram_of(annotations: &[Annotation]) -> Option<Vec<f64>> {
    annotations
        .iter()
        .rev()
        .find(|a| a.type_name == "ColorHistogram")
        .and_then(|a| match a.get("bins") {
            Some(Value::Vector(v)) => Some(v.clone()),
            _ => None,
        })
}

fn symbol_of(annotations: &[Annotation], type_name: &str, property: &str) -> Option<String> {
    annotations
        .iter()
        .rev()
        .find(|a| a.type_name == type_name)
        .and_then(|a| a.symbol(property))
        .map(str::to_string)
}

fn position_of(cas: &Cas, h: &Hypothesis) -> [f64; 3] {
    let pose = h
        .latest("PoseAnnotation")
        .and_then(|a| a.get("pose"))
        .and_then(Value::as_pose)
        .copied()
        .unwrap_or_else(|| crate::registry::pose_of(cas, h));
    pose.position.map(|m| m * 1000.0)
}

pub fn features(cas: &Cas, h: &Hypothesis) -> Features {
    Features {
        position_mm: position_of(cas, h),
        histogram: histogram_of(&h.annotations),
        shape: symbol_of(&h.annotations, "ShapeAnnotation", "shape"),
        class: symbol_of(&h.annotations, "ClassificationAnnotation", "classLabel"),
    }
}

pub fn object_features(o: &BeliefObject) -> Features {
    Features {
        position_mm: o.position_mm,
        histogram: histogram_of(&o.annotations),
        shape: symbol_of(&o.annotations, "ShapeAnnotation", "shape"),
        class: o.class.clone(),
    }
}

/// Weighted distance. Cues missing on either side contribute nothing.
pub fn distance(a: &Features, b: &Features, cfg: &MatchConfig) -> f64 {
    let d = a
        .position_mm
        .iter()
        .zip(&b.position_mm)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let mut total = cfg.pose_weight * d / cfg.pose_scale_mm;
    if let (Some(x), Some(y)) = (&a.histogram, &b.histogram) {
        total += cfg.histogram_weight * palette::intersection_distance(x, y);
    }
    let mismatch = |x: &Option<String>, y: &Option<String>| match (x, y) {
        (Some(x), Some(y)) if x != y => 1.0,
        _ => 0.0,
    };
    total += cfg.shape_weight * mismatch(&a.shape, &b.shape);
    total += cfg.class_weight * mismatch(&a.class, &b.class);
    total
}

/// Outcome of resolving one frame's hypotheses.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Resolution {
    /// `(hypothesis id, belief object id)` per admitted hypothesis.
    pub assignments: Vec<(String, String)>,
    pub created: usize,
    pub dropped: usize,
}

/// Greedy one-to-one matching under the threshold, ordered by distance and
/// then by object id. Unmatched hypotheses become new objects.
pub fn resolve_identity(
    cas: &Cas,
    hypotheses: &[&Hypothesis],
    belief: &mut BeliefState,
    cfg: &MatchConfig,
    tick: u64,
) -> Resolution {
    let feats: Vec<Features> = hypotheses.iter().map(|h| features(cas, h)).collect();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (hi, f) in feats.iter().enumerate() {
        for (oi, o) in belief.objects.iter().enumerate() {
            let d = distance(f, &object_features(o), cfg);
            if d <= cfg.threshold {
                pairs.push((d, oi, hi));
            }
        }
    }
    pairs.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| belief.objects[a.1].id.cmp(&belief.objects[b.1].id))
            .then(a.2.cmp(&b.2))
    });
    let mut object_taken = vec![false; belief.objects.len()];
    let mut target: Vec<Option<usize>> = vec![None; hypotheses.len()];
    for (_, oi, hi) in pairs {
        if !object_taken[oi] && target[hi].is_none() {
            object_taken[oi] = true;
            target[hi] = Some(oi);
        }
    }

    let mut out = Resolution::default();
    for (hi, h) in hypotheses.iter().enumerate() {
        let object = match target[hi] {
            Some(oi) => &mut belief.objects[oi],
            None => {
                out.created += 1;
                belief.create(tick, feats[hi].position_mm)
            }
        };
        object.last_seen = tick;
        object.position_mm = feats[hi].position_mm;
        object.lineage.push(format!("{tick}/{}", h.id));
        for a in &h.annotations {
            object.absorb(tick, a.clone());
        }
        if !object.has_type("PoseAnnotation") && !object.has_type("LocationAnnotation") {
            let pose = Pose::from_translation(
                feats[hi].position_mm[0] / 1000.0,
                feats[hi].position_mm[1] / 1000.0,
                feats[hi].position_mm[2] / 1000.0,
            );
            object.absorb(
                tick,
                Annotation::new("PoseAnnotation").with("pose", Value::Pose(pose)),
            );
        }
        out.assignments.push((h.id.clone(), object.id.clone()));
    }
    out
}
