//! The per-cycle blackboard: one observation plus a growing set of object
//! hypotheses, each carrying typed annotations.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geometry::{PixelRect, Pose};
use crate::ontology::{OntologyError, TBox, Value};
use crate::query::Query;

/// Types the collection reader makes available before any annotator runs.
pub const BASE_TYPES: [&str; 3] = ["RsDepthImage", "RsColorImage", "SemanticMap"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CasError {
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("region out of bounds: {0}")]
    RegionOutOfBounds(String),
    #[error("unknown hypothesis `{0}`")]
    UnknownHypothesis(String),
    #[error("type check failed for `{property}`: {reason}")]
    TypeCheck { property: String, reason: String },
    #[error("unknown type `{0}`")]
    UnknownType(String),
}

/// Named area of the semantic map (`drawer#3`, `counter_top`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticRegion {
    pub label: String,
    /// Ontology class of the furniture behind the region (`Drawer`, `Table`).
    pub class: String,
    pub rect: PixelRect,
}

/// Ground-truth identity of a rendered object; read only by the evidence stubs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthObject {
    pub id: String,
    pub class_label: String,
    pub bbox: PixelRect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub timestamp: u64,
    pub width: u32,
    pub height: u32,
    pub color: Vec<[u8; 3]>,
    /// Millimeters; 0 marks an invalid reading.
    pub depth: Vec<u16>,
    pub camera_pose: Pose,
    pub blur_score: f64,
    pub source_episode: String,
    pub mm_per_pixel: f64,
    #[serde(default)]
    pub semantic_map: Vec<SemanticRegion>,
    #[serde(default)]
    pub ground_truth: Vec<GroundTruthObject>,
}

impl Observation {
    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn validate(&self) -> Result<(), CasError> {
        let n = self.pixel_count();
        if n == 0 {
            return Err(CasError::InvalidObservation("empty raster".into()));
        }
        if self.color.len() != n || self.depth.len() != n {
            return Err(CasError::InvalidObservation(format!(
                "expected {n} pixels, got {} color and {} depth",
                self.color.len(),
                self.depth.len()
            )));
        }
        if (self.camera_pose.quaternion_norm() - 1.0).abs() > 1e-6 {
            return Err(CasError::InvalidObservation(
                "camera quaternion is not unit norm".into(),
            ));
        }
        if !(self.blur_score >= 0.0) {
            return Err(CasError::InvalidObservation("negative blur score".into()));
        }
        if !(self.mm_per_pixel > 0.0) {
            return Err(CasError::InvalidObservation(
                "pixel scale must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Semantic regions containing pixel coordinate `(x, y)`.
    pub fn regions_at(&self, x: f64, y: f64) -> impl Iterator<Item = &SemanticRegion> {
        self.semantic_map
            .iter()
            .filter(move |r| r.rect.contains(x, y))
    }
}

/// Sorted, duplicate-free row-major pixel indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Region(Vec<u32>);

impl Region {
    pub fn new(indices: impl IntoIterator<Item = u32>) -> Self {
        let mut v: Vec<u32> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Region(v)
    }

    pub fn from_rect(rect: PixelRect, width: u32) -> Self {
        Region(
            (rect.y0..rect.y1)
                .flat_map(|y| (rect.x0..rect.x1).map(move |x| y * width + x))
                .collect(),
        )
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: u32) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    /// Mean pixel coordinate `(x, y)`, at pixel centres.
    pub fn centroid(&self, width: u32) -> (f64, f64) {
        let n = self.0.len().max(1) as f64;
        let (sx, sy) = self.0.iter().fold((0.0, 0.0), |(sx, sy), &i| {
            (sx + (i % width) as f64 + 0.5, sy + (i / width) as f64 + 0.5)
        });
        (sx / n, sy / n)
    }

    /// Tight bounding rectangle; `None` for an empty region.
    pub fn bbox(&self, width: u32) -> Option<PixelRect> {
        let first = self.0.first()?;
        let mut r = PixelRect::new(
            first % width,
            first / width,
            first % width + 1,
            first / width + 1,
        );
        for &i in &self.0 {
            let (x, y) = (i % width, i / width);
            r.x0 = r.x0.min(x);
            r.y0 = r.y0.min(y);
            r.x1 = r.x1.max(x + 1);
            r.y1 = r.y1.max(y + 1);
        }
        Some(r)
    }
}

/// One annotation individual: a type from the TBox plus its role fillers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub id: String,
    pub type_name: String,
    pub properties: Vec<(String, Value)>,
}

impl Annotation {
    pub fn new(type_name: &str) -> Self {
        Annotation {
            id: String::new(),
            type_name: type_name.to_string(),
            properties: Vec::new(),
        }
    }

    pub fn with(mut self, property: &str, value: Value) -> Self {
        self.properties.push((property.to_string(), value));
        self
    }

    pub fn get(&self, property: &str) -> Option<&Value> {
        self.properties
            .iter()
            .find(|(p, _)| p == property)
            .map(|(_, v)| v)
    }

    pub fn symbol(&self, property: &str) -> Option<&str> {
        self.get(property).and_then(Value::as_symbol)
    }

    pub fn real(&self, property: &str) -> Option<f64> {
        self.get(property).and_then(Value::as_real)
    }

    /// Equality ignoring the assigned id.
    pub fn same_content(&self, other: &Annotation) -> bool {
        self.type_name == other.type_name && self.properties == other.properties
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub id: String,
    pub region: Region,
    pub annotations: Vec<Annotation>,
}

impl Hypothesis {
    /// Annotations whose type is subsumed by `type_name`, in insertion order.
    pub fn annotations_of<'a>(
        &'a self,
        tbox: &'a TBox,
        type_name: &'a str,
    ) -> impl Iterator<Item = &'a Annotation> {
        self.annotations
            .iter()
            .filter(move |a| tbox.subsumed(&a.type_name, type_name))
    }

    /// Most recent annotation of exactly `type_name`.
    pub fn latest(&self, type_name: &str) -> Option<&Annotation> {
        self.annotations
            .iter()
            .rev()
            .find(|a| a.type_name == type_name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cas {
    observation: Observation,
    pub hypotheses: Vec<Hypothesis>,
    /// Annotations about the whole observation (supporting plane, normals).
    pub scene_annotations: Vec<Annotation>,
    /// Types asserted so far by the collection reader and annotators.
    pub produced: BTreeSet<String>,
    pub query: Option<Query>,
    next_annotation: u64,
}

fn type_check(err: OntologyError) -> CasError {
    match err {
        OntologyError::TypeCheck { property, reason } => CasError::TypeCheck { property, reason },
        OntologyError::Cardinality {
            property,
            count,
            expected,
            ..
        } => CasError::TypeCheck {
            property,
            reason: format!("{count} value(s), expected {expected}"),
        },
        OntologyError::UnknownType(t) => CasError::UnknownType(t),
        other => CasError::TypeCheck {
            property: String::new(),
            reason: other.to_string(),
        },
    }
}

/// Collection reader: wraps a fresh observation with no hypotheses.
pub fn init_cas(observation: Observation) -> Result<Cas, CasError> {
    observation.validate()?;
    Ok(Cas {
        observation,
        hypotheses: Vec::new(),
        scene_annotations: Vec::new(),
        produced: BASE_TYPES.iter().map(|t| t.to_string()).collect(),
        query: None,
        next_annotation: 0,
    })
}

impl Cas {
    pub fn observation(&self) -> &Observation {
        &self.observation
    }

    fn check_region(&self, region: &Region) -> Result<(), CasError> {
        if region.is_empty() {
            return Err(CasError::RegionOutOfBounds("region is empty".into()));
        }
        let n = self.observation.pixel_count() as u32;
        match region.indices().last() {
            Some(&max) if max >= n => Err(CasError::RegionOutOfBounds(format!(
                "index {max} outside raster of {n} pixels"
            ))),
            _ => Ok(()),
        }
    }

    /// Appends a new hypothesis; every call yields a fresh id.
    pub fn add_hypothesis(&mut self, region: Region) -> Result<String, CasError> {
        self.check_region(&region)?;
        let id = format!("h{}", self.hypotheses.len());
        self.hypotheses.push(Hypothesis {
            id: id.clone(),
            region,
            annotations: Vec::new(),
        });
        Ok(id)
    }

    /// Reuses a hypothesis with an identical region, otherwise adds one.
    /// Keeps hypothesis generators idempotent.
    pub fn ensure_hypothesis(&mut self, region: Region) -> Result<String, CasError> {
        match self.hypotheses.iter().find(|h| h.region == region) {
            Some(h) => Ok(h.id.clone()),
            None => self.add_hypothesis(region),
        }
    }

    pub fn hypothesis(&self, id: &str) -> Result<&Hypothesis, CasError> {
        self.hypotheses
            .iter()
            .find(|h| h.id == id)
            .ok_or_else(|| CasError::UnknownHypothesis(id.to_string()))
    }

    fn prepare(
        &mut self,
        tbox: &TBox,
        owner: &str,
        mut annotation: Annotation,
    ) -> Result<Annotation, CasError> {
        tbox.check_individual(owner, &annotation.type_name, &annotation.properties)
            .map_err(type_check)?;
        annotation.id = format!("{owner}-a{}", self.next_annotation);
        Ok(annotation)
    }

    /// Attaches `annotation` to hypothesis `hyp`. Returns `false` when an
    /// identical annotation was already present. Contradicting annotations of
    /// the same type coexist.
    pub fn annotate(
        &mut self,
        tbox: &TBox,
        hyp: &str,
        annotation: Annotation,
    ) -> Result<bool, CasError> {
        let idx = self
            .hypotheses
            .iter()
            .position(|h| h.id == hyp)
            .ok_or_else(|| CasError::UnknownHypothesis(hyp.to_string()))?;
        if self.hypotheses[idx]
            .annotations
            .iter()
            .any(|a| a.same_content(&annotation))
        {
            return Ok(false);
        }
        let annotation = self.prepare(tbox, hyp, annotation)?;
        self.next_annotation += 1;
        self.hypotheses[idx].annotations.push(annotation);
        Ok(true)
    }

    /// Attaches an annotation about the whole observation.
    pub fn annotate_scene(
        &mut self,
        tbox: &TBox,
        annotation: Annotation,
    ) -> Result<bool, CasError> {
        if self
            .scene_annotations
            .iter()
            .any(|a| a.same_content(&annotation))
        {
            return Ok(false);
        }
        let annotation = self.prepare(tbox, "scene", annotation)?;
        self.next_annotation += 1;
        self.scene_annotations.push(annotation);
        Ok(true)
    }

    pub fn query_annotations<'a>(
        &'a self,
        tbox: &'a TBox,
        hyp: &str,
        type_name: &'a str,
    ) -> Result<Vec<&'a Annotation>, CasError> {
        if !tbox.contains_type(type_name) {
            return Err(CasError::UnknownType(type_name.to_string()));
        }
        Ok(self
            .hypothesis(hyp)?
            .annotations_of(tbox, type_name)
            .collect())
    }

    pub fn scene_annotation(&self, type_name: &str) -> Option<&Annotation> {
        self.scene_annotations
            .iter()
            .rev()
            .find(|a| a.type_name == type_name)
    }

    pub fn mark_produced(&mut self, type_name: &str) {
        self.produced.insert(type_name.to_string());
    }

    /// Whether `type_name` (or a subtype) has been asserted in this CAS.
    pub fn has_type(&self, tbox: &TBox, type_name: &str) -> bool {
        self.produced.iter().any(|p| tbox.subsumed(p, type_name))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("CAS serializes")
    }

    pub fn from_json(text: &str) -> Result<Cas, CasError> {
        let cas: Cas =
            serde_json::from_str(text).map_err(|e| CasError::InvalidObservation(e.to_string()))?;
        cas.observation.validate()?;
        Ok(cas)
    }
}
