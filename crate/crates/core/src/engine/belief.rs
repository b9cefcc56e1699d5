//! Persistent world objects accumulated across perception cycles.

use serde::{Deserialize, Serialize};

use crate::cas::Annotation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub tick: u64,
    pub annotation: Annotation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefObject {
    pub id: String,
    /// Latest classification label, if any cycle classified the object.
    pub class: Option<String>,
    /// Most recent annotation of each type, in first-seen type order.
    pub annotations: Vec<Annotation>,
    pub history: Vec<HistoryEntry>,
    #[serde(rename = "firstSeen")]
    pub first_seen: u64,
    #[serde(rename = "lastSeen")]
    pub last_seen: u64,
    /// `tick/hypothesis` for every hypothesis merged into this object.
    pub lineage: Vec<String>,
    /// Camera-frame position in millimeters at the last sighting.
    pub position_mm: [f64; 3],
}

impl BeliefObject {
    pub fn latest(&self, type_name: &str) -> Option<&Annotation> {
        self.annotations.iter().find(|a| a.type_name == type_name)
    }

    pub fn has_type(&self, type_name: &str) -> bool {
        self.latest(type_name).is_some()
    }

    /// Stores `annotation` as the latest of its type and records it.
    pub fn absorb(&mut self, tick: u64, annotation: Annotation) {
        if annotation.type_name == "ClassificationAnnotation" {
            if let Some(label) = annotation.symbol("classLabel") {
                self.class = Some(label.to_string());
            }
        }
        match self
            .annotations
            .iter_mut()
            .find(|a| a.type_name == annotation.type_name)
        {
            Some(slot) => *slot = annotation.clone(),
            None => self.annotations.push(annotation.clone()),
        }
        self.history.push(HistoryEntry { tick, annotation });
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub objects: Vec<BeliefObject>,
    #[serde(rename = "nextId")]
    next_id: u64,
}

/// Shape of the belief dump: objects with their latest annotations only.
#[derive(Serialize)]
struct Dump<'a> {
    objects: Vec<DumpObject<'a>>,
}

#[derive(Serialize)]
struct DumpObject<'a> {
    id: &'a str,
    class: Option<&'a str>,
    annotations: Vec<&'a Annotation>,
    #[serde(rename = "firstSeen")]
    first_seen: u64,
    #[serde(rename = "lastSeen")]
    last_seen: u64,
}

impl BeliefState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn object(&self, id: &str) -> Option<&BeliefObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn object_mut(&mut self, id: &str) -> Option<&mut BeliefObject> {
        self.objects.iter_mut().find(|o| o.id == id)
    }

    pub fn ids(&self) -> Vec<String> {
        self.objects.iter().map(|o| o.id.clone()).collect()
    }

    /// Creates an object with a fresh id. Ids are never reused.
    pub fn create(&mut self, tick: u64, position_mm: [f64; 3]) -> &mut BeliefObject {
        self.next_id += 1;
        self.objects.push(BeliefObject {
            id: format!("obj-{}", self.next_id),
            class: None,
            annotations: Vec::new(),
            history: Vec::new(),
            first_seen: tick,
            last_seen: tick,
            lineage: Vec::new(),
            position_mm,
        });
        self.objects.last_mut().expect("just pushed")
    }

    /// `{objects: [{id, class, annotations, firstSeen, lastSeen}]}`.
    pub fn dump(&self) -> String {
        let dump = Dump {
            objects: self
                .objects
                .iter()
                .map(|o| DumpObject {
                    id: &o.id,
                    class: o.class.as_deref(),
                    annotations: o.annotations.iter().collect(),
                    first_seen: o.first_seen,
                    last_seen: o.last_seen,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&dump).expect("belief state serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::Value;

    #[test]
    fn ids_are_never_reused() {
        let mut b = BeliefState::new();
        b.create(0, [0.0; 3]);
        b.create(0, [0.0; 3]);
        b.objects.remove(0);
        assert_eq!(b.create(1, [0.0; 3]).id, "obj-3");
    }

    #[test]
    fn absorb_keeps_the_latest_per_type() {
        let mut b = BeliefState::new();
        let o = b.create(0, [0.0; 3]);
        let cls = |l: &str| {
            Annotation::new("ClassificationAnnotation").with("classLabel", Value::symbol(l))
        };
        o.absorb(0, cls("Cup"));
        o.absorb(1, cls("Pot"));
        assert_eq!(o.annotations.len(), 1);
        assert_eq!(o.class.as_deref(), Some("Pot"));
        assert_eq!(o.history.len(), 2);
        let dump = b.dump();
        assert!(dump.contains("\"firstSeen\": 0"));
        assert!(!dump.contains("history"));
    }
}
