//! Ontologies, scenes and episodes bundled with the crate.

use crate::ontology::{load_documents, KnowledgeBase, OntologyError, RobotProfile};

pub const KITCHEN_ONTOLOGY: &str = include_str!("../data/ontologies/kitchen.onto");
pub const CHEMLAB_ONTOLOGY: &str = include_str!("../data/ontologies/chemlab.onto");
pub const RETAIL_ONTOLOGY: &str = include_str!("../data/ontologies/retail.onto");
pub const PR2_ROBOT: &str = include_str!("../data/ontologies/robots/pr2.onto");
pub const NO_DEPTH_ROBOT: &str = include_str!("../data/ontologies/robots/no-depth.onto");

pub fn load(documents: &[&str]) -> Result<KnowledgeBase, OntologyError> {
    load_documents(documents)
}

fn bundled(doc: &str) -> KnowledgeBase {
    load_documents(&[doc, PR2_ROBOT, NO_DEPTH_ROBOT]).expect("bundled ontology is valid")
}

/// Kitchen ontology with both bundled robot profiles.
pub fn kitchen_kb() -> KnowledgeBase {
    bundled(KITCHEN_ONTOLOGY)
}

pub fn chemlab_kb() -> KnowledgeBase {
    bundled(CHEMLAB_ONTOLOGY)
}

pub fn retail_kb() -> KnowledgeBase {
    bundled(RETAIL_ONTOLOGY)
}

pub fn pr2() -> RobotProfile {
    kitchen_kb()
        .robot("PR2")
        .cloned()
        .expect("PR2 profile is bundled")
}

pub fn no_depth() -> RobotProfile {
    kitchen_kb()
        .robot("NoDepth")
        .cloned()
        .expect("NoDepth profile is bundled")
}
