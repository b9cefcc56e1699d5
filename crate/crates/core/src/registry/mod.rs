//! Perception annotators: declarative descriptors, their implementations and
//! the registry that mirrors every descriptor into the knowledge base.

mod experts;
pub mod render;
pub mod scene;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cas::{Cas, CasError};
use crate::ontology::{KnowledgeBase, OntologyError, RobotProfile, TBox, TypeSymbol, Value};

pub(crate) use experts::annotators::pose_of;
pub(crate) use experts::classification;
pub use experts::{shipped_descriptors, CONTINUOUS_BASE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComponentKind {
    /// Creates object hypotheses (and may annotate them).
    HypothesisGenerator,
    /// Only annotates existing hypotheses or the scene.
    Annotator,
}

impl ComponentKind {
    pub fn ontology_parent(self) -> &'static str {
        match self {
            ComponentKind::HypothesisGenerator => "HypothesisGeneratorComponent",
            ComponentKind::Annotator => "AnnotationComponent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorDescriptor {
    pub name: String,
    pub kind: ComponentKind,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub capabilities: Vec<String>,
    /// Symbolic values the annotator can emit, when it is restricted.
    pub output_domain: Option<Vec<String>>,
    pub cost_hint: f64,
    pub continuous_eligible: bool,
    pub task_specific: bool,
    pub experimental: bool,
    /// Tunable parameters and their defaults.
    pub params: BTreeMap<String, f64>,
}

fn owned(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl AnnotatorDescriptor {
    pub fn new(name: &str, kind: ComponentKind) -> Self {
        AnnotatorDescriptor {
            name: name.to_string(),
            kind,
            inputs: Vec::new(),
            outputs: Vec::new(),
            capabilities: Vec::new(),
            output_domain: None,
            cost_hint: match kind {
                ComponentKind::HypothesisGenerator => 1.0,
                ComponentKind::Annotator => 0.5,
            },
            continuous_eligible: false,
            task_specific: false,
            experimental: false,
            params: BTreeMap::new(),
        }
    }

    pub fn inputs(mut self, types: &[&str]) -> Self {
        self.inputs = owned(types);
        self
    }

    pub fn outputs(mut self, types: &[&str]) -> Self {
        self.outputs = owned(types);
        self
    }

    pub fn capabilities(mut self, caps: &[&str]) -> Self {
        self.capabilities = owned(caps);
        self
    }

    pub fn domain<S: AsRef<str>>(mut self, values: &[S]) -> Self {
        self.output_domain = Some(values.iter().map(|s| s.as_ref().to_string()).collect());
        self
    }

    pub fn continuous(mut self) -> Self {
        self.continuous_eligible = true;
        self
    }

    pub fn task_specific(mut self) -> Self {
        self.task_specific = true;
        self.cost_hint = 2.0;
        self
    }

    pub fn experimental(mut self) -> Self {
        self.experimental = true;
        self
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    /// Capabilities of this annotator the robot lacks.
    pub fn missing_capabilities(&self, robot: &RobotProfile) -> Vec<&str> {
        self.capabilities
            .iter()
            .filter(|c| !robot.capabilities.contains(*c))
            .map(String::as_str)
            .collect()
    }

    pub fn feasible_on(&self, robot: &RobotProfile) -> bool {
        self.missing_capabilities(robot).is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegistryError {
    #[error("an annotator or type named `{0}` already exists")]
    DuplicateName(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("unknown annotator `{0}`")]
    UnknownAnnotator(String),
    #[error("dependency cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("invalid descriptor `{name}`: {reason}")]
    InvalidDescriptor { name: String, reason: String },
    #[error("`{annotator}` requires `{missing}` which is not yet in the CAS")]
    PreconditionUnmet { annotator: String, missing: String },
    #[error("`{annotator}` has no parameter `{param}`")]
    UnknownParameter { annotator: String, param: String },
    #[error("`{annotator}` failed: {reason}")]
    Failed { annotator: String, reason: String },
    #[error(transparent)]
    Cas(#[from] CasError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
}

/// What an annotator sees besides the CAS.
#[derive(Debug, Clone, Copy)]
pub struct Context<'a> {
    pub tbox: &'a TBox,
    pub kb: &'a KnowledgeBase,
    pub params: &'a BTreeMap<String, f64>,
    pub seed: u64,
}

impl Context<'_> {
    pub fn param(&self, key: &str) -> f64 {
        self.params.get(key).copied().unwrap_or(0.0)
    }
}

pub type Process = Arc<dyn Fn(&mut Cas, &Context<'_>) -> Result<(), RegistryError> + Send + Sync>;

#[derive(Clone)]
struct Entry {
    descriptor: AnnotatorDescriptor,
    process: Process,
}

#[derive(Clone)]
pub struct Registry {
    kb: KnowledgeBase,
    entries: Vec<Entry>,
    overrides: BTreeMap<String, BTreeMap<String, f64>>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("annotators", &self.names().collect::<Vec<_>>())
            .finish()
    }
}

impl Registry {
    pub fn new(kb: KnowledgeBase) -> Self {
        Registry {
            kb,
            entries: Vec::new(),
            overrides: BTreeMap::new(),
        }
    }

    /// Registry holding the full annotator suite, in registration order.
    pub fn shipped(kb: KnowledgeBase) -> Result<Self, RegistryError> {
        let mut reg = Registry::new(kb);
        for (descriptor, process) in shipped_descriptors(&reg.kb) {
            reg.register(descriptor, process)?;
        }
        Ok(reg)
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn tbox(&self) -> &TBox {
        &self.kb.tbox
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.descriptor.name.as_str())
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &AnnotatorDescriptor> {
        self.entries.iter().map(|e| &e.descriptor)
    }

    pub fn descriptor(&self, name: &str) -> Option<&AnnotatorDescriptor> {
        self.entries
            .iter()
            .find(|e| e.descriptor.name == name)
            .map(|e| &e.descriptor)
    }

    /// Registration index, used as the deterministic tie-break.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.descriptor.name == name)
    }

    /// Whether a value of type `produced` satisfies a requirement for `required`.
    pub fn satisfies(&self, produced: &str, required: &str) -> bool {
        self.kb.tbox.subsumed(produced, required)
    }

    fn check(&self, d: &AnnotatorDescriptor) -> Result<(), RegistryError> {
        let tbox = &self.kb.tbox;
        if self.descriptor(&d.name).is_some() || tbox.contains_type(&d.name) {
            return Err(RegistryError::DuplicateName(d.name.clone()));
        }
        let invalid = |reason: &str| RegistryError::InvalidDescriptor {
            name: d.name.clone(),
            reason: reason.to_string(),
        };
        if d.outputs.is_empty() {
            return Err(invalid("no outputs"));
        }
        for t in d.inputs.iter().chain(&d.outputs) {
            if !tbox.subsumed(t, "FeatureStructure") {
                return Err(RegistryError::UnknownType(t.clone()));
            }
        }
        for c in &d.capabilities {
            if !tbox.subsumed(c, "Capability") {
                return Err(RegistryError::UnknownType(c.clone()));
            }
        }
        if d.output_domain.is_some()
            && !d
                .outputs
                .iter()
                .any(|o| tbox.subsumed(o, "SemanticAnnotation"))
        {
            return Err(invalid("outputDomain given without a symbolic output"));
        }
        if !(d.cost_hint >= 0.0) {
            return Err(invalid("negative cost hint"));
        }
        Ok(())
    }

    /// Annotators whose outputs feed an input of `d` (self-loops ignored).
    fn feeds(&self, from: &AnnotatorDescriptor, to: &AnnotatorDescriptor) -> bool {
        from.name != to.name
            && from
                .outputs
                .iter()
                .any(|o| to.inputs.iter().any(|i| self.satisfies(o, i)))
    }

    fn find_cycle(&self, all: &[&AnnotatorDescriptor]) -> Option<Vec<String>> {
        // 0 unvisited, 1 on stack, 2 done
        let n = all.len();
        let mut state = vec![0u8; n];
        let mut stack: Vec<usize> = Vec::new();
        fn visit(
            reg: &Registry,
            all: &[&AnnotatorDescriptor],
            v: usize,
            state: &mut [u8],
            stack: &mut Vec<usize>,
        ) -> Option<Vec<String>> {
            state[v] = 1;
            stack.push(v);
            for w in 0..all.len() {
                if !reg.feeds(all[v], all[w]) {
                    continue;
                }
                if state[w] == 1 {
                    let start = stack.iter().position(|&s| s == w).unwrap_or(0);
                    let mut cycle: Vec<String> = stack[start..]
                        .iter()
                        .map(|&i| all[i].name.clone())
                        .collect();
                    cycle.push(all[w].name.clone());
                    return Some(cycle);
                }
                if state[w] == 0 {
                    if let Some(c) = visit(reg, all, w, state, stack) {
                        return Some(c);
                    }
                }
            }
            stack.pop();
            state[v] = 2;
            None
        }
        for v in 0..n {
            if state[v] == 0 {
                if let Some(c) = visit(self, all, v, &mut state, &mut stack) {
                    return Some(c);
                }
            }
        }
        None
    }

    /// Validates `descriptor`, mirrors it as an ontology class and makes it
    /// available to the planner.
    pub fn register(
        &mut self,
        descriptor: AnnotatorDescriptor,
        process: Process,
    ) -> Result<(), RegistryError> {
        self.check(&descriptor)?;
        let mut all: Vec<&AnnotatorDescriptor> = self.descriptors().collect();
        all.push(&descriptor);
        if let Some(cycle) = self.find_cycle(&all) {
            return Err(RegistryError::Cycle(cycle));
        }
        let mut symbol = TypeSymbol::new(
            descriptor.name.clone(),
            &[descriptor.kind.ontology_parent()],
        );
        for i in &descriptor.inputs {
            symbol = symbol.with("perceptualInputRequired", Value::symbol(i));
        }
        for o in &descriptor.outputs {
            symbol = symbol.with("perceptualOutput", Value::symbol(o));
        }
        for c in &descriptor.capabilities {
            symbol = symbol.with("dependsOnCapability", Value::symbol(c));
        }
        for v in descriptor.output_domain.iter().flatten() {
            symbol = symbol.with("outputDomain", Value::symbol(v));
        }
        self.kb.tbox.declare_type(symbol)?;
        self.entries.push(Entry {
            descriptor,
            process,
        });
        Ok(())
    }

    /// Overrides a tunable parameter of a registered annotator.
    pub fn set_param(
        &mut self,
        annotator: &str,
        param: &str,
        value: f64,
    ) -> Result<(), RegistryError> {
        let d = self
            .descriptor(annotator)
            .ok_or_else(|| RegistryError::UnknownAnnotator(annotator.to_string()))?;
        if !d.params.contains_key(param) {
            return Err(RegistryError::UnknownParameter {
                annotator: annotator.to_string(),
                param: param.to_string(),
            });
        }
        self.overrides
            .entry(annotator.to_string())
            .or_default()
            .insert(param.to_string(), value);
        Ok(())
    }

    pub fn params(&self, annotator: &str) -> BTreeMap<String, f64> {
        let mut p = self
            .descriptor(annotator)
            .map(|d| d.params.clone())
            .unwrap_or_default();
        if let Some(o) = self.overrides.get(annotator) {
            p.extend(o.iter().map(|(k, v)| (k.clone(), *v)));
        }
        p
    }

    /// Runs one annotator. Its inputs must already be asserted; its outputs
    /// are asserted afterwards even if no hypothesis was touched.
    pub fn run_annotator(&self, name: &str, mut cas: Cas, seed: u64) -> Result<Cas, RegistryError> {
        let entry = self
            .entries
            .iter()
            .find(|e| e.descriptor.name == name)
            .ok_or_else(|| RegistryError::UnknownAnnotator(name.to_string()))?;
        for input in &entry.descriptor.inputs {
            if !cas.has_type(&self.kb.tbox, input) {
                return Err(RegistryError::PreconditionUnmet {
                    annotator: name.to_string(),
                    missing: input.clone(),
                });
            }
        }
        let params = self.params(name);
        let ctx = Context {
            tbox: &self.kb.tbox,
            kb: &self.kb,
            params: &params,
            seed,
        };
        (entry.process)(&mut cas, &ctx)?;
        for o in &entry.descriptor.outputs {
            cas.mark_produced(o);
        }
        Ok(cas)
    }

    /// Types producible on `robot` from the base types by any sequence of
    /// registered annotators.
    pub fn producible(&self, robot: &RobotProfile, base: &[&str]) -> BTreeSet<String> {
        let mut have: BTreeSet<String> = base.iter().map(|s| s.to_string()).collect();
        loop {
            let mut grew = false;
            for d in self.descriptors().filter(|d| d.feasible_on(robot)) {
                let ready = d
                    .inputs
                    .iter()
                    .all(|i| have.iter().any(|h| self.satisfies(h, i)));
                if ready {
                    for o in &d.outputs {
                        grew |= have.insert(o.clone());
                    }
                }
            }
            if !grew {
                return have;
            }
        }
    }
}

/// A process that does nothing; useful for descriptor-only registries.
pub fn noop() -> Process {
    Arc::new(|_, _| Ok(()))
}
