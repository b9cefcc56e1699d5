//! Turns a query (or a set of attributes, or an object class) into an
//! ordered pipeline of annotators that the robot can actually run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cas::BASE_TYPES;
use crate::ontology::{RobotProfile, TBox};
use crate::query::{
    annotation_for, Kind, ObjectDescription, Query, QueryValue, NESTING_ATTRIBUTES,
};
use crate::registry::{AnnotatorDescriptor, Registry, CONTINUOUS_BASE};

/// Something the pipeline must produce: an annotation type, optionally with
/// a specific symbolic value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Need {
    /// Query attribute (or type name) the need stems from.
    pub attribute: String,
    pub type_name: String,
    pub value: Option<String>,
}

impl Need {
    pub fn of_type(type_name: &str) -> Self {
        Need {
            attribute: type_name.to_string(),
            type_name: type_name.to_string(),
            value: None,
        }
    }

    pub fn attribute(attribute: &str, type_name: &str, value: Option<&str>) -> Self {
        Need {
            attribute: attribute.to_string(),
            type_name: type_name.to_string(),
            value: value.map(str::to_string),
        }
    }
}

impl fmt::Display for Need {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.value {
            Some(v) => write!(f, "({} {v})", self.attribute),
            None if self.attribute == self.type_name => write!(f, "{}", self.type_name),
            None => write!(f, "({})", self.attribute),
        }
    }
}

/// Why an annotator is part of a pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reason {
    QueryAttribute(String),
    PreconditionOf(String),
    ContinuousBase,
    Rule(String),
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reason::QueryAttribute(a) => write!(f, "query-attribute {a}"),
            Reason::PreconditionOf(a) => write!(f, "precondition-of {a}"),
            Reason::ContinuousBase => f.write_str("continuous-base"),
            Reason::Rule(r) => write!(f, "rule {r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub annotator: String,
    pub reasons: Vec<Reason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
    pub needs: Vec<Need>,
    /// True when the continuous base already covered every need.
    pub continuous: bool,
}

impl Plan {
    pub fn names(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.annotator.as_str()).collect()
    }

    pub fn contains(&self, annotator: &str) -> bool {
        self.steps.iter().any(|s| s.annotator == annotator)
    }

    /// One line per step: `name  <- reason; reason`.
    pub fn explain(&self) -> String {
        let width = self
            .steps
            .iter()
            .map(|s| s.annotator.len())
            .max()
            .unwrap_or(0);
        self.steps
            .iter()
            .map(|s| {
                let why: Vec<String> = s.reasons.iter().map(Reason::to_string).collect();
                format!("{:width$}  <- {}\n", s.annotator, why.join("; "))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("no annotator can produce {0}")]
    NoProvider(String),
    #[error("`{annotator}` needs `{capability}`, which the robot lacks")]
    CapabilityMissing {
        annotator: String,
        capability: String,
    },
    #[error("`{0}` has no visual description")]
    NoDescription(String),
    #[error("unknown object class `{0}`")]
    UnknownObject(String),
    #[error("no planning rule applies: {0}")]
    RuleNotApplicable(String),
    #[error("unsupported request: {0}")]
    Unsupported(String),
    #[error("`{annotator}` runs before `{missing}` is available")]
    InvalidOrder { annotator: String, missing: String },
    #[error("unknown annotator `{0}`")]
    UnknownAnnotator(String),
}

/// Extra generators demanded by particular attribute values, because the
/// default depth clustering cannot see such objects.
pub const GENERATOR_RULES: [(&str, &str, &str); 2] = [
    ("shape", "flat", "RsImageSegment"),
    ("material", "transparent", "RsTransparentCluster"),
];

/// Annotation type produced for a query attribute, if it needs one.
fn attribute_type(attribute: &str) -> Option<&'static str> {
    if let Some((t, _)) = annotation_for(attribute) {
        return Some(t);
    }
    match attribute {
        "category" => Some("LocationAnnotation"),
        "material" => Some("RsCluster"),
        "count" => Some("CountAnnotation"),
        a if NESTING_ATTRIBUTES.contains(&a) => Some("LocationAnnotation"),
        _ => None,
    }
}

/// Needs for a bare attribute set, ignoring values.
pub fn needs_for_attributes<S: AsRef<str>>(attributes: &[S]) -> Vec<Need> {
    let mut out = Vec::new();
    for a in attributes {
        let a = a.as_ref();
        if let Some(t) = attribute_type(a) {
            let need = Need::attribute(a, t, None);
            if !out.contains(&need) {
                out.push(need);
            }
        }
    }
    out
}

fn push_value_need(tbox: &TBox, attribute: &str, value: Option<&str>, out: &mut Vec<Need>) {
    let Some(t) = attribute_type(attribute) else {
        return;
    };
    let symbolic = annotation_for(attribute).is_some()
        && !NESTING_ATTRIBUTES.contains(&attribute)
        && attribute != "location";
    let value = value.filter(|_| symbolic || attribute == "material");
    let value = value.map(|v| match attribute {
        "type" | "class" => tbox.resolve_alias(v).to_string(),
        _ => v.to_string(),
    });
    for (a, v, generated) in GENERATOR_RULES {
        if a == attribute && value.as_deref() == Some(v) {
            let need = Need::attribute(attribute, generated, None);
            if !out.contains(&need) {
                out.push(need);
            }
        }
    }
    if attribute == "material" {
        return;
    }
    let need = Need {
        attribute: attribute.to_string(),
        type_name: t.to_string(),
        value,
    };
    if !out.contains(&need) {
        out.push(need);
    }
}

/// Value-aware needs of an object description.
pub fn needs_for_description(
    tbox: &TBox,
    desc: &ObjectDescription,
) -> Result<Vec<Need>, PlanError> {
    if desc.kind == Kind::Scene {
        return Err(PlanError::Unsupported("scene descriptions".into()));
    }
    let mut out = Vec::new();
    for c in &desc.constraints {
        let value = match &c.value {
            QueryValue::Symbol(s) => Some(s.as_str()),
            _ => None,
        };
        push_value_need(tbox, &c.attribute, value, &mut out);
    }
    Ok(out)
}

pub fn needs_for_query(tbox: &TBox, query: &Query) -> Result<Vec<Need>, PlanError> {
    match query {
        Query::Detect(d) => needs_for_description(tbox, d),
        Query::Compound(c) => {
            let mut needs = needs_for_description(tbox, &c.inner)?;
            if c.verb == crate::query::Verb::Count {
                for n in needs_for_attributes(&["pose", "count"]) {
                    if !needs.contains(&n) {
                        needs.push(n);
                    }
                }
            }
            Ok(needs)
        }
        Query::Inspect { attributes, .. } => Ok(needs_for_attributes(attributes)),
    }
}

pub struct Planner<'a> {
    registry: &'a Registry,
    robot: &'a RobotProfile,
    producible: BTreeSet<String>,
}

impl<'a> Planner<'a> {
    pub fn new(registry: &'a Registry, robot: &'a RobotProfile) -> Self {
        Planner {
            registry,
            robot,
            producible: producible(registry, robot),
        }
    }

    fn tbox(&self) -> &TBox {
        self.registry.tbox()
    }

    fn descriptor(&self, index: usize) -> &'a AnnotatorDescriptor {
        self.registry
            .descriptors()
            .nth(index)
            .expect("index from this registry")
    }

    fn all(&self) -> impl Iterator<Item = (usize, &'a AnnotatorDescriptor)> {
        self.registry.descriptors().enumerate()
    }

    fn type_satisfied(&self, have: &BTreeSet<String>, required: &str) -> bool {
        have.iter().any(|h| self.registry.satisfies(h, required))
    }

    fn outputs_type(&self, d: &AnnotatorDescriptor, type_name: &str) -> bool {
        d.outputs
            .iter()
            .any(|o| self.registry.satisfies(o, type_name))
    }

    fn domain_matches(&self, d: &AnnotatorDescriptor, value: &str) -> bool {
        d.output_domain.as_ref().is_some_and(|dom| {
            dom.iter()
                .any(|v| v == value || self.tbox().subsumed(v, value))
        })
    }

    /// Whether `d` can fulfil `need`, ignoring the robot.
    fn provides(&self, d: &AnnotatorDescriptor, need: &Need) -> bool {
        if d.experimental || !self.outputs_type(d, &need.type_name) {
            return false;
        }
        match &need.value {
            Some(v) if d.output_domain.is_some() => self.domain_matches(d, v),
            _ => true,
        }
    }

    fn viable(&self, d: &AnnotatorDescriptor) -> bool {
        d.feasible_on(self.robot)
            && d.inputs
                .iter()
                .all(|i| self.type_satisfied(&self.producible, i))
    }

    /// Candidate providers of `need`, after the task-specific restriction:
    /// task-specific annotators qualify for value-matched needs, or when no
    /// general annotator is viable.
    fn candidates(&self, need: &Need) -> Vec<usize> {
        let all: Vec<usize> = self
            .all()
            .filter(|(_, d)| self.provides(d, need))
            .map(|(i, _)| i)
            .collect();
        let general_viable = all
            .iter()
            .any(|&i| !self.descriptor(i).task_specific && self.viable(self.descriptor(i)));
        all.into_iter()
            .filter(|&i| {
                let d = self.descriptor(i);
                !d.task_specific
                    || !general_viable
                    || need
                        .value
                        .as_deref()
                        .is_some_and(|v| self.domain_matches(d, v))
            })
            .collect()
    }

    fn explain_failure(&self, type_name: &str, depth: usize) -> PlanError {
        let providers: Vec<&AnnotatorDescriptor> = self
            .all()
            .map(|(_, d)| d)
            .filter(|d| !d.experimental && self.outputs_type(d, type_name))
            .collect();
        if let Some(d) = providers.iter().find(|d| !d.feasible_on(self.robot)) {
            return PlanError::CapabilityMissing {
                annotator: d.name.clone(),
                capability: d.missing_capabilities(self.robot)[0].to_string(),
            };
        }
        if depth < self.registry.len() {
            for d in &providers {
                if let Some(i) = d
                    .inputs
                    .iter()
                    .find(|i| !self.type_satisfied(&self.producible, i))
                {
                    return self.explain_failure(i, depth + 1);
                }
            }
        }
        PlanError::NoProvider(type_name.to_string())
    }

    fn failure_for(&self, need: &Need, candidates: &[usize]) -> PlanError {
        if candidates.is_empty() {
            return PlanError::NoProvider(need.to_string());
        }
        if let Some(&i) = candidates
            .iter()
            .find(|&&i| !self.descriptor(i).feasible_on(self.robot))
        {
            let d = self.descriptor(i);
            return PlanError::CapabilityMissing {
                annotator: d.name.clone(),
                capability: d.missing_capabilities(self.robot)[0].to_string(),
            };
        }
        let d = self.descriptor(candidates[0]);
        match d
            .inputs
            .iter()
            .find(|i| !self.type_satisfied(&self.producible, i))
        {
            Some(input) => match self.explain_failure(input, 0) {
                PlanError::NoProvider(_) => PlanError::NoProvider(need.to_string()),
                other => other,
            },
            None => PlanError::NoProvider(need.to_string()),
        }
    }

    fn outputs_of(&self, selected: &BTreeSet<usize>) -> BTreeSet<String> {
        let mut have: BTreeSet<String> = BASE_TYPES.iter().map(|s| s.to_string()).collect();
        for &i in selected {
            have.extend(self.descriptor(i).outputs.iter().cloned());
        }
        have
    }

    /// Best viable provider for an unmet precondition `type_name`.
    fn precondition_provider(&self, type_name: &str, selected: &BTreeSet<usize>) -> Option<usize> {
        let need = Need::of_type(type_name);
        let viable: Vec<usize> = self
            .candidates(&need)
            .into_iter()
            .filter(|&i| self.viable(self.descriptor(i)))
            .collect();
        self.best(viable, selected)
    }

    /// Annotators `index` transitively pulls in on top of `selected`.
    fn closure(&self, index: usize, selected: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut acc = BTreeSet::from([index]);
        let mut stack = vec![index];
        while let Some(i) = stack.pop() {
            let mut union = selected.clone();
            union.extend(acc.iter().copied());
            let have = self.outputs_of(&union);
            for input in &self.descriptor(i).inputs {
                if self.type_satisfied(&have, input) {
                    continue;
                }
                if let Some(p) = self.precondition_provider(input, &union) {
                    if acc.insert(p) {
                        stack.push(p);
                    }
                }
            }
        }
        acc
    }

    /// Tie-break: fewer transitively unmet preconditions, lower cost, name.
    fn best(&self, candidates: Vec<usize>, selected: &BTreeSet<usize>) -> Option<usize> {
        candidates
            .into_iter()
            .map(|i| {
                let extra = self.closure(i, selected).len() - 1;
                (
                    extra,
                    self.descriptor(i).cost_hint,
                    self.descriptor(i).name.clone(),
                    i,
                )
            })
            .min_by(|a, b| {
                a.0.cmp(&b.0)
                    .then(a.1.total_cmp(&b.1))
                    .then_with(|| a.2.cmp(&b.2))
            })
            .map(|(_, _, _, i)| i)
    }

    fn covered_by(&self, selected: &BTreeSet<usize>, need: &Need) -> Option<usize> {
        selected
            .iter()
            .copied()
            .find(|&i| self.provides(self.descriptor(i), need))
    }

    /// Core planning: select providers for every need, close over their
    /// preconditions and order the result.
    pub fn plan_needs(&self, needs: &[Need]) -> Result<Plan, PlanError> {
        let mut ordered: Vec<&Need> = needs.iter().filter(|n| n.value.is_some()).collect();
        ordered.extend(needs.iter().filter(|n| n.value.is_none()));
        let mut selected: BTreeSet<usize> = BTreeSet::new();
        let mut reasons: BTreeMap<usize, Vec<Reason>> = BTreeMap::new();
        for need in ordered {
            let reason = Reason::QueryAttribute(need.to_string());
            if let Some(i) = self.covered_by(&selected, need) {
                reasons.entry(i).or_default().push(reason);
                continue;
            }
            let candidates = self.candidates(need);
            let viable: Vec<usize> = candidates
                .iter()
                .copied()
                .filter(|&i| self.viable(self.descriptor(i)))
                .collect();
            let Some(chosen) = self.best(viable, &selected) else {
                return Err(self.failure_for(need, &candidates));
            };
            let closure = self.closure(chosen, &selected);
            reasons.entry(chosen).or_default().push(reason);
            for &i in &closure {
                if i != chosen && !selected.contains(&i) {
                    let user = closure
                        .iter()
                        .copied()
                        .filter(|&u| u != i)
                        .find(|&u| {
                            self.descriptor(u)
                                .inputs
                                .iter()
                                .any(|inp| self.outputs_type(self.descriptor(i), inp))
                        })
                        .unwrap_or(chosen);
                    reasons
                        .entry(i)
                        .or_default()
                        .push(Reason::PreconditionOf(self.descriptor(user).name.clone()));
                }
            }
            selected.extend(closure);
        }
        let order = self.topological(&selected)?;
        Ok(Plan {
            steps: order
                .into_iter()
                .map(|i| PlanStep {
                    annotator: self.descriptor(i).name.clone(),
                    reasons: reasons.remove(&i).unwrap_or_default(),
                })
                .collect(),
            needs: needs.to_vec(),
            continuous: false,
        })
    }

    /// Kahn's algorithm, always taking the ready annotator registered first.
    fn topological(&self, selected: &BTreeSet<usize>) -> Result<Vec<usize>, PlanError> {
        let mut remaining: BTreeSet<usize> = selected.clone();
        let mut have: BTreeSet<String> = BASE_TYPES.iter().map(|s| s.to_string()).collect();
        let mut out = Vec::new();
        while !remaining.is_empty() {
            let ready = remaining.iter().copied().find(|&i| {
                self.descriptor(i)
                    .inputs
                    .iter()
                    .all(|inp| self.type_satisfied(&have, inp))
            });
            let Some(i) = ready else {
                let i = *remaining.iter().next().expect("non-empty");
                let d = self.descriptor(i);
                let missing = d
                    .inputs
                    .iter()
                    .find(|inp| !self.type_satisfied(&have, inp))
                    .cloned()
                    .unwrap_or_default();
                return Err(PlanError::InvalidOrder {
                    annotator: d.name.clone(),
                    missing,
                });
            };
            remaining.remove(&i);
            have.extend(self.descriptor(i).outputs.iter().cloned());
            out.push(i);
        }
        Ok(out)
    }

    /// The continuous base as a plan.
    pub fn continuous_base(&self) -> Result<Plan, PlanError> {
        let mut steps = Vec::new();
        for name in CONTINUOUS_BASE {
            let d = self
                .registry
                .descriptor(name)
                .ok_or_else(|| PlanError::UnknownAnnotator(name.to_string()))?;
            if let Some(cap) = d.missing_capabilities(self.robot).first() {
                return Err(PlanError::CapabilityMissing {
                    annotator: name.to_string(),
                    capability: cap.to_string(),
                });
            }
            steps.push(PlanStep {
                annotator: name.to_string(),
                reasons: vec![Reason::ContinuousBase],
            });
        }
        let plan = Plan {
            steps,
            needs: Vec::new(),
            continuous: true,
        };
        validate_pipeline(self.registry, &plan.names(), self.robot)?;
        Ok(plan)
    }

    /// Keeps the continuous base when it already answers every need,
    /// otherwise replaces it with a pipeline planned for the needs.
    pub fn plan_with_base(&self, needs: &[Need]) -> Result<Plan, PlanError> {
        if let Ok(mut base) = self.continuous_base() {
            let indices: BTreeSet<usize> = CONTINUOUS_BASE
                .iter()
                .filter_map(|n| self.registry.index_of(n))
                .collect();
            if needs.iter().all(|n| self.covered_by(&indices, n).is_some()) {
                base.needs = needs.to_vec();
                return Ok(base);
            }
        }
        self.plan_needs(needs)
    }

    pub fn plan_for_attributes<S: AsRef<str>>(&self, attributes: &[S]) -> Result<Plan, PlanError> {
        self.plan_with_base(&needs_for_attributes(attributes))
    }

    pub fn plan_for_query(&self, query: &Query) -> Result<Plan, PlanError> {
        let needs = needs_for_query(self.tbox(), query)?;
        if let Query::Compound(c) = query {
            if c.verb == crate::query::Verb::Count {
                return self.plan_needs(&needs);
            }
        }
        self.plan_with_base(&needs)
    }

    /// Pipeline able to perceive every visual property of `class`.
    pub fn plan_for_object(&self, class: &str) -> Result<Plan, PlanError> {
        let class = self.tbox().resolve_alias(class);
        if !self.tbox().contains_type(class) {
            return Err(PlanError::UnknownObject(class.to_string()));
        }
        let props = self
            .tbox()
            .visual_properties_of(class)
            .map_err(|_| PlanError::UnknownObject(class.to_string()))?;
        if props.is_empty() {
            return Err(PlanError::NoDescription(class.to_string()));
        }
        let mut needs = Vec::new();
        for (attr, value) in &props {
            push_value_need(self.tbox(), attr, Some(value), &mut needs);
        }
        if needs.is_empty() {
            return Err(PlanError::NoDescription(class.to_string()));
        }
        self.plan_needs(&needs)
    }

    /// One plan (or failure) per strict subclass of `class`.
    pub fn plan_for_subclasses(
        &self,
        class: &str,
    ) -> Result<BTreeMap<String, Result<Plan, PlanError>>, PlanError> {
        let class = self.tbox().resolve_alias(class);
        let subs = self
            .tbox()
            .subclasses_of(class)
            .map_err(|_| PlanError::UnknownObject(class.to_string()))?;
        Ok(subs
            .into_iter()
            .filter(|s| *s != class)
            .map(|s| (s.to_string(), self.plan_for_object(s)))
            .collect())
    }

    /// Plans an `inspect` of an object already known to be a `class`.
    /// Volume needs a round container; parts need a classification.
    pub fn plan_inspection<S: AsRef<str>>(
        &self,
        class: Option<&str>,
        attributes: &[S],
    ) -> Result<Plan, PlanError> {
        let mut rules = Vec::new();
        for a in attributes.iter().map(AsRef::as_ref) {
            match a {
                "volume" | "capacity" => {
                    let Some(c) = class else {
                        return Err(PlanError::RuleNotApplicable(format!(
                            "{a} of an unclassified object"
                        )));
                    };
                    let round = self
                        .tbox()
                        .visual_properties_of(c)
                        .unwrap_or_default()
                        .iter()
                        .any(|(k, v)| k == "shape" && v == "round");
                    if !self.tbox().subsumed(c, "Container") || !round {
                        return Err(PlanError::RuleNotApplicable(format!(
                            "{a} needs a round container, `{c}` is not one"
                        )));
                    }
                    rules.push(("SacModelAnnotator", "detect-volume"));
                }
                "obj-part" => rules.push(("PartSegmenter", "object-parts")),
                _ => {}
            }
        }
        let mut plan = self.plan_needs(&needs_for_attributes(attributes))?;
        for (name, rule) in rules {
            if let Some(step) = plan.steps.iter_mut().find(|s| s.annotator == name) {
                step.reasons.push(Reason::Rule(rule.to_string()));
            }
        }
        Ok(plan)
    }

    /// `plan` followed by every further general annotator that its outputs
    /// make runnable.
    pub fn plan_with_dependents(&self, plan: &Plan) -> Result<Plan, PlanError> {
        let mut selected: BTreeSet<usize> = plan
            .steps
            .iter()
            .map(|s| {
                self.registry
                    .index_of(&s.annotator)
                    .ok_or_else(|| PlanError::UnknownAnnotator(s.annotator.clone()))
            })
            .collect::<Result<_, _>>()?;
        let mut reasons: BTreeMap<usize, Vec<Reason>> = plan
            .steps
            .iter()
            .filter_map(|s| {
                self.registry
                    .index_of(&s.annotator)
                    .map(|i| (i, s.reasons.clone()))
            })
            .collect();
        loop {
            let have = self.outputs_of(&selected);
            let next = self.all().find(|(i, d)| {
                !selected.contains(i)
                    && !d.task_specific
                    && !d.experimental
                    && d.feasible_on(self.robot)
                    && !d.inputs.is_empty()
                    && d.inputs.iter().all(|inp| self.type_satisfied(&have, inp))
                    && d.inputs
                        .iter()
                        .any(|inp| !BASE_TYPES.contains(&inp.as_str()))
            });
            let Some((i, d)) = next else { break };
            let user = d
                .inputs
                .iter()
                .find_map(|inp| {
                    selected
                        .iter()
                        .find(|&&s| self.outputs_type(self.descriptor(s), inp))
                        .map(|&s| self.descriptor(s).name.clone())
                })
                .unwrap_or_default();
            reasons
                .entry(i)
                .or_default()
                .push(Reason::Rule(format!("dependent-of {user}")));
            selected.insert(i);
        }
        let order = self.topological(&selected)?;
        Ok(Plan {
            steps: order
                .into_iter()
                .map(|i| PlanStep {
                    annotator: self.descriptor(i).name.clone(),
                    reasons: reasons.remove(&i).unwrap_or_default(),
                })
                .collect(),
            needs: plan.needs.clone(),
            continuous: false,
        })
    }
}

/// Types reachable from the base types with non-experimental annotators
/// the robot supports.
fn producible(registry: &Registry, robot: &RobotProfile) -> BTreeSet<String> {
    let mut have: BTreeSet<String> = BASE_TYPES.iter().map(|s| s.to_string()).collect();
    loop {
        let before = have.len();
        for d in registry
            .descriptors()
            .filter(|d| !d.experimental && d.feasible_on(robot))
        {
            if d.inputs
                .iter()
                .all(|i| have.iter().any(|h| registry.satisfies(h, i)))
            {
                have.extend(d.outputs.iter().cloned());
            }
        }
        if have.len() == before {
            return have;
        }
    }
}

/// Every annotator of `plan` is registered and supported by `robot`.
pub fn feasible_on_robot(
    registry: &Registry,
    plan: &Plan,
    robot: &RobotProfile,
) -> Result<(), PlanError> {
    for step in &plan.steps {
        let d = registry
            .descriptor(&step.annotator)
            .ok_or_else(|| PlanError::UnknownAnnotator(step.annotator.clone()))?;
        if let Some(cap) = d.missing_capabilities(robot).first() {
            return Err(PlanError::CapabilityMissing {
                annotator: d.name.clone(),
                capability: cap.to_string(),
            });
        }
    }
    Ok(())
}

/// Checks that `names` can run in this order on `robot`.
pub fn validate_pipeline<S: AsRef<str>>(
    registry: &Registry,
    names: &[S],
    robot: &RobotProfile,
) -> Result<(), PlanError> {
    let mut have: BTreeSet<String> = BASE_TYPES.iter().map(|s| s.to_string()).collect();
    for name in names.iter().map(AsRef::as_ref) {
        let d = registry
            .descriptor(name)
            .ok_or_else(|| PlanError::UnknownAnnotator(name.to_string()))?;
        if let Some(cap) = d.missing_capabilities(robot).first() {
            return Err(PlanError::CapabilityMissing {
                annotator: name.to_string(),
                capability: cap.to_string(),
            });
        }
        if let Some(missing) = d
            .inputs
            .iter()
            .find(|i| !have.iter().any(|h| registry.satisfies(h, i)))
        {
            return Err(PlanError::InvalidOrder {
                annotator: name.to_string(),
                missing: missing.clone(),
            });
        }
        have.extend(d.outputs.iter().cloned());
    }
    Ok(())
}

#[cfg(test)]
mod tests;
