//! DL-lite knowledge representation: a typed class taxonomy with existential
//! property restrictions (TBox), individuals with concept and role assertions
//! (ABox), and the reasoning primitives the rest of the crate relies on.

mod loader;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::Pose;

pub use loader::{load_documents, load_ontology, BUILTIN_ONTOLOGY};

/// The distinguished root of the taxonomy.
pub const THING: &str = "Thing";

/// Property linking an object class to its visual appearance classes.
pub const HAS_VISUAL_PROPERTY: &str = "hasVisualProperty";
pub const VISUAL_ATTRIBUTE: &str = "visualAttribute";
pub const VISUAL_VALUE: &str = "visualValue";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OntologyError {
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("subsumption cycle: {}", cycle.join(" -> "))]
    Cycle { cycle: Vec<String> },
    #[error("unknown reference `{symbol}` at {line}:{column}")]
    UnknownReference {
        symbol: String,
        line: usize,
        column: usize,
    },
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("unknown property `{0}`")]
    UnknownProperty(String),
    #[error("duplicate declaration of `{0}`")]
    DuplicateName(String),
    #[error("unsatisfiable definition of `{name}`: {reason}")]
    Unsatisfiable { name: String, reason: String },
    #[error("type check failed for property `{property}`: {reason}")]
    TypeCheck { property: String, reason: String },
    #[error("`{individual}` has {count} value(s) for `{property}`, expected {expected}")]
    Cardinality {
        individual: String,
        property: String,
        count: usize,
        expected: String,
    },
}

pub type Result<T, E = OntologyError> = std::result::Result<T, E>;

/// A filler for a role: a symbol (type, individual or label) or a literal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Symbol(String),
    Real(f64),
    Integer(i64),
    Pose(Pose),
    Vector(Vec<f64>),
}

impl Value {
    pub fn symbol(s: impl Into<String>) -> Self {
        Value::Symbol(s.into())
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Value::Symbol(s) => Some(s),
            _ => None,
        }
    }

    /// Numeric view of reals and integers.
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(r) => Some(*r),
            Value::Integer(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn as_pose(&self) -> Option<&Pose> {
        match self {
            Value::Pose(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Value::Vector(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Symbol(s) => crate::sexpr::write_symbol(f, s),
            Value::Real(r) => write!(f, "{r}"),
            Value::Integer(i) => write!(f, "{i}"),
            Value::Pose(p) => write_numbers(f, &p.to_array()),
            Value::Vector(v) => write_numbers(f, v),
        }
    }
}

fn write_numbers(f: &mut fmt::Formatter<'_>, values: &[f64]) -> fmt::Result {
    f.write_str("(")?;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{v}")?;
    }
    f.write_str(")")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrimitiveKind {
    String,
    Real,
    Integer,
    Pose,
    Vector,
}

impl PrimitiveKind {
    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "string" => PrimitiveKind::String,
            "real" => PrimitiveKind::Real,
            "integer" => PrimitiveKind::Integer,
            "pose" => PrimitiveKind::Pose,
            "vector" => PrimitiveKind::Vector,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Range {
    Primitive(PrimitiveKind),
    Type(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Cardinality {
    pub min: Option<u32>,
    pub max: Option<u32>,
}

impl Cardinality {
    pub fn exact(n: u32) -> Self {
        Cardinality {
            min: Some(n),
            max: Some(n),
        }
    }

    pub fn admits(&self, count: usize) -> bool {
        self.min.is_none_or(|m| count >= m as usize)
            && self.max.is_none_or(|m| count <= m as usize)
    }

    pub fn is_unbounded(&self) -> bool {
        self.min.is_none() && self.max.is_none()
    }
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.min, self.max) {
            (Some(a), Some(b)) if a == b => write!(f, "exactly {a}"),
            (Some(a), Some(b)) => write!(f, "between {a} and {b}"),
            (Some(a), None) => write!(f, "at least {a}"),
            (None, Some(b)) => write!(f, "at most {b}"),
            (None, None) => f.write_str("any number"),
        }
    }
}

/// Existential restriction `∃property.value` attached to a class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Restriction {
    pub property: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeSymbol {
    pub name: String,
    pub parents: Vec<String>,
    pub restrictions: Vec<Restriction>,
}

impl TypeSymbol {
    pub fn new(name: impl Into<String>, parents: &[&str]) -> Self {
        TypeSymbol {
            name: name.into(),
            parents: parents.iter().map(|p| p.to_string()).collect(),
            restrictions: Vec::new(),
        }
    }

    pub fn with(mut self, property: &str, value: Value) -> Self {
        self.restrictions.push(Restriction {
            property: property.to_string(),
            value,
        });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyDefinition {
    pub name: String,
    pub domain: String,
    pub range: Range,
    pub cardinality: Cardinality,
}

/// Sensory abilities of a robot, gating which annotators may run on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotProfile {
    pub name: String,
    pub capabilities: BTreeSet<String>,
}

impl RobotProfile {
    pub fn new<I, S>(name: impl Into<String>, capabilities: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        RobotProfile {
            name: name.into(),
            capabilities: capabilities.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TBox {
    types: BTreeMap<String, TypeSymbol>,
    properties: BTreeMap<String, PropertyDefinition>,
    aliases: BTreeMap<String, String>,
    order: Vec<String>,
    /// Reflexive-transitive parent closure per type.
    closure: BTreeMap<String, BTreeSet<String>>,
}

impl TBox {
    pub fn contains_type(&self, name: &str) -> bool {
        self.types.contains_key(name)
    }

    pub fn type_symbol(&self, name: &str) -> Option<&TypeSymbol> {
        self.types.get(name)
    }

    pub fn property(&self, name: &str) -> Option<&PropertyDefinition> {
        self.properties.get(name)
    }

    /// Types in declaration order.
    pub fn types(&self) -> impl Iterator<Item = &TypeSymbol> {
        self.order.iter().filter_map(|n| self.types.get(n))
    }

    pub fn properties(&self) -> impl Iterator<Item = &PropertyDefinition> {
        self.properties.values()
    }

    pub fn aliases(&self) -> &BTreeMap<String, String> {
        &self.aliases
    }

    /// Maps colloquial names (`Food`) to declared types; unknown names pass through.
    pub fn resolve_alias<'a>(&'a self, name: &'a str) -> &'a str {
        self.aliases.get(name).map(String::as_str).unwrap_or(name)
    }

    fn require(&self, name: &str) -> Result<()> {
        if self.types.contains_key(name) {
            Ok(())
        } else {
            Err(OntologyError::UnknownType(name.to_string()))
        }
    }

    pub fn ancestors(&self, name: &str) -> Result<&BTreeSet<String>> {
        self.closure
            .get(name)
            .ok_or_else(|| OntologyError::UnknownType(name.to_string()))
    }

    pub fn is_subclass_of(&self, sub: &str, sup: &str) -> Result<bool> {
        self.require(sup)?;
        Ok(self.ancestors(sub)?.contains(sup))
    }

    /// Subsumption that treats undeclared names as unrelated instead of failing.
    pub fn subsumed(&self, sub: &str, sup: &str) -> bool {
        self.closure.get(sub).is_some_and(|a| a.contains(sup))
    }

    /// Strict subclasses in declaration order.
    pub fn subclasses_of(&self, name: &str) -> Result<Vec<&str>> {
        self.require(name)?;
        Ok(self
            .order
            .iter()
            .filter(|t| t.as_str() != name && self.subsumed(t, name))
            .map(String::as_str)
            .collect())
    }

    /// Restriction fillers for `property` on `class`: own restrictions first,
    /// then inherited ones breadth-first along declared parents.
    pub fn restrictions<'a>(&'a self, class: &str, property: &str) -> Result<Vec<&'a Value>> {
        self.require(class)?;
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([class.to_string()]);
        while let Some(name) = queue.pop_front() {
            if !seen.insert(name.clone()) {
                continue;
            }
            let Some(t) = self.types.get(&name) else {
                continue;
            };
            out.extend(
                t.restrictions
                    .iter()
                    .filter(|r| r.property == property)
                    .map(|r| &r.value),
            );
            queue.extend(t.parents.iter().cloned());
        }
        Ok(out)
    }

    fn first_text<'a>(&'a self, class: &str, property: &str) -> Option<&'a str> {
        self.restrictions(class, property)
            .ok()?
            .into_iter()
            .find_map(Value::as_symbol)
    }

    /// Attribute/value pairs derived from the `hasVisualProperty` restrictions
    /// of `class` (inherited ones included).
    pub fn visual_properties_of(&self, class: &str) -> Result<Vec<(String, String)>> {
        let mut out: Vec<(String, String)> = Vec::new();
        for filler in self.restrictions(class, HAS_VISUAL_PROPERTY)? {
            let Some(appearance) = filler.as_symbol() else {
                continue;
            };
            let Some(attribute) = self.first_text(appearance, VISUAL_ATTRIBUTE) else {
                continue;
            };
            let value = self
                .types
                .get(appearance)
                .and_then(|t| {
                    t.restrictions
                        .iter()
                        .find(|r| r.property == VISUAL_VALUE)
                        .and_then(|r| r.value.as_symbol())
                })
                .unwrap_or(appearance);
            let pair = (attribute.to_string(), value.to_string());
            if !out.contains(&pair) {
                out.push(pair);
            }
        }
        Ok(out)
    }

    /// Adds a type after load (used to mirror annotator descriptors).
    pub fn declare_type(&mut self, symbol: TypeSymbol) -> Result<()> {
        if self.types.contains_key(&symbol.name) {
            return Err(OntologyError::DuplicateName(symbol.name));
        }
        if symbol.parents.is_empty() {
            return Err(OntologyError::Unsatisfiable {
                name: symbol.name,
                reason: "a type needs at least one parent".into(),
            });
        }
        for p in &symbol.parents {
            self.require(p)?;
        }
        for r in &symbol.restrictions {
            let def = self
                .properties
                .get(&r.property)
                .ok_or_else(|| OntologyError::UnknownProperty(r.property.clone()))?;
            self.check_value(&def.range, &r.value, None)
                .map_err(|reason| OntologyError::TypeCheck {
                    property: r.property.clone(),
                    reason,
                })?;
        }
        let mut closure: BTreeSet<String> = BTreeSet::from([symbol.name.clone()]);
        for p in &symbol.parents {
            closure.extend(self.closure[p].iter().cloned());
        }
        self.closure.insert(symbol.name.clone(), closure);
        self.order.push(symbol.name.clone());
        self.types.insert(symbol.name.clone(), symbol);
        Ok(())
    }

    /// Checks that `value` conforms to `range`. Type ranges accept symbols
    /// naming a subsumed type or an individual of a subsumed type.
    pub fn check_value(
        &self,
        range: &Range,
        value: &Value,
        abox: Option<&ABox>,
    ) -> Result<(), String> {
        match (range, value) {
            (Range::Primitive(PrimitiveKind::String), Value::Symbol(_)) => Ok(()),
            (Range::Primitive(PrimitiveKind::Real), Value::Real(_) | Value::Integer(_)) => Ok(()),
            (Range::Primitive(PrimitiveKind::Integer), Value::Integer(_)) => Ok(()),
            (Range::Primitive(PrimitiveKind::Pose), Value::Pose(p)) => {
                if (p.quaternion_norm() - 1.0).abs() <= 1e-6 {
                    Ok(())
                } else {
                    Err("pose quaternion is not unit norm".into())
                }
            }
            (Range::Primitive(PrimitiveKind::Vector), Value::Vector(_)) => Ok(()),
            (Range::Type(t), Value::Symbol(s)) => {
                if self.subsumed(s, t) {
                    return Ok(());
                }
                if let Some(abox) = abox {
                    if abox.concepts_of(s).iter().any(|c| self.subsumed(c, t)) {
                        return Ok(());
                    }
                }
                Err(format!("`{s}` is not a `{t}`"))
            }
            (range, value) => Err(format!(
                "value `{value}` does not conform to range {range:?}"
            )),
        }
    }

    /// Converts a loosely typed literal into the representation `range` expects.
    pub fn coerce(range: &Range, value: Value) -> Value {
        match (range, value) {
            (Range::Primitive(PrimitiveKind::Integer), Value::Real(r)) if r.fract() == 0.0 => {
                Value::Integer(r as i64)
            }
            (Range::Primitive(PrimitiveKind::Pose), Value::Vector(v)) => match Pose::from_slice(&v)
            {
                Some(p) => Value::Pose(p),
                None => Value::Vector(v),
            },
            (_, v) => v,
        }
    }

    /// Type-checks the role assertions of one individual typed `type_name`:
    /// declared properties, domains, ranges and cardinalities.
    pub fn check_individual(
        &self,
        id: &str,
        type_name: &str,
        properties: &[(String, Value)],
    ) -> Result<()> {
        self.require(type_name)?;
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for (name, value) in properties {
            let def = self
                .properties
                .get(name)
                .ok_or_else(|| OntologyError::TypeCheck {
                    property: name.clone(),
                    reason: "undeclared property".into(),
                })?;
            if !self.subsumed(type_name, &def.domain) {
                return Err(OntologyError::TypeCheck {
                    property: name.clone(),
                    reason: format!(
                        "domain is `{}`, not applicable to `{type_name}`",
                        def.domain
                    ),
                });
            }
            self.check_value(&def.range, value, None)
                .map_err(|reason| OntologyError::TypeCheck {
                    property: name.clone(),
                    reason,
                })?;
            *counts.entry(name.as_str()).or_default() += 1;
        }
        for def in self.properties.values() {
            if def.cardinality.is_unbounded() || !self.subsumed(type_name, &def.domain) {
                continue;
            }
            let count = counts.get(def.name.as_str()).copied().unwrap_or(0);
            if !def.cardinality.admits(count) {
                return Err(OntologyError::Cardinality {
                    individual: id.to_string(),
                    property: def.name.clone(),
                    count,
                    expected: def.cardinality.to_string(),
                });
            }
        }
        Ok(())
    }

    /// All individuals with a concept assertion subsumed by `type_name`.
    pub fn individuals_of(&self, type_name: &str, abox: &ABox) -> Result<BTreeSet<String>> {
        self.require(type_name)?;
        Ok(abox
            .assertions
            .iter()
            .filter_map(|a| match a {
                Assertion::Concept { individual, class } if self.subsumed(class, type_name) => {
                    Some(individual.clone())
                }
                _ => None,
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Assertion {
    Concept {
        individual: String,
        class: String,
    },
    Role {
        property: String,
        subject: String,
        object: Value,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ABox {
    pub individuals: BTreeSet<String>,
    pub assertions: Vec<Assertion>,
}

impl ABox {
    pub fn assert_concept(&mut self, individual: &str, class: &str) {
        self.individuals.insert(individual.to_string());
        self.assertions.push(Assertion::Concept {
            individual: individual.to_string(),
            class: class.to_string(),
        });
    }

    pub fn assert_role(&mut self, property: &str, subject: &str, object: Value) {
        self.individuals.insert(subject.to_string());
        self.assertions.push(Assertion::Role {
            property: property.to_string(),
            subject: subject.to_string(),
            object,
        });
    }

    pub fn concepts_of(&self, individual: &str) -> Vec<&str> {
        self.assertions
            .iter()
            .filter_map(|a| match a {
                Assertion::Concept {
                    individual: i,
                    class,
                } if i == individual => Some(class.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn role_values(&self, individual: &str, property: &str) -> Vec<&Value> {
        self.assertions
            .iter()
            .filter_map(|a| match a {
                Assertion::Role {
                    property: p,
                    subject,
                    object,
                } if subject == individual && p == property => Some(object),
                _ => None,
            })
            .collect()
    }

    /// `(property, value)` pairs asserted on `individual`, in assertion order.
    pub fn properties_of(&self, individual: &str) -> Vec<(String, Value)> {
        self.assertions
            .iter()
            .filter_map(|a| match a {
                Assertion::Role {
                    property,
                    subject,
                    object,
                } if subject == individual => Some((property.clone(), object.clone())),
                _ => None,
            })
            .collect()
    }
}

/// A loaded TBox/ABox pair plus the robot profiles declared alongside it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub tbox: TBox,
    pub abox: ABox,
    pub robots: BTreeMap<String, RobotProfile>,
}

impl KnowledgeBase {
    /// The built-in taxonomy only.
    pub fn builtin() -> Self {
        load_documents(&[]).expect("built-in ontology is valid")
    }

    pub fn is_subclass_of(&self, sub: &str, sup: &str) -> Result<bool> {
        self.tbox.is_subclass_of(sub, sup)
    }

    pub fn individuals_of(&self, type_name: &str, abox: &ABox) -> Result<BTreeSet<String>> {
        self.tbox.individuals_of(type_name, abox)
    }

    pub fn visual_properties_of(&self, class: &str) -> Result<Vec<(String, String)>> {
        self.tbox.visual_properties_of(class)
    }

    pub fn robot(&self, name: &str) -> Option<&RobotProfile> {
        self.robots.get(name)
    }

    /// Checks every individual in `abox` against the TBox.
    pub fn validate_abox(&self, abox: &ABox) -> Result<()> {
        for individual in &abox.individuals {
            let concepts = abox.concepts_of(individual);
            for c in &concepts {
                self.tbox.require(c)?;
            }
            let props = abox.properties_of(individual);
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for (name, value) in &props {
                let def = self
                    .tbox
                    .property(name)
                    .ok_or_else(|| OntologyError::UnknownProperty(name.clone()))?;
                if !concepts.iter().any(|c| self.tbox.subsumed(c, &def.domain)) {
                    return Err(OntologyError::TypeCheck {
                        property: name.clone(),
                        reason: format!("`{individual}` is not in domain `{}`", def.domain),
                    });
                }
                self.tbox
                    .check_value(&def.range, value, Some(abox))
                    .map_err(|reason| OntologyError::TypeCheck {
                        property: name.clone(),
                        reason,
                    })?;
                *counts.entry(name.as_str()).or_default() += 1;
            }
            for def in self.tbox.properties() {
                if def.cardinality.is_unbounded()
                    || !concepts.iter().any(|c| self.tbox.subsumed(c, &def.domain))
                {
                    continue;
                }
                let count = counts.get(def.name.as_str()).copied().unwrap_or(0);
                if !def.cardinality.admits(count) {
                    return Err(OntologyError::Cardinality {
                        individual: individual.clone(),
                        property: def.name.clone(),
                        count,
                        expected: def.cardinality.to_string(),
                    });
                }
            }
        }
        for a in &abox.assertions {
            let ind = match a {
                Assertion::Concept { individual, .. } => individual,
                Assertion::Role { subject, .. } => subject,
            };
            if !abox.individuals.contains(ind) {
                return Err(OntologyError::UnknownType(ind.clone()));
            }
        }
        Ok(())
    }
}
