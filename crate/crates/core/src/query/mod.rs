//! The perception task language: `detect`, `inspect` and the compound
//! `track`/`scan`/`count` forms.

mod format;
mod matching;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::sexpr::{Pos, SyntaxError};

pub use format::format_query;
pub use matching::{match_object, MatchContext};
pub use parse::{parse_query, parse_query_with};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Determiner {
    A,
    An,
    The,
}

impl Determiner {
    pub fn keyword(self) -> &'static str {
        match self {
            Determiner::A => "a",
            Determiner::An => "an",
            Determiner::The => "the",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "a" => Some(Determiner::A),
            "an" => Some(Determiner::An),
            "the" => Some(Determiner::The),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    Object,
    ObjectPart,
    Scene,
    /// Free noun of a nested description: `(a location ...)`, `(a table ...)`.
    Named(String),
}

impl Kind {
    pub fn keyword(&self) -> &str {
        match self {
            Kind::Object => "object",
            Kind::ObjectPart => "object-part",
            Kind::Scene => "scene",
            Kind::Named(n) => n,
        }
    }

    fn top_level(s: &str) -> Option<Self> {
        match s {
            "object" => Some(Kind::Object),
            "object-part" => Some(Kind::ObjectPart),
            "scene" => Some(Kind::Scene),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum QueryValue {
    Symbol(String),
    Number(f64),
    /// Plain data list such as a pose `(x y z qx qy qz qw)`.
    List(Vec<QueryValue>),
    Description(Box<ObjectDescription>),
    /// `in (a container ...)`: a preposition followed by a description.
    Relation {
        preposition: String,
        target: Box<ObjectDescription>,
    },
}

impl QueryValue {
    pub fn symbol(s: impl Into<String>) -> Self {
        QueryValue::Symbol(s.into())
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            QueryValue::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            QueryValue::Number(n) => Some(*n),
            _ => None,
        }
    }

    /// The nested description of a description or relation value.
    pub fn description(&self) -> Option<&ObjectDescription> {
        match self {
            QueryValue::Description(d) | QueryValue::Relation { target: d, .. } => Some(d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub attribute: String,
    pub value: QueryValue,
}

impl Constraint {
    pub fn new(attribute: &str, value: QueryValue) -> Self {
        Constraint {
            attribute: attribute.to_string(),
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectDescription {
    pub determiner: Determiner,
    pub kind: Kind,
    pub constraints: Vec<Constraint>,
}

impl ObjectDescription {
    pub fn new(determiner: Determiner, kind: Kind) -> Self {
        ObjectDescription {
            determiner,
            kind,
            constraints: Vec::new(),
        }
    }

    pub fn with(mut self, attribute: &str, value: QueryValue) -> Self {
        self.constraints.push(Constraint::new(attribute, value));
        self
    }

    /// First value given for `attribute` at this level.
    pub fn value_of(&self, attribute: &str) -> Option<&QueryValue> {
        self.constraints
            .iter()
            .find(|c| c.attribute == attribute)
            .map(|c| &c.value)
    }

    pub fn symbol_of(&self, attribute: &str) -> Option<&str> {
        self.value_of(attribute).and_then(QueryValue::as_symbol)
    }

    fn collect_attributes(&self, out: &mut BTreeSet<String>) {
        for c in &self.constraints {
            out.insert(c.attribute.clone());
            if let Some(d) = c.value.description() {
                d.collect_attributes(out);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verb {
    Track,
    Scan,
    Count,
}

impl Verb {
    pub fn keyword(self) -> &'static str {
        match self {
            Verb::Track => "track",
            Verb::Scan => "scan",
            Verb::Count => "count",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "track" => Some(Verb::Track),
            "scan" => Some(Verb::Scan),
            "count" => Some(Verb::Count),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Compound {
    pub verb: Verb,
    /// Words framing the inner detect, e.g. `for object` in `(scan (for object (detect ...)))`.
    pub wrapper: Vec<String>,
    /// True for the short form `(track (an object ...))` without a wrapped detect.
    pub direct: bool,
    pub inner: ObjectDescription,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Query {
    Detect(ObjectDescription),
    Inspect {
        uid: String,
        attributes: Vec<String>,
    },
    Compound(Compound),
}

impl Query {
    /// The description whose matches answer the query, if any.
    pub fn description(&self) -> Option<&ObjectDescription> {
        match self {
            Query::Detect(d) => Some(d),
            Query::Compound(c) => Some(&c.inner),
            Query::Inspect { .. } => None,
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_query(self))
    }
}

/// Attributes whose values the pipeline must produce to answer `q`.
pub fn required_attributes(q: &Query) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    match q {
        Query::Detect(d) => d.collect_attributes(&mut out),
        Query::Inspect { attributes, .. } => out.extend(attributes.iter().cloned()),
        Query::Compound(c) => {
            c.inner.collect_attributes(&mut out);
            if c.verb == Verb::Count {
                out.insert("pose".into());
                out.insert("width".into());
            }
        }
    }
    out
}

/// Attribute names accepted by the parser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    names: BTreeSet<String>,
}

/// Attributes that may carry a nested description.
pub const NESTING_ATTRIBUTES: [&str; 5] = ["location", "part-of", "on", "in", "near"];

pub const DEFAULT_ATTRIBUTES: [&str; 24] = [
    "shape",
    "color",
    "type",
    "location",
    "class",
    "pose",
    "cad-model",
    "obj-part",
    "size",
    "part-of",
    "logo",
    "text",
    "capacity",
    "volume",
    "width",
    "command",
    "category",
    "grasp-points",
    "on",
    "in",
    "near",
    "linemod",
    "barcode",
    "material",
];

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary {
            names: DEFAULT_ATTRIBUTES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Vocabulary {
    pub fn contains(&self, name: &str) -> bool {
        self.names.contains(name)
    }

    pub fn register(&mut self, name: &str) {
        self.names.insert(name.to_string());
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    /// Closest known name by edit distance, if reasonably close.
    pub fn suggest(&self, name: &str) -> Option<String> {
        self.names
            .iter()
            .map(|n| (strsim::levenshtein(n, name), n))
            .filter(|(d, n)| *d <= 2.max(n.len() / 3))
            .min()
            .map(|(_, n)| n.clone())
    }
}

/// Annotation type and property that carry the value of a query attribute.
/// Attributes absent from the table (`width`, `command`, `category`,
/// `part-of`, `on`, `in`, `near`) are answered from background knowledge;
/// `material` is answered by which segmenter produced the hypothesis.
pub const ATTRIBUTE_TABLE: [(&str, &str, &str); 16] = [
    ("shape", "ShapeAnnotation", "shape"),
    ("color", "SemanticColorAnnotation", "color"),
    ("location", "LocationAnnotation", "location"),
    ("class", "ClassificationAnnotation", "classLabel"),
    ("type", "ClassificationAnnotation", "classLabel"),
    ("pose", "PoseAnnotation", "pose"),
    ("size", "SizeAnnotation", "size"),
    ("obj-part", "PartAnnotation", "part"),
    ("cad-model", "SacModelAnnotation", "model"),
    ("logo", "LogoAtom", "logo"),
    ("text", "TextAtom", "text"),
    ("linemod", "LinemodAtom", "linemod"),
    ("capacity", "VolumeAnnotation", "capacity"),
    ("volume", "VolumeAnnotation", "capacity"),
    ("grasp-points", "GraspAnnotation", "graspPoint"),
    ("barcode", "BarcodeAnnotation", "barcode"),
];

/// `(annotation type, property)` for `attribute`, if it is perceptual.
pub fn annotation_for(attribute: &str) -> Option<(&'static str, &'static str)> {
    ATTRIBUTE_TABLE
        .iter()
        .find(|(a, _, _)| *a == attribute)
        .map(|(_, t, p)| (*t, *p))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("unknown attribute `{name}` at {pos}{}", suggestion.as_ref().map(|s| format!(", did you mean `{s}`?")).unwrap_or_default())]
    UnknownAttribute {
        name: String,
        suggestion: Option<String>,
        pos: Pos,
    },
    #[error("`{form}` at {pos} expects {expected}, found {found}")]
    Arity {
        form: String,
        expected: String,
        found: usize,
        pos: Pos,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResolutionError {
    #[error("ambiguous description, {} candidates: {}", .0.len(), .0.join(", "))]
    Ambiguity(Vec<String>),
    #[error("no object matches the description")]
    NotFound,
}

/// Applies the determiner: `a`/`an` accept any number of matches, `the`
/// demands exactly one.
pub fn resolve_determiner(
    det: Determiner,
    matches: Vec<String>,
) -> Result<Vec<String>, ResolutionError> {
    match det {
        Determiner::A | Determiner::An => Ok(matches),
        Determiner::The => match matches.len() {
            0 => Err(ResolutionError::NotFound),
            1 => Ok(matches),
            _ => Err(ResolutionError::Ambiguity(matches)),
        },
    }
}

#[cfg(test)]
mod tests;
