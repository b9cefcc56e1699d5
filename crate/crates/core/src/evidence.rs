//! Conditional probability table linking evidence atoms to object classes.

use serde::{Deserialize, Serialize};

pub const KITCHEN_CPT: &str = include_str!("../data/evidence/kitchen_cpt.json");

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: String,
    pub value: String,
}

impl Atom {
    pub fn new(predicate: &str, value: &str) -> Self {
        Atom {
            predicate: predicate.to_string(),
            value: value.to_string(),
        }
    }
}

impl std::fmt::Display for Atom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}={}", self.predicate, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Row {
    predicate: String,
    value: String,
    p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CptError {
    #[error("malformed table: {0}")]
    Malformed(String),
}

/// `P(atom | class)` for a closed set of classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    classes: Vec<String>,
    atoms: Vec<Row>,
}

impl Cpt {
    pub fn from_json(text: &str) -> Result<Self, CptError> {
        let cpt: Cpt =
            serde_json::from_str(text).map_err(|e| CptError::Malformed(e.to_string()))?;
        for row in &cpt.atoms {
            if row.p.len() != cpt.classes.len() {
                return Err(CptError::Malformed(format!(
                    "{}={} has {} entries for {} classes",
                    row.predicate,
                    row.value,
                    row.p.len(),
                    cpt.classes.len()
                )));
            }
            if row.p.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(CptError::Malformed(format!(
                    "{}={} is not a probability",
                    row.predicate, row.value
                )));
            }
        }
        Ok(cpt)
    }

    pub fn kitchen() -> Self {
        Cpt::from_json(KITCHEN_CPT).expect("shipped table is well formed")
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        self.atoms.iter().map(|r| Atom::new(&r.predicate, &r.value))
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.row(atom).is_some()
    }

    fn row(&self, atom: &Atom) -> Option<&Row> {
        self.atoms
            .iter()
            .find(|r| r.predicate == atom.predicate && r.value == atom.value)
    }

    /// `P(atom | class)`, `None` when either is not in the table.
    pub fn probability(&self, atom: &Atom, class: &str) -> Option<f64> {
        let c = self.classes.iter().position(|k| k == class)?;
        self.row(atom).map(|r| r.p[c])
    }

    /// Atoms of `predicate` with their probabilities under `class`.
    pub fn distribution<'a>(&'a self, predicate: &'a str, class: &str) -> Vec<(Atom, f64)> {
        let Some(c) = self.classes.iter().position(|k| k == class) else {
            return Vec::new();
        };
        self.atoms
            .iter()
            .filter(|r| r.predicate == predicate)
            .map(|r| (Atom::new(&r.predicate, &r.value), r.p[c]))
            .collect()
    }
}
