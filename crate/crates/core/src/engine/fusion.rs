//! Naive-Bayes fusion of evidence atoms into a single class.

use crate::cas::{Annotation, Hypothesis};
use crate::evidence::{Atom, Cpt};

/// Annotation types whose symbol property is read as an evidence atom.
pub const ATOM_SOURCES: [(&str, &str); 6] = [
    ("LinemodAtom", "linemod"),
    ("TextAtom", "text"),
    ("LogoAtom", "logo"),
    ("SemanticColorAnnotation", "color"),
    ("ShapeAnnotation", "shape"),
    ("SizeAnnotation", "size"),
];

/// Annotation types that only the evidence stubs produce. Fusion runs on a
/// hypothesis only when it carries at least one of these.
pub const STUB_ATOMS: [&str; 3] = ["LinemodAtom", "TextAtom", "LogoAtom"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FusionError {
    #[error("no evidence atom is known to the model")]
    NoEvidence,
    #[error("the evidence has zero probability under every class")]
    Impossible,
    #[error("prior must have one non-negative entry per class and sum to 1")]
    BadPrior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionModel {
    pub cpt: Cpt,
    pub prior: Vec<f64>,
}

impl FusionModel {
    /// Uniform prior over the table's classes.
    pub fn uniform(cpt: Cpt) -> Self {
        let n = cpt.classes().len();
        FusionModel {
            prior: vec![1.0 / n as f64; n],
            cpt,
        }
    }

    pub fn with_prior(cpt: Cpt, prior: Vec<f64>) -> Result<Self, FusionError> {
        let ok = prior.len() == cpt.classes().len()
            && prior.iter().all(|p| *p >= 0.0)
            && (prior.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        if !ok {
            return Err(FusionError::BadPrior);
        }
        Ok(FusionModel { cpt, prior })
    }

    pub fn kitchen() -> Self {
        FusionModel::uniform(Cpt::kitchen())
    }

    /// Normalized `P(class | atoms)` in class order. Unknown atoms are ignored.
    pub fn posterior(&self, atoms: &[Atom]) -> Result<Vec<(String, f64)>, FusionError> {
        let known: Vec<&Atom> = atoms.iter().filter(|a| self.cpt.contains(a)).collect();
        if known.is_empty() {
            return Err(FusionError::NoEvidence);
        }
        let scores: Vec<f64> = self
            .cpt
            .classes()
            .iter()
            .zip(&self.prior)
            .map(|(c, prior)| {
                known
                    .iter()
                    .map(|a| self.cpt.probability(a, c).unwrap_or(0.0))
                    .product::<f64>()
                    * prior
            })
            .collect();
        let z: f64 = scores.iter().sum();
        if z <= 0.0 || !z.is_finite() {
            return Err(FusionError::Impossible);
        }
        Ok(self
            .cpt
            .classes()
            .iter()
            .cloned()
            .zip(scores.into_iter().map(|s| s / z))
            .collect())
    }

    /// Most probable class. Ties go to the lexicographically smallest name.
    pub fn argmax(&self, atoms: &[Atom]) -> Result<(String, f64), FusionError> {
        let post = self.posterior(atoms)?;
        Ok(post
            .into_iter()
            .min_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)))
            .expect("at least one class"))
    }
}

/// Evidence atoms carried by `h`, in annotation order.
pub fn atoms_of(h: &Hypothesis) -> Vec<Atom> {
    h.annotations
        .iter()
        .filter_map(|a| {
            let (_, p) = ATOM_SOURCES.iter().find(|(t, _)| *t == a.type_name)?;
            a.symbol(p).map(|v| Atom::new(p, v))
        })
        .collect()
}

/// Fuses the atoms on `h` into a classification annotation.
pub fn fuse_annotations(h: &Hypothesis, model: &FusionModel) -> Result<Annotation, FusionError> {
    let (class, p) = model.argmax(&atoms_of(h))?;
    Ok(crate::registry::classification(&class, p, "fusion"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(p: &str, v: &str) -> Atom {
        Atom::new(p, v)
    }

    #[test]
    fn shipped_table_fixtures() {
        let m = FusionModel::kitchen();
        assert_eq!(m.argmax(&[atom("linemod", "Pot")]).unwrap().0, "Pot");
        assert_eq!(m.argmax(&[atom("text", "VITALIS_A")]).unwrap().0, "Cereal");
        assert_eq!(m.argmax(&[atom("logo", "Kellogg's")]).unwrap().0, "Cereal");
        let post = m.posterior(&[atom("color", "yellow")]).unwrap();
        let z = 0.4264 + 0.3484 + 0.4422 + 0.2936;
        assert!((post[2].1 - 0.4422 / z).abs() < 1e-12);
        assert_eq!(m.argmax(&[atom("color", "yellow")]).unwrap().0, "Cup");
    }

    #[test]
    fn unknown_atoms_are_ignored() {
        let m = FusionModel::kitchen();
        assert_eq!(
            m.posterior(&[atom("barcode", "x")]),
            Err(FusionError::NoEvidence)
        );
        let a = m
            .posterior(&[atom("linemod", "Pot"), atom("barcode", "x")])
            .unwrap();
        assert_eq!(a, m.posterior(&[atom("linemod", "Pot")]).unwrap());
    }

    #[test]
    fn contradictory_evidence_is_impossible() {
        // Each atom rules out the class the other one requires.
        let cpt = Cpt::from_json(
            r#"{"classes":["A","B"],"atoms":[
                {"predicate":"p","value":"x","p":[1.0,0.0]},
                {"predicate":"p","value":"y","p":[0.0,1.0]}]}"#,
        )
        .unwrap();
        let m = FusionModel::uniform(cpt);
        assert_eq!(
            m.posterior(&[atom("p", "x"), atom("p", "y")]),
            Err(FusionError::Impossible)
        );
    }

    #[test]
    fn ties_break_by_name() {
        let cpt = Cpt::from_json(
            r#"{"classes":["B","A"],"atoms":[{"predicate":"p","value":"x","p":[0.5,0.5]}]}"#,
        )
        .unwrap();
        assert_eq!(
            FusionModel::uniform(cpt)
                .argmax(&[atom("p", "x")])
                .unwrap()
                .0,
            "A"
        );
    }

    #[test]
    fn prior_is_validated() {
        assert_eq!(
            FusionModel::with_prior(Cpt::kitchen(), vec![0.5, 0.5]),
            Err(FusionError::BadPrior)
        );
        assert!(FusionModel::with_prior(Cpt::kitchen(), vec![0.1, 0.2, 0.3, 0.4]).is_ok());
    }
}
