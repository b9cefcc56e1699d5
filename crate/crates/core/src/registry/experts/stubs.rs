//! Stand-ins for trained detectors: they read the rendered ground truth and
//! emit evidence atoms sampled from the kitchen probability table.

use rand::Rng;

use super::rng_for;
use crate::cas::{Annotation, Cas, GroundTruthObject};
use crate::evidence::Cpt;
use crate::ontology::Value;
use crate::registry::{Context, RegistryError};

/// Ground-truth object under the hypothesis centroid; later objects are
/// drawn on top of earlier ones.
fn ground_truth_at(cas: &Cas, index: usize) -> Option<&GroundTruthObject> {
    let obs = cas.observation();
    let (cx, cy) = cas.hypotheses[index].region.centroid(obs.width);
    obs.ground_truth
        .iter()
        .rev()
        .find(|g| g.bbox.contains(cx, cy))
}

fn sample_atoms(
    cas: &mut Cas,
    ctx: &Context<'_>,
    predicate: &str,
    type_name: &str,
) -> Result<(), RegistryError> {
    let cpt = Cpt::kitchen();
    let timestamp = cas.observation().timestamp;
    for index in 0..cas.hypotheses.len() {
        let Some(class) = ground_truth_at(cas, index).map(|g| g.class_label.clone()) else {
            continue;
        };
        let mut rng = rng_for(ctx.seed, timestamp, index, predicate);
        let id = cas.hypotheses[index].id.clone();
        for (atom, p) in cpt.distribution(predicate, &class) {
            if rng.gen::<f64>() < p {
                cas.annotate(
                    ctx.tbox,
                    &id,
                    Annotation::new(type_name).with(predicate, Value::symbol(atom.value)),
                )?;
            }
        }
    }
    Ok(())
}

pub fn linemod(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    sample_atoms(cas, ctx, "linemod", "LinemodAtom")
}

pub fn text(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    sample_atoms(cas, ctx, "text", "TextAtom")
}

pub fn logo(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    sample_atoms(cas, ctx, "logo", "LogoAtom")
}

/// Reads the product code of every retail product hypothesis.
pub fn barcode(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    for index in 0..cas.hypotheses.len() {
        let Some(class) = ground_truth_at(cas, index).map(|g| g.class_label.clone()) else {
            continue;
        };
        if !ctx.tbox.subsumed(&class, "Product") {
            continue;
        }
        let id = cas.hypotheses[index].id.clone();
        cas.annotate(
            ctx.tbox,
            &id,
            Annotation::new("BarcodeAnnotation")
                .with("barcode", Value::symbol(format!("EAN-{class}"))),
        )?;
    }
    Ok(())
}
