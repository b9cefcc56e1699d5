use std::collections::BTreeMap;

use super::{classification, median_depth, plane_depth};
use crate::cas::{Annotation, Cas, Hypothesis};
use crate::geometry::Pose;
use crate::ontology::{TBox, Value};
use crate::palette;
use crate::query::{ObjectDescription, QueryValue, NESTING_ATTRIBUTES};
use crate::registry::{Context, RegistryError};

/// Attributes the nearest-neighbour classifier compares.
pub const FEATURES: [&str; 3] = ["shape", "color", "size"];

/// Classes with at least one shape, color or size property, mapped to
/// those property values.
pub fn model_database(tbox: &TBox) -> BTreeMap<String, BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for t in tbox.types() {
        let Ok(props) = tbox.visual_properties_of(&t.name) else {
            continue;
        };
        let features: BTreeMap<String, String> = props
            .into_iter()
            .filter(|(a, _)| FEATURES.contains(&a.as_str()))
            .collect();
        if !features.is_empty() {
            out.insert(t.name.clone(), features);
        }
    }
    out
}

fn hypothesis_ids(cas: &Cas) -> Vec<String> {
    cas.hypotheses.iter().map(|h| h.id.clone()).collect()
}

pub fn primitive_shape(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    let plane = plane_depth(cas);
    let width = cas.observation().width;
    for id in hypothesis_ids(cas) {
        let h = cas.hypothesis(&id)?;
        let Some(bbox) = h.region.bbox(width) else {
            continue;
        };
        let height = match (plane, median_depth(cas, &h.region)) {
            (Some(p), Some(d)) => Some(p - d),
            _ => None,
        };
        let fill = h.region.len() as f64 / (bbox.width() * bbox.height()) as f64;
        let shape = match height {
            Some(hmm) if hmm < ctx.param("flat_mm") => "flat",
            _ if fill < ctx.param("round_fill") => "round",
            _ => "box",
        };
        cas.annotate(
            ctx.tbox,
            &id,
            Annotation::new("ShapeAnnotation").with("shape", Value::symbol(shape)),
        )?;
    }
    Ok(())
}

pub fn color_histogram(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    for id in hypothesis_ids(cas) {
        let h = cas.hypothesis(&id)?;
        let colors: Vec<[u8; 3]> = h
            .region
            .indices()
            .iter()
            .map(|&i| cas.observation().color[i as usize])
            .collect();
        let n = colors.len() as f64;
        let mut mean = [0.0; 3];
        for c in &colors {
            for k in 0..3 {
                mean[k] += c[k] as f64 / n;
            }
        }
        let label = palette::nearest(mean);
        let ratio = colors
            .iter()
            .filter(|c| palette::nearest([c[0] as f64, c[1] as f64, c[2] as f64]) == label)
            .count() as f64
            / n;
        let bins = palette::histogram(colors.iter().copied());
        cas.annotate(
            ctx.tbox,
            &id,
            Annotation::new("ColorHistogram").with("bins", Value::Vector(bins)),
        )?;
        cas.annotate(
            ctx.tbox,
            &id,
            Annotation::new("SemanticColorAnnotation")
                .with("color", Value::symbol(label))
                .with("ratio", Value::Real(ratio)),
        )?;
    }
    Ok(())
}

/// Labels each hypothesis with the first semantic region holding its centroid.
pub fn location(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    let width = cas.observation().width;
    for id in hypothesis_ids(cas) {
        let (cx, cy) = cas.hypothesis(&id)?.region.centroid(width);
        let Some(label) = cas
            .observation()
            .regions_at(cx, cy)
            .next()
            .map(|r| r.label.clone())
        else {
            continue;
        };
        cas.annotate(
            ctx.tbox,
            &id,
            Annotation::new("LocationAnnotation").with("location", Value::symbol(label)),
        )?;
    }
    Ok(())
}

/// Height above the plane in millimeters, 0 when unmeasurable.
pub(crate) fn height_mm(cas: &Cas, h: &Hypothesis) -> f64 {
    match (plane_depth(cas), median_depth(cas, &h.region)) {
        (Some(p), Some(d)) => (p - d).max(0.0),
        _ => 0.0,
    }
}

/// Camera-frame pose of a hypothesis: centroid offset from the image centre
/// and the median depth.
pub(crate) fn pose_of(cas: &Cas, h: &Hypothesis) -> Pose {
    let obs = cas.observation();
    let (cx, cy) = h.region.centroid(obs.width);
    let m = obs.mm_per_pixel / 1000.0;
    let z = median_depth(cas, &h.region)
        .or(plane_depth(cas))
        .unwrap_or(0.0)
        / 1000.0;
    Pose::from_translation(
        (cx - obs.width as f64 / 2.0) * m,
        (cy - obs.height as f64 / 2.0) * m,
        z,
    )
}

pub fn geometry(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    let mm = cas.observation().mm_per_pixel;
    for id in hypothesis_ids(cas) {
        let h = cas.hypothesis(&id)?;
        let pose = pose_of(cas, h);
        let liters = h.region.len() as f64 * mm * mm * height_mm(cas, h) / 1e6;
        let size = if liters >= ctx.param("big_liters") {
            "big"
        } else {
            "small"
        };
        cas.annotate(
            ctx.tbox,
            &id,
            Annotation::new("PoseAnnotation").with("pose", Value::Pose(pose)),
        )?;
        cas.annotate(
            ctx.tbox,
            &id,
            Annotation::new("SizeAnnotation")
                .with("size", Value::symbol(size))
                .with("volumeLiters", Value::Real(liters)),
        )?;
    }
    Ok(())
}

/// Distance between observed features and a model: per attribute 0 on
/// agreement, 1 on disagreement and 0.5 when either side is silent.
pub fn feature_distance(
    observed: &BTreeMap<&str, String>,
    model: &BTreeMap<String, String>,
) -> f64 {
    FEATURES
        .iter()
        .map(|f| match (observed.get(f), model.get(*f)) {
            (Some(o), Some(m)) if o == m => 0.0,
            (Some(_), Some(_)) => 1.0,
            _ => 0.5,
        })
        .sum()
}

/// 1-nearest-neighbour over the model database; ties go to the
/// lexicographically first class. Hypotheses already classified by another
/// component are left alone.
pub fn classify(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    let models = model_database(ctx.tbox);
    for id in hypothesis_ids(cas) {
        let h = cas.hypothesis(&id)?;
        if h.latest("ClassificationAnnotation")
            .is_some_and(|a| a.symbol("classifierName") != Some("knn"))
        {
            continue;
        }
        let mut observed = BTreeMap::new();
        for (attr, ty) in [
            ("shape", "ShapeAnnotation"),
            ("color", "SemanticColorAnnotation"),
            ("size", "SizeAnnotation"),
        ] {
            if let Some(v) = h.latest(ty).and_then(|a| a.symbol(attr)) {
                observed.insert(attr, v.to_string());
            }
        }
        if observed.is_empty() {
            continue;
        }
        let best = models
            .iter()
            .map(|(name, m)| (feature_distance(&observed, m), name))
            .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        if let Some((d, name)) = best {
            let confidence = 1.0 - d / FEATURES.len() as f64;
            let name = name.clone();
            cas.annotate(ctx.tbox, &id, classification(&name, confidence, "knn"))?;
        }
    }
    Ok(())
}

fn region_names(desc: &ObjectDescription, out: &mut Vec<String>) {
    for c in &desc.constraints {
        match (&c.value, c.attribute.as_str()) {
            (QueryValue::Symbol(s), "category") => out.push(s.clone()),
            (QueryValue::Symbol(s), a) if NESTING_ATTRIBUTES.contains(&a) => out.push(s.clone()),
            (v, _) => {
                if let Some(d) = v.description() {
                    region_names(d, out);
                }
            }
        }
    }
}

/// Marks the semantic regions named by the current query as regions of interest.
pub fn region_filter(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    let mut names = Vec::new();
    if let Some(d) = cas.query.as_ref().and_then(|q| q.description()) {
        region_names(d, &mut names);
    }
    let known: Vec<String> = names
        .into_iter()
        .filter(|n| cas.observation().semantic_map.iter().any(|r| &r.label == n))
        .collect();
    for label in known {
        cas.annotate_scene(
            ctx.tbox,
            Annotation::new("RsRegionOfInterest").with("region", Value::symbol(label)),
        )?;
    }
    Ok(())
}
