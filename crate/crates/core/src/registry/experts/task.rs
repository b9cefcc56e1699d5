//! Task-specific experts and annotators that only make sense for some queries.

use std::f64::consts::PI;

use super::annotators::height_mm;
use super::{classification, components, generated, mode};
use crate::cas::{Annotation, Cas, Region};
use crate::geometry::{PixelRect, Pose};
use crate::ontology::Value;
use crate::palette;
use crate::query::QueryValue;
use crate::registry::{Context, RegistryError};

fn ids(cas: &Cas) -> Vec<String> {
    cas.hypotheses.iter().map(|h| h.id.clone()).collect()
}

/// Thin ridges 3–10 mm proud of a drawer or cupboard front.
pub fn handles(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    let obs = cas.observation().clone();
    let (lo, hi) = (ctx.param("min_ridge_mm"), ctx.param("max_ridge_mm"));
    let fronts = obs.semantic_map.iter().filter(|r| {
        ctx.tbox.subsumed(&r.class, "Drawer") || ctx.tbox.subsumed(&r.class, "Cupboard")
    });
    for front in fronts {
        let r = front.rect;
        let inside = |i: usize| r.contains_px(i as u32 % obs.width, i as u32 / obs.width);
        let local = mode(
            (0..obs.pixel_count())
                .filter(|&i| inside(i) && obs.depth[i] != 0)
                .map(|i| obs.depth[i]),
        );
        let Some(local) = local else { continue };
        let regions: Vec<Region> = components(
            obs.width,
            obs.height,
            |i| {
                let rise = local as f64 - obs.depth[i] as f64;
                inside(i) && obs.depth[i] != 0 && rise >= lo && rise <= hi
            },
            ctx.param("min_pixels") as usize,
        )
        .into_iter()
        .filter(|reg| {
            reg.bbox(obs.width).is_some_and(|b| {
                let (w, h) = (b.width().max(1), b.height().max(1));
                w.max(h) >= 2 * w.min(h)
            })
        })
        .collect();
        for id in generated(cas, ctx.tbox, regions, "RsHandleCluster", "HandleDetector")? {
            cas.annotate(
                ctx.tbox,
                &id,
                classification("Handle", 0.9, "HandleDetector"),
            )?;
            cas.annotate(
                ctx.tbox,
                &id,
                Annotation::new("LocationAnnotation").with("location", Value::symbol(&front.label)),
            )?;
        }
    }
    Ok(())
}

/// Fits an upright cylinder to round hypotheses and reports its capacity in liters.
pub fn sac_model(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    let (width, mm) = (cas.observation().width, cas.observation().mm_per_pixel);
    for id in ids(cas) {
        let h = cas.hypothesis(&id)?;
        if h.latest("ShapeAnnotation").and_then(|a| a.symbol("shape")) != Some("round") {
            continue;
        }
        let Some(b) = h.region.bbox(width) else {
            continue;
        };
        let radius = (b.width() + b.height()) as f64 / 4.0 * mm;
        let height = height_mm(cas, h);
        if height <= 0.0 {
            continue;
        }
        let liters = PI * radius * radius * height / 1e6;
        cas.annotate(
            ctx.tbox,
            &id,
            Annotation::new("SacModelAnnotation")
                .with("model", Value::symbol("cylinder"))
                .with("radius", Value::Real(radius / 1000.0))
                .with("height", Value::Real(height / 1000.0)),
        )?;
        cas.annotate(
            ctx.tbox,
            &id,
            Annotation::new("VolumeAnnotation").with("capacity", Value::Real(liters)),
        )?;
    }
    Ok(())
}

/// Names the functional parts of classified objects.
pub fn parts(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    for id in ids(cas) {
        let Some(label) = cas
            .hypothesis(&id)?
            .latest("ClassificationAnnotation")
            .and_then(|a| a.symbol("classLabel"))
            .map(str::to_string)
        else {
            continue;
        };
        let mut names = vec!["body"];
        if ctx.tbox.subsumed(&label, "Container") {
            names.push("opening");
        }
        if ctx.tbox.subsumed(&label, "Cup") {
            names.push("handle");
        }
        let mut ann = Annotation::new("PartAnnotation");
        for n in names {
            ann = ann.with("part", Value::symbol(n));
        }
        cas.annotate(ctx.tbox, &id, ann)?;
    }
    Ok(())
}

fn is_label(c: [u8; 3], label: &str) -> bool {
    palette::nearest([c[0] as f64, c[1] as f64, c[2] as f64]) == label
}

/// Horizontal gray bands spanning most of the image are shelf floors,
/// numbered from the top.
pub fn shelves(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    let obs = cas.observation().clone();
    let coverage = ctx.param("coverage");
    let rows: Vec<bool> = (0..obs.height)
        .map(|y| {
            let row = &obs.color[(y * obs.width) as usize..((y + 1) * obs.width) as usize];
            row.iter().filter(|&&c| is_label(c, "gray")).count() as f64
                >= coverage * obs.width as f64
        })
        .collect();
    let mut floor = 0i64;
    let mut y = 0u32;
    while y < obs.height {
        if !rows[y as usize] {
            y += 1;
            continue;
        }
        let start = y;
        while y < obs.height && rows[y as usize] {
            y += 1;
        }
        floor += 1;
        let region = Region::from_rect(PixelRect::new(0, start, obs.width, y), obs.width);
        let id = cas.ensure_hypothesis(region)?;
        cas.annotate(
            ctx.tbox,
            &id,
            Annotation::new("ShelfAnnotation")
                .with("floor", Value::Integer(floor))
                .with("row", Value::Real((start + y) as f64 / 2.0)),
        )?;
        cas.annotate(
            ctx.tbox,
            &id,
            classification("ShelfFloor", 0.9, "ShelfScanner"),
        )?;
    }
    Ok(())
}

/// White uprights standing on a shelf floor, reported by image column and
/// the top row of the floor they stand on.
pub fn separators(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    let obs = cas.observation().clone();
    let mut columns = Vec::new();
    for h in &cas.hypotheses {
        if h.latest("ShelfAnnotation").is_none() {
            continue;
        }
        let Some(b) = h.region.bbox(obs.width) else {
            continue;
        };
        if b.y0 == 0 {
            continue;
        }
        let y = b.y0 - 1;
        let mut x = 0;
        while x < obs.width {
            if !is_label(obs.color[(y * obs.width + x) as usize], "white") {
                x += 1;
                continue;
            }
            let start = x;
            while x < obs.width && is_label(obs.color[(y * obs.width + x) as usize], "white") {
                x += 1;
            }
            columns.push(((start + x) as f64 / 2.0, b.y0 as f64));
        }
    }
    for (c, row) in columns {
        cas.annotate_scene(
            ctx.tbox,
            Annotation::new("SeparatorAnnotation")
                .with("column", Value::Real(c))
                .with("shelfRow", Value::Real(row)),
        )?;
    }
    Ok(())
}

/// Counts the items in a facing as `floor(extent / width)`, both in whole
/// millimeters. The class and the item width come from the current query.
pub fn count(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    let Some(desc) = cas.query.as_ref().and_then(|q| q.description()).cloned() else {
        return Ok(());
    };
    let Some(width_m) = desc.value_of("width").and_then(QueryValue::as_number) else {
        return Ok(());
    };
    let width_mm = (width_m * 1000.0).round() as i64;
    if width_mm <= 0 {
        return Ok(());
    }
    let wanted = desc
        .symbol_of("type")
        .or(desc.symbol_of("class"))
        .map(|s| ctx.tbox.resolve_alias(s).to_string());
    let (w, mm) = (cas.observation().width, cas.observation().mm_per_pixel);
    for id in ids(cas) {
        let h = cas.hypothesis(&id)?;
        let label = h
            .latest("ClassificationAnnotation")
            .and_then(|a| a.symbol("classLabel"));
        let matches = match (&wanted, label) {
            (Some(t), Some(l)) => ctx.tbox.subsumed(l, t),
            (None, Some(_)) => true,
            _ => false,
        };
        let Some(b) = h.region.bbox(w).filter(|_| matches) else {
            continue;
        };
        let extent_mm = (b.width() as f64 * mm).round() as i64;
        cas.annotate(
            ctx.tbox,
            &id,
            Annotation::new("CountAnnotation")
                .with("count", Value::Integer(extent_mm / width_mm))
                .with("extent", Value::Real(extent_mm as f64 / 1000.0)),
        )?;
    }
    Ok(())
}

/// Two opposing grasp points across the object's width.
pub fn grasp_points(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    let (w, mm) = (cas.observation().width, cas.observation().mm_per_pixel);
    for id in ids(cas) {
        let h = cas.hypothesis(&id)?;
        let (Some(pose), Some(b)) = (
            h.latest("PoseAnnotation")
                .and_then(|a| a.get("pose"))
                .and_then(Value::as_pose)
                .copied(),
            h.region.bbox(w),
        ) else {
            continue;
        };
        let half = b.width() as f64 * mm / 2000.0;
        let [x, y, z] = pose.position;
        let mut ann = Annotation::new("GraspAnnotation");
        for dx in [-half, half] {
            ann = ann.with(
                "graspPoint",
                Value::Pose(Pose::from_translation(x + dx, y, z)),
            );
        }
        cas.annotate(ctx.tbox, &id, ann)?;
    }
    Ok(())
}
