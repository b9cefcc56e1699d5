use super::{components, generated, mode, plane_depth};
use crate::cas::{Annotation, Cas};
use crate::ontology::Value;
use crate::palette;
use crate::registry::{Context, RegistryError};

fn failed(annotator: &str, reason: &str) -> RegistryError {
    RegistryError::Failed {
        annotator: annotator.to_string(),
        reason: reason.to_string(),
    }
}

/// Dominant supporting plane: the modal valid depth.
pub fn plane(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    let depth = mode(cas.observation().depth.iter().copied().filter(|&d| d != 0))
        .ok_or_else(|| failed("PlaneAnnotator", "no valid depth"))?;
    cas.annotate_scene(
        ctx.tbox,
        Annotation::new("RsAnnotationPlane").with("depth", Value::Real(depth as f64)),
    )?;
    Ok(())
}

/// Connected blobs rising more than `threshold_mm` above the plane.
pub fn point_cloud_clusters(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    let plane = plane_depth(cas).ok_or_else(|| failed("PointCloudClusterExtractor", "no plane"))?;
    let threshold = ctx.param("threshold_mm");
    let obs = cas.observation();
    let depth = &obs.depth;
    let regions = components(
        obs.width,
        obs.height,
        |i| depth[i] != 0 && plane - depth[i] as f64 > threshold,
        ctx.param("min_pixels") as usize,
    );
    generated(
        cas,
        ctx.tbox,
        regions,
        "RsSceneCluster",
        "PointCloudClusterExtractor",
    )?;
    Ok(())
}

/// Summarizes surface orientation as the mean absolute horizontal depth gradient.
pub fn normals(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    let obs = cas.observation();
    let (w, depth) = (obs.width as usize, &obs.depth);
    let mut sum = 0.0;
    let mut n = 0usize;
    for (i, pair) in depth.windows(2).enumerate() {
        if (i + 1) % w != 0 && pair[0] != 0 && pair[1] != 0 {
            sum += (pair[0] as f64 - pair[1] as f64).abs() / obs.mm_per_pixel;
            n += 1;
        }
    }
    let tilt = if n == 0 { 0.0 } else { sum / n as f64 };
    cas.annotate_scene(
        ctx.tbox,
        Annotation::new("RsPclNormalsCloud").with("tilt", Value::Real(tilt)),
    )?;
    Ok(())
}

/// Components of invalid depth, where the sensor saw through the object.
pub fn transparent(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    let obs = cas.observation();
    let depth = &obs.depth;
    let regions = components(
        obs.width,
        obs.height,
        |i| depth[i] == 0,
        ctx.param("min_pixels") as usize,
    );
    generated(
        cas,
        ctx.tbox,
        regions,
        "RsTransparentCluster",
        "TransparentSegmentation",
    )?;
    Ok(())
}

/// Per-channel median color of the raster, taken as the background.
pub fn background_color(colors: &[[u8; 3]]) -> [u8; 3] {
    let mut out = [0u8; 3];
    for (c, slot) in out.iter_mut().enumerate() {
        let mut v: Vec<u8> = colors.iter().map(|p| p[c]).collect();
        v.sort_unstable();
        *slot = v[v.len() / 2];
    }
    out
}

/// Color-contrast segmentation of flat things lying on the plane, which
/// depth clustering misses.
pub fn image_segments(cas: &mut Cas, ctx: &Context<'_>) -> Result<(), RegistryError> {
    let plane = plane_depth(cas).ok_or_else(|| failed("ImageSegmentation", "no plane"))?;
    let obs = cas.observation();
    let bg = background_color(&obs.color);
    let (contrast, flat) = (ctx.param("contrast"), ctx.param("flat_mm"));
    let (color, depth) = (&obs.color, &obs.depth);
    let regions = components(
        obs.width,
        obs.height,
        |i| {
            let c = color[i];
            depth[i] != 0
                && plane - depth[i] as f64 <= flat
                && palette::distance([c[0] as f64, c[1] as f64, c[2] as f64], bg) > contrast
        },
        ctx.param("min_pixels") as usize,
    );
    generated(
        cas,
        ctx.tbox,
        regions,
        "RsImageSegment",
        "ImageSegmentation",
    )?;
    Ok(())
}
