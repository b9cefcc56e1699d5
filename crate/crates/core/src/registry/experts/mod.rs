//! The shipped annotator suite.

pub(crate) mod annotators;
mod segmentation;
mod stubs;
mod task;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AnnotatorDescriptor, ComponentKind, Process, RegistryError};
use crate::cas::{Annotation, Cas, Region};
use crate::ontology::{KnowledgeBase, TBox, Value};

pub use annotators::model_database;

const DEPTH: &str = "Perceive3DDepthCapability";
const COLOR: &str = "PerceiveColorCapability";

/// Annotators run every cycle when no query demands more.
pub const CONTINUOUS_BASE: [&str; 5] = [
    "PlaneAnnotator",
    "PointCloudClusterExtractor",
    "ClusterColorHistogramCalculator",
    "Cluster3DGeometryAnnotator",
    "ClusterLocationAnnotator",
];

fn process(f: fn(&mut Cas, &super::Context<'_>) -> Result<(), RegistryError>) -> Process {
    Arc::new(f)
}

/// Descriptors and implementations in registration order.
pub fn shipped_descriptors(kb: &KnowledgeBase) -> Vec<(AnnotatorDescriptor, Process)> {
    use ComponentKind::{Annotator as A, HypothesisGenerator as G};
    let models: Vec<String> = model_database(&kb.tbox).into_keys().collect();
    vec![
        (
            AnnotatorDescriptor::new("PlaneAnnotator", A)
                .inputs(&["RsDepthImage"])
                .outputs(&["RsAnnotationPlane"])
                .capabilities(&[DEPTH])
                .continuous(),
            process(segmentation::plane),
        ),
        (
            AnnotatorDescriptor::new("PointCloudClusterExtractor", G)
                .inputs(&["RsAnnotationPlane"])
                .outputs(&["RsSceneCluster"])
                .capabilities(&[DEPTH])
                .continuous()
                .param("threshold_mm", 10.0)
                .param("min_pixels", 10.0),
            process(segmentation::point_cloud_clusters),
        ),
        (
            AnnotatorDescriptor::new("NormalEstimator", A)
                .inputs(&["RsDepthImage"])
                .outputs(&["RsPclNormalsCloud"])
                .capabilities(&[DEPTH])
                .continuous(),
            process(segmentation::normals),
        ),
        (
            AnnotatorDescriptor::new("PrimitiveShapeAnnotator", A)
                .inputs(&["RsPclNormalsCloud", "RsAnnotationPlane", "RsSceneCluster"])
                .outputs(&["ShapeAnnotation"])
                .capabilities(&[DEPTH])
                .domain(&["box", "round", "flat"])
                .continuous()
                .param("flat_mm", 25.0)
                .param("round_fill", 0.9),
            process(annotators::primitive_shape),
        ),
        (
            AnnotatorDescriptor::new("ClusterColorHistogramCalculator", A)
                .inputs(&["RsSceneCluster", "RsColorImage"])
                .outputs(&["ColorHistogram", "SemanticColorAnnotation"])
                .capabilities(&[COLOR])
                .domain(&crate::palette::labels().collect::<Vec<_>>())
                .continuous(),
            process(annotators::color_histogram),
        ),
        (
            AnnotatorDescriptor::new("ClusterLocationAnnotator", A)
                .inputs(&["RsSceneCluster", "SemanticMap"])
                .outputs(&["LocationAnnotation"])
                .continuous(),
            process(annotators::location),
        ),
        (
            AnnotatorDescriptor::new("Cluster3DGeometryAnnotator", A)
                .inputs(&["RsSceneCluster", "RsAnnotationPlane"])
                .outputs(&["PoseAnnotation", "SizeAnnotation"])
                .capabilities(&[DEPTH])
                .domain(&["small", "big"])
                .continuous()
                .param("big_liters", 2.0),
            process(annotators::geometry),
        ),
        (
            AnnotatorDescriptor::new("ClassificationAnnotator", A)
                .inputs(&[
                    "ShapeAnnotation",
                    "SemanticColorAnnotation",
                    "SizeAnnotation",
                ])
                .outputs(&["ClassificationAnnotation"])
                .domain(&models),
            process(annotators::classify),
        ),
        (
            AnnotatorDescriptor::new("TransparentSegmentation", G)
                .inputs(&["RsDepthImage"])
                .outputs(&["RsTransparentCluster"])
                .capabilities(&[DEPTH])
                .param("min_pixels", 10.0),
            process(segmentation::transparent),
        ),
        (
            AnnotatorDescriptor::new("ImageSegmentation", G)
                .inputs(&["RsColorImage", "RsAnnotationPlane"])
                .outputs(&["RsImageSegment"])
                .capabilities(&[COLOR])
                .param("contrast", 40.0)
                .param("flat_mm", 10.0)
                .param("min_pixels", 10.0),
            process(segmentation::image_segments),
        ),
        (
            AnnotatorDescriptor::new("RegionFilter", A)
                .inputs(&["SemanticMap"])
                .outputs(&["RsRegionOfInterest"]),
            process(annotators::region_filter),
        ),
        (
            AnnotatorDescriptor::new("LineModStub", A)
                .inputs(&["RsSceneCluster"])
                .outputs(&["LinemodAtom"])
                .capabilities(&[DEPTH]),
            process(stubs::linemod),
        ),
        (
            AnnotatorDescriptor::new("TextStub", A)
                .inputs(&["RsSceneCluster"])
                .outputs(&["TextAtom"])
                .capabilities(&[COLOR]),
            process(stubs::text),
        ),
        (
            AnnotatorDescriptor::new("LogoStub", A)
                .inputs(&["RsSceneCluster"])
                .outputs(&["LogoAtom"])
                .capabilities(&[COLOR]),
            process(stubs::logo),
        ),
        (
            AnnotatorDescriptor::new("HandleDetector", G)
                .inputs(&["RsDepthImage", "SemanticMap"])
                .outputs(&[
                    "RsHandleCluster",
                    "ClassificationAnnotation",
                    "LocationAnnotation",
                ])
                .capabilities(&[DEPTH])
                .domain(&["Handle"])
                .task_specific()
                .param("min_ridge_mm", 3.0)
                .param("max_ridge_mm", 10.0)
                .param("min_pixels", 10.0),
            process(task::handles),
        ),
        (
            AnnotatorDescriptor::new("SacModelAnnotator", A)
                .inputs(&["ShapeAnnotation", "RsAnnotationPlane"])
                .outputs(&["SacModelAnnotation", "VolumeAnnotation"])
                .capabilities(&[DEPTH])
                .domain(&["cylinder"])
                .task_specific(),
            process(task::sac_model),
        ),
        (
            AnnotatorDescriptor::new("PartSegmenter", A)
                .inputs(&["ClassificationAnnotation"])
                .outputs(&["PartAnnotation"])
                .capabilities(&[DEPTH]),
            process(task::parts),
        ),
        (
            AnnotatorDescriptor::new("ShelfScanner", G)
                .inputs(&["RsColorImage"])
                .outputs(&["ShelfAnnotation", "ClassificationAnnotation"])
                .capabilities(&[COLOR])
                .domain(&["ShelfFloor"])
                .task_specific()
                .param("coverage", 0.6),
            process(task::shelves),
        ),
        (
            AnnotatorDescriptor::new("SeparatorDetector", A)
                .inputs(&["ShelfAnnotation"])
                .outputs(&["SeparatorAnnotation"])
                .capabilities(&[COLOR])
                .task_specific(),
            process(task::separators),
        ),
        (
            AnnotatorDescriptor::new("BarcodeStub", A)
                .inputs(&["RsSceneCluster"])
                .outputs(&["BarcodeAnnotation"])
                .capabilities(&[COLOR])
                .task_specific(),
            process(stubs::barcode),
        ),
        (
            AnnotatorDescriptor::new("VolumetricCounter", A)
                .inputs(&["ClassificationAnnotation", "RsSceneCluster"])
                .outputs(&["CountAnnotation"])
                .task_specific(),
            process(task::count),
        ),
        (
            AnnotatorDescriptor::new("GraspPointStub", A)
                .inputs(&["PoseAnnotation"])
                .outputs(&["GraspAnnotation"])
                .experimental(),
            process(task::grasp_points),
        ),
    ]
}

/// 4-connected components of the pixels selected by `mask`, in raster order
/// of their first pixel, keeping those with at least `min_pixels`.
pub(crate) fn components(
    width: u32,
    height: u32,
    mask: impl Fn(usize) -> bool,
    min_pixels: usize,
) -> Vec<Region> {
    let n = (width * height) as usize;
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] || !mask(start) {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut pixels = Vec::new();
        while let Some(i) = stack.pop() {
            pixels.push(i as u32);
            let (x, y) = (i as u32 % width, i as u32 / width);
            let mut push = |j: usize| {
                if !seen[j] && mask(j) {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                push(i - 1);
            }
            if x + 1 < width {
                push(i + 1);
            }
            if y > 0 {
                push(i - width as usize);
            }
            if y + 1 < height {
                push(i + width as usize);
            }
        }
        if pixels.len() >= min_pixels {
            out.push(Region::new(pixels));
        }
    }
    out
}

pub(crate) fn plane_depth(cas: &Cas) -> Option<f64> {
    cas.scene_annotation("RsAnnotationPlane")
        .and_then(|a| a.real("depth"))
}

/// Median of the valid depth readings inside `region`.
pub(crate) fn median_depth(cas: &Cas, region: &Region) -> Option<f64> {
    let depth = &cas.observation().depth;
    let mut d: Vec<u16> = region
        .indices()
        .iter()
        .map(|&i| depth[i as usize])
        .filter(|&d| d != 0)
        .collect();
    if d.is_empty() {
        return None;
    }
    d.sort_unstable();
    Some(d[d.len() / 2] as f64)
}

/// Most frequent value; ties go to the smaller one.
pub(crate) fn mode(values: impl IntoIterator<Item = u16>) -> Option<u16> {
    let mut counts: BTreeMap<u16, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let mut best: Option<(u16, usize)> = None;
    for (v, c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((v, c));
        }
    }
    best.map(|(v, _)| v)
}

pub(crate) fn generated(
    cas: &mut Cas,
    tbox: &TBox,
    regions: Vec<Region>,
    cluster_type: &str,
    generator: &str,
) -> Result<Vec<String>, RegistryError> {
    let mut ids = Vec::new();
    for region in regions {
        let id = cas.ensure_hypothesis(region)?;
        cas.annotate(
            tbox,
            &id,
            Annotation::new(cluster_type).with("generator", Value::symbol(generator)),
        )?;
        ids.push(id);
    }
    Ok(ids)
}

pub(crate) fn classification(label: &str, confidence: f64, classifier: &str) -> Annotation {
    Annotation::new("ClassificationAnnotation")
        .with("classLabel", Value::symbol(label))
        .with("classConfidence", Value::Real(confidence))
        .with("classifierName", Value::symbol(classifier))
}

/// Deterministic stream per (run seed, frame, hypothesis, purpose).
pub(crate) fn rng_for(seed: u64, timestamp: u64, hypothesis: usize, salt: &str) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in salt.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
    }
    let mixed = seed
        ^ timestamp.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (hypothesis as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9)
        ^ h;
    ChaCha8Rng::seed_from_u64(mixed)
}
