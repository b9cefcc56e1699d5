//! Rasterizes a scene document into a color/depth observation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::scene::SceneDocument;
use crate::cas::{GroundTruthObject, Observation, SemanticRegion};
use crate::geometry::{PixelRect, Pose};
use crate::palette;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Standard deviation of the color noise, in 8-bit units.
    pub noise_sigma: f64,
    pub seed: u64,
    pub timestamp: u64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            noise_sigma: 4.0,
            seed: 0,
            timestamp: 0,
        }
    }
}

/// Pixel offset of the scene as seen from `camera_pose`.
pub fn camera_shift(scene: &SceneDocument, camera_pose: &Pose) -> (i64, i64) {
    let px = |m: f64| (-m * 1000.0 / scene.mm_per_pixel).round() as i64;
    (px(camera_pose.position[0]), px(camera_pose.position[1]))
}

fn shift_rect(r: PixelRect, dx: i64, dy: i64, w: u32, h: u32) -> Option<PixelRect> {
    let clamp = |v: i64, hi: u32| v.clamp(0, hi as i64) as u32;
    let rect = PixelRect::new(
        clamp(r.x0 as i64 + dx, w),
        clamp(r.y0 as i64 + dy, h),
        clamp(r.x1 as i64 + dx, w),
        clamp(r.y1 as i64 + dy, h),
    );
    (rect.width() > 0 && rect.height() > 0).then_some(rect)
}

/// Horizontal smear radius in pixels for a blur score.
pub fn blur_radius(blur_score: f64) -> usize {
    (blur_score / 50.0).floor().max(0.0) as usize
}

/// Horizontal box filter; invalid depth readings are ignored in the average.
fn smear(color: &mut [[u8; 3]], depth: &mut [u16], width: usize, radius: usize) {
    let (src_c, src_d) = (color.to_vec(), depth.to_vec());
    for (i, (c, d)) in color.iter_mut().zip(depth.iter_mut()).enumerate() {
        let (row, x) = (i / width * width, i % width);
        let (lo, hi) = (x.saturating_sub(radius), (x + radius).min(width - 1));
        let mut acc = [0u32; 3];
        let (mut dsum, mut dn) = (0u32, 0u32);
        for j in row + lo..=row + hi {
            for k in 0..3 {
                acc[k] += src_c[j][k] as u32;
            }
            if src_d[j] != 0 {
                dsum += src_d[j] as u32;
                dn += 1;
            }
        }
        let n = (hi - lo + 1) as u32;
        *c = [(acc[0] / n) as u8, (acc[1] / n) as u8, (acc[2] / n) as u8];
        *d = if dn == 0 { 0 } else { (dsum / dn) as u16 };
    }
}

/// Renders `scene` from `camera_pose`. The camera translation shifts the
/// raster, a blur score of 50 or more smears it horizontally, and color
/// noise is Gaussian and seeded by `(seed, timestamp)`.
pub fn render_observation(
    scene: &SceneDocument,
    camera_pose: Pose,
    blur_score: f64,
    episode: &str,
    options: RenderOptions,
) -> Observation {
    let (w, h) = (scene.width, scene.height);
    let n = (w * h) as usize;
    let mut color = vec![scene.surface_color; n];
    let mut depth = vec![scene.plane_depth_mm; n];
    let (dx, dy) = camera_shift(scene, &camera_pose);
    let mut ground_truth = Vec::new();

    for obj in &scene.objects {
        let Some(fp) = obj.footprint.translated(dx, dy) else {
            continue;
        };
        let pixels = fp.pixels(w, h);
        if pixels.is_empty() {
            continue;
        }
        let support: u16 = scene
            .placements
            .iter()
            .filter(|p| p.object == obj.id)
            .filter_map(|p| scene.object(&p.support))
            .map(|s| s.height_mm)
            .sum();
        let rgb = palette::rgb_of(&obj.color).unwrap_or([128, 128, 128]);
        let d = if obj.transparent {
            0
        } else {
            scene.plane_depth_mm.saturating_sub(support + obj.height_mm)
        };
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
        for &i in &pixels {
            color[i as usize] = rgb;
            depth[i as usize] = d;
            let (x, y) = (i % w, i / w);
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x + 1);
            y1 = y1.max(y + 1);
        }
        ground_truth.push(GroundTruthObject {
            id: obj.id.clone(),
            class_label: obj.class_label.clone(),
            bbox: PixelRect::new(x0, y0, x1, y1),
        });
    }

    let radius = blur_radius(blur_score);
    if radius > 0 {
        smear(&mut color, &mut depth, w as usize, radius);
    }

    if options.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(
            options.seed ^ options.timestamp.wrapping_mul(0x9e37_79b9_7f4a_7c15),
        );
        let normal = Normal::new(0.0, options.noise_sigma).expect("finite sigma");
        for px in &mut color {
            for c in px.iter_mut() {
                *c = (*c as f64 + normal.sample(&mut rng))
                    .round()
                    .clamp(0.0, 255.0) as u8;
            }
        }
    }

    let semantic_map = scene
        .semantic_regions
        .iter()
        .filter_map(|r| {
            shift_rect(r.rect, dx, dy, w, h).map(|rect| SemanticRegion {
                label: r.label.clone(),
                class: r.class.clone(),
                rect,
            })
        })
        .collect();

    Observation {
        timestamp: options.timestamp,
        width: w,
        height: h,
        color,
        depth,
        camera_pose,
        blur_score,
        source_episode: episode.to_string(),
        mm_per_pixel: scene.mm_per_pixel,
        semantic_map,
        ground_truth,
    }
}
