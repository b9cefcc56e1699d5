//! Synthetic ground truth: scene documents and the episodes that replay them.

use serde::{Deserialize, Serialize};

use crate::cas::SemanticRegion;
use crate::geometry::{PixelRect, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapePrimitive {
    Box,
    Round,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Footprint {
    Rect(PixelRect),
    /// Centre and radii in pixels; a pixel belongs to the ellipse when its
    /// centre does.
    Ellipse {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
    },
}

impl Footprint {
    pub fn contains(&self, x: u32, y: u32) -> bool {
        match *self {
            Footprint::Rect(r) => r.contains_px(x, y),
            Footprint::Ellipse { cx, cy, rx, ry } => {
                let dx = (x as f64 + 0.5 - cx) / rx;
                let dy = (y as f64 + 0.5 - cy) / ry;
                dx * dx + dy * dy <= 1.0
            }
        }
    }

    /// Pixel bounding box, possibly extending past the raster.
    pub fn bounds(&self) -> (i64, i64, i64, i64) {
        match *self {
            Footprint::Rect(r) => (r.x0 as i64, r.y0 as i64, r.x1 as i64, r.y1 as i64),
            Footprint::Ellipse { cx, cy, rx, ry } => (
                (cx - rx).floor() as i64,
                (cy - ry).floor() as i64,
                (cx + rx).ceil() as i64 + 1,
                (cy + ry).ceil() as i64 + 1,
            ),
        }
    }

    /// Row-major indices of the footprint on a `width`×`height` raster.
    pub fn pixels(&self, width: u32, height: u32) -> Vec<u32> {
        let (x0, y0, x1, y1) = self.bounds();
        let mut out = Vec::new();
        for y in y0.max(0)..y1.min(height as i64) {
            for x in x0.max(0)..x1.min(width as i64) {
                if self.contains(x as u32, y as u32) {
                    out.push(y as u32 * width + x as u32);
                }
            }
        }
        out
    }

    pub fn translated(&self, dx: i64, dy: i64) -> Option<Footprint> {
        Some(match *self {
            Footprint::Rect(r) => {
                let (x0, y0) = (r.x0 as i64 + dx, r.y0 as i64 + dy);
                let (x1, y1) = (r.x1 as i64 + dx, r.y1 as i64 + dy);
                if x1 <= 0 || y1 <= 0 {
                    return None;
                }
                Footprint::Rect(PixelRect::new(
                    x0.max(0) as u32,
                    y0.max(0) as u32,
                    x1 as u32,
                    y1 as u32,
                ))
            }
            Footprint::Ellipse { cx, cy, rx, ry } => Footprint::Ellipse {
                cx: cx + dx as f64,
                cy: cy + dy as f64,
                rx,
                ry,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub class_label: String,
    pub shape: ShapePrimitive,
    pub color: String,
    pub footprint: Footprint,
    pub height_mm: u16,
    #[serde(default)]
    pub transparent: bool,
    #[serde(default)]
    pub location: Option<String>,
}

/// `object` rests on top of `support` (e.g. a spoon on a plate).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub object: String,
    pub support: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportingPlane {
    pub label: String,
    pub rect: PixelRect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDocument {
    pub name: String,
    pub width: u32,
    pub height: u32,
    pub mm_per_pixel: f64,
    pub plane_depth_mm: u16,
    /// Color of the supporting surface.
    pub surface_color: [u8; 3],
    pub supporting_planes: Vec<SupportingPlane>,
    pub objects: Vec<SceneObject>,
    pub semantic_regions: Vec<SemanticRegion>,
    #[serde(default)]
    pub placements: Vec<Placement>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("invalid scene `{scene}`: {reason}")]
    Invalid { scene: String, reason: String },
    #[error("malformed document: {0}")]
    Malformed(String),
}

impl SceneDocument {
    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |reason: String| SceneError::Invalid {
            scene: self.name.clone(),
            reason,
        };
        if self.width == 0 || self.height == 0 {
            return Err(bad("empty raster".into()));
        }
        let mut ids = std::collections::BTreeSet::new();
        for o in &self.objects {
            if !ids.insert(o.id.as_str()) {
                return Err(bad(format!("duplicate object id `{}`", o.id)));
            }
            let (x0, y0, x1, y1) = o.footprint.bounds();
            let fits = match o.footprint {
                Footprint::Rect(_) => {
                    x0 >= 0 && y0 >= 0 && x1 <= self.width as i64 && y1 <= self.height as i64
                }
                Footprint::Ellipse { .. } => {
                    x0 >= 0
                        && y0 >= 0
                        && x1 - 1 <= self.width as i64
                        && y1 - 1 <= self.height as i64
                }
            };
            if !fits || o.footprint.pixels(self.width, self.height).is_empty() {
                return Err(bad(format!("footprint of `{}` leaves the raster", o.id)));
            }
            if o.height_mm >= self.plane_depth_mm {
                return Err(bad(format!(
                    "`{}` is taller than the camera distance",
                    o.id
                )));
            }
        }
        for p in &self.placements {
            if !ids.contains(p.object.as_str()) || !ids.contains(p.support.as_str()) {
                return Err(bad(format!(
                    "placement references unknown object `{}`",
                    p.object
                )));
            }
        }
        Ok(())
    }

    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let scene: SceneDocument =
            serde_json::from_str(text).map_err(|e| SceneError::Malformed(e.to_string()))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub scene: String,
    pub camera_pose: Pose,
    pub blur_score: f64,
    pub tick: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub name: String,
    pub scenes: Vec<SceneDocument>,
    pub frames: Vec<Frame>,
    /// Semantic region labels the task is about.
    pub task_regions: Vec<String>,
    /// Number of distinct task-relevant objects, when known.
    #[serde(default)]
    pub ground_truth_objects: Option<usize>,
    #[serde(default = "default_noise")]
    pub noise_sigma: f64,
}

fn default_noise() -> f64 {
    4.0
}

impl Episode {
    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |reason: String| SceneError::Invalid {
            scene: self.name.clone(),
            reason,
        };
        for s in &self.scenes {
            s.validate()?;
        }
        for pair in self.frames.windows(2) {
            if pair[1].tick <= pair[0].tick {
                return Err(bad(format!("tick {} does not increase", pair[1].tick)));
            }
        }
        for f in &self.frames {
            if self.scene(&f.scene).is_none() {
                return Err(bad(format!("frame references unknown scene `{}`", f.scene)));
            }
            if (f.camera_pose.quaternion_norm() - 1.0).abs() > 1e-6 || !(f.blur_score >= 0.0) {
                return Err(bad(format!("frame {} has an invalid pose or blur", f.tick)));
            }
        }
        Ok(())
    }

    pub fn scene(&self, name: &str) -> Option<&SceneDocument> {
        self.scenes.iter().find(|s| s.name == name)
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let ep: Episode =
            serde_json::from_str(text).map_err(|e| SceneError::Malformed(e.to_string()))?;
        ep.validate()?;
        Ok(ep)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("episode serializes")
    }
}
