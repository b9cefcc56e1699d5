use serde::{Deserialize, Serialize};

/// 6-DoF pose: position in meters plus an `(x, y, z, w)` unit quaternion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: [f64; 3],
    pub orientation: [f64; 4],
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Pose {
    pub const fn identity() -> Self {
        Pose {
            position: [0.0, 0.0, 0.0],
            orientation: [0.0, 0.0, 0.0, 1.0],
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Pose {
            position: [x, y, z],
            ..Pose::identity()
        }
    }

    /// Yaw-only rotation about +z.
    pub fn with_yaw(mut self, yaw: f64) -> Self {
        let half = yaw / 2.0;
        self.orientation = [0.0, 0.0, half.sin(), half.cos()];
        self
    }

    pub fn quaternion_norm(&self) -> f64 {
        self.orientation.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn translation_distance(&self, other: &Pose) -> f64 {
        self.position
            .iter()
            .zip(other.position.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Rotation angle (radians) between the two orientations.
    pub fn angular_distance(&self, other: &Pose) -> f64 {
        let dot: f64 = self
            .orientation
            .iter()
            .zip(other.orientation.iter())
            .map(|(a, b)| a * b)
            .sum();
        let norm = self.quaternion_norm() * other.quaternion_norm();
        if norm == 0.0 {
            return 0.0;
        }
        2.0 * (dot.abs() / norm).min(1.0).acos()
    }

    pub fn to_array(&self) -> [f64; 7] {
        let [x, y, z] = self.position;
        let [qx, qy, qz, qw] = self.orientation;
        [x, y, z, qx, qy, qz, qw]
    }

    pub fn from_slice(v: &[f64]) -> Option<Self> {
        match v {
            [x, y, z, qx, qy, qz, qw] => Some(Pose {
                position: [*x, *y, *z],
                orientation: [*qx, *qy, *qz, *qw],
            }),
            _ => None,
        }
    }
}

/// Axis-aligned pixel rectangle, half-open: `x0 <= x < x1`, `y0 <= y < y1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl PixelRect {
    pub const fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Self {
        PixelRect { x0, y0, x1, y1 }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 as f64 && x < self.x1 as f64 && y >= self.y0 as f64 && y < self.y1 as f64
    }

    pub fn contains_px(&self, x: u32, y: u32) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn width(&self) -> u32 {
        self.x1.saturating_sub(self.x0)
    }

    pub fn height(&self) -> u32 {
        self.y1.saturating_sub(self.y0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angular_distance_of_yaw() {
        let a = Pose::identity();
        let b = Pose::identity().with_yaw(0.3);
        assert!((a.angular_distance(&b) - 0.3).abs() < 1e-12);
        assert!((b.quaternion_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rect_is_half_open() {
        let r = PixelRect::new(2, 2, 4, 5);
        assert!(r.contains_px(2, 4));
        assert!(!r.contains_px(4, 2));
        assert_eq!((r.width(), r.height()), (2, 3));
    }
}
