//! Synthetic scenes and episodes used by the shipped data, the CLI and the
//! tests. Every generator is deterministic.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cas::SemanticRegion;
use crate::geometry::{PixelRect, Pose};
use crate::registry::scene::{
    Episode, Footprint, Frame, SceneDocument, SceneObject, ShapePrimitive,
};

pub const SURFACE: [u8; 3] = [200, 180, 150];
/// Wooden back panel of the shelf; the table surface reads as gray.
pub const SHELF_BACK: [u8; 3] = [115, 72, 35];

/// Object counts of the shipped pick-and-place episodes.
pub const PICK_AND_PLACE_SIZES: [usize; 4] = [9, 15, 20, 25];

fn region(label: &str, class: &str, rect: PixelRect) -> SemanticRegion {
    SemanticRegion {
        label: label.into(),
        class: class.into(),
        rect,
    }
}

fn object(
    id: &str,
    class: &str,
    shape: ShapePrimitive,
    color: &str,
    footprint: Footprint,
    height_mm: u16,
) -> SceneObject {
    SceneObject {
        id: id.into(),
        class_label: class.into(),
        shape,
        color: color.into(),
        footprint,
        height_mm,
        transparent: false,
        location: None,
    }
}

fn rect(x0: u32, y0: u32, x1: u32, y1: u32) -> Footprint {
    Footprint::Rect(PixelRect::new(x0, y0, x1, y1))
}

fn disc(cx: f64, cy: f64, r: f64) -> Footprint {
    Footprint::Ellipse {
        cx,
        cy,
        rx: r,
        ry: r,
    }
}

fn blank(name: &str, width: u32, height: u32) -> SceneDocument {
    SceneDocument {
        name: name.into(),
        width,
        height,
        mm_per_pixel: 5.0,
        plane_depth_mm: 1000,
        surface_color: SURFACE,
        supporting_planes: vec![],
        objects: vec![],
        semantic_regions: vec![],
        placements: vec![],
    }
}

fn frame(scene: &str, tick: u64) -> Frame {
    Frame {
        scene: scene.into(),
        camera_pose: Pose::identity(),
        blur_score: 0.0,
        tick,
    }
}

/// Breakfast table with two cups, a flat knife, a glass and drawer handles.
pub fn kitchen_scene() -> SceneDocument {
    use ShapePrimitive::*;
    let mut s = blank("kitchen", 200, 150);
    let loc = |mut o: SceneObject, l: &str| {
        o.location = Some(l.into());
        o
    };
    let t = "table-top#3";
    let mut glass = object("glass", "Glass", Round, "cyan", disc(70.0, 75.0, 7.0), 120);
    glass.transparent = true;
    s.objects = vec![
        loc(
            object(
                "knusperhonig",
                "KnusperHonig",
                Box,
                "green",
                rect(10, 10, 40, 22),
                280,
            ),
            t,
        ),
        loc(
            object("cup-1", "Cup", Round, "white", disc(60.0, 20.0, 8.0), 95),
            t,
        ),
        loc(
            object("cup-2", "Cup", Round, "white", disc(85.0, 20.0, 8.0), 95),
            t,
        ),
        loc(
            object("bowl", "Bowl", Round, "blue", disc(115.0, 25.0, 12.0), 70),
            t,
        ),
        loc(
            object("plate", "Plate", Flat, "white", disc(30.0, 60.0, 16.0), 20),
            t,
        ),
        loc(
            object("knife", "Knife", Flat, "black", rect(55, 45, 90, 48), 5),
            t,
        ),
        loc(glass, t),
        loc(
            object("pot", "Pot", Round, "black", disc(110.0, 70.0, 20.0), 150),
            t,
        ),
        loc(
            object(
                "handle-1",
                "Handle",
                Flat,
                "gray",
                rect(20, 120, 45, 123),
                8,
            ),
            "drawer#1",
        ),
        loc(
            object(
                "handle-2",
                "Handle",
                Flat,
                "gray",
                rect(87, 120, 112, 123),
                8,
            ),
            "drawer#2",
        ),
        loc(
            object(
                "handle-3",
                "Handle",
                Flat,
                "gray",
                rect(154, 120, 179, 123),
                8,
            ),
            "drawer#3",
        ),
    ];
    s.semantic_regions = vec![
        region(t, "Table", PixelRect::new(0, 0, 140, 100)),
        region(
            "counter_top",
            "CounterTop",
            PixelRect::new(140, 0, 200, 100),
        ),
        region("drawer#1", "Drawer", PixelRect::new(0, 100, 66, 150)),
        region("drawer#2", "Drawer", PixelRect::new(67, 100, 133, 150)),
        region("drawer#3", "Drawer", PixelRect::new(134, 100, 200, 150)),
    ];
    s
}

/// Three identical views of the kitchen scene.
pub fn kitchen_episode() -> Episode {
    let scene = kitchen_scene();
    Episode {
        name: "kitchen".into(),
        frames: (0..3).map(|t| frame(&scene.name, t * 100)).collect(),
        scenes: vec![scene],
        task_regions: vec!["table-top#3".into()],
        ground_truth_objects: None,
        noise_sigma: 4.0,
    }
}

const CELL: u32 = 15;
const TABLE_CELLS: u32 = 8;
const TABLE_PX: u32 = CELL * TABLE_CELLS;
const PALETTE: [&str; 10] = [
    "red", "green", "blue", "yellow", "white", "black", "orange", "magenta", "cyan", "brown",
];

fn cell_footprint(cell: u32, shape: ShapePrimitive) -> Footprint {
    let (cx, cy) = ((cell % TABLE_CELLS) * CELL, (cell / TABLE_CELLS) * CELL);
    match shape {
        ShapePrimitive::Round => disc(cx as f64 + 7.0, cy as f64 + 7.0, 6.0),
        _ => rect(cx + 2, cy + 2, cx + 13, cy + 13),
    }
}

/// A table with `n` objects that a robot rearranges. The frame sequence
/// mixes blurred frames taken while the arm moves, camera jumps, repeated
/// static views and two distractors on the counter outside the task region.
/// Items are large and tall relative to the table so that every move shifts
/// the mean table depth by more than 2 mm.
pub fn pick_and_place_episode(n: usize, seed: u64) -> Episode {
    assert!(n > 0 && n < (TABLE_CELLS * TABLE_CELLS) as usize / 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n as u64);
    let name = format!("pick-place-{n}");
    let mut cells: Vec<u32> = (0..TABLE_CELLS * TABLE_CELLS).collect();
    cells.shuffle(&mut rng);
    let mut placed: Vec<(SceneObject, u32)> = (0..n)
        .map(|i| {
            let shape = if rng.gen_bool(0.5) {
                ShapePrimitive::Box
            } else {
                ShapePrimitive::Round
            };
            let color = PALETTE[rng.gen_range(0..PALETTE.len())];
            let o = object(
                &format!("item-{i}"),
                "PhysicalThing",
                shape,
                color,
                cell_footprint(cells[i], shape),
                rng.gen_range(160..280),
            );
            (o, cells[i])
        })
        .collect();
    let distractors = [
        object(
            "distractor-0",
            "PhysicalThing",
            ShapePrimitive::Box,
            "red",
            rect(165, 25, 185, 40),
            120,
        ),
        object(
            "distractor-1",
            "PhysicalThing",
            ShapePrimitive::Round,
            "blue",
            disc(175.0, 100.0, 9.0),
            90,
        ),
    ];
    let build = |state: &str, items: &[(SceneObject, u32)], extra: Option<SceneObject>| {
        let mut s = blank(state, 200, 150);
        s.objects = items
            .iter()
            .map(|(o, _)| o.clone())
            .chain(extra)
            .chain(distractors.clone())
            .collect();
        s.semantic_regions = vec![
            region(
                "table-top#3",
                "Table",
                PixelRect::new(0, 0, TABLE_PX, TABLE_PX),
            ),
            region(
                "counter_top",
                "CounterTop",
                PixelRect::new(TABLE_PX, 0, 200, 150),
            ),
        ];
        s
    };

    let moves = n.div_ceil(3);
    let mut scenes = vec![build(&format!("{name}-0"), &placed, None)];
    let mut frames = vec![frame(&scenes[0].name, 0)];
    let mut tick = 0;
    let mut next = |frames: &mut Vec<Frame>, scene: &str, pose: Pose, blur: f64| {
        tick += 100;
        frames.push(Frame {
            scene: scene.into(),
            camera_pose: pose,
            blur_score: blur,
            tick,
        });
    };
    for m in 1..=moves {
        let prev = scenes.last().unwrap().name.clone();
        next(&mut frames, &prev, Pose::identity(), 0.0);

        // Items move at most two cells, carried by the arm 100 mm above
        // the table. Retry until the picked item has a free cell nearby.
        let (k, target) = loop {
            let k = rng.gen_range(0..placed.len());
            let near = |c: u32| {
                let from = placed[k].1;
                let (dx, dy) = (
                    (c % TABLE_CELLS) as i64 - (from % TABLE_CELLS) as i64,
                    (c / TABLE_CELLS) as i64 - (from / TABLE_CELLS) as i64,
                );
                dx * dx + dy * dy <= 4
            };
            let free: Vec<u32> = (0..TABLE_CELLS * TABLE_CELLS)
                .filter(|&c| near(c) && placed.iter().all(|(_, p)| *p != c))
                .collect();
            if !free.is_empty() {
                break (k, free[rng.gen_range(0..free.len())]);
            }
        };
        let (item, _) = placed.remove(k);
        let mut carried = item.clone();
        carried.height_mm += 100;
        let from = item.footprint.bounds();
        let to = cell_footprint(target, item.shape).bounds();
        carried.footprint = item
            .footprint
            .translated((to.0 - from.0) / 2, (to.1 - from.1) / 2)
            .expect("midpoint stays on the table");
        let moving = build(&format!("{name}-{m}-moving"), &placed, Some(carried));
        next(&mut frames, &moving.name, Pose::identity(), 150.0);
        scenes.push(moving);

        let mut moved = item;
        moved.footprint = cell_footprint(target, moved.shape);
        placed.insert(k, (moved, target));
        let after = build(&format!("{name}-{m}"), &placed, None);
        next(&mut frames, &after.name, Pose::identity(), 0.0);
        next(&mut frames, &after.name, Pose::identity(), 0.0);
        if m % 2 == 0 {
            let jump = Pose::from_translation(0.3, 0.0, 0.0);
            next(&mut frames, &after.name, jump, 0.0);
            next(&mut frames, &after.name, Pose::identity(), 0.0);
            next(&mut frames, &after.name, Pose::identity(), 0.0);
        }
        scenes.push(after);
    }

    Episode {
        name,
        scenes,
        frames,
        task_regions: vec!["table-top#3".into()],
        ground_truth_objects: Some(n),
        noise_sigma: 4.0,
    }
}

/// A shelf floor holding one red facing `extent_px` pixels wide (5 mm per
/// pixel) and a narrower blue facing.
pub fn retail_facing_scene(extent_px: u32) -> SceneDocument {
    use ShapePrimitive::Box;
    let mut s = blank(&format!("retail-facing-{extent_px}"), 200, 120);
    s.objects = vec![
        object(
            "floor-2",
            "ShelfFloor",
            ShapePrimitive::Flat,
            "gray",
            rect(0, 85, 200, 90),
            0,
        ),
        object(
            "facing-anxxxx",
            "ANXXXX",
            Box,
            "red",
            rect(20, 60, 20 + extent_px, 80),
            150,
        ),
        object(
            "facing-an4711",
            "AN4711",
            Box,
            "blue",
            rect(120, 60, 150, 80),
            150,
        ),
    ];
    s.semantic_regions = vec![region(
        "shelf-floor#2",
        "ShelfFloor",
        PixelRect::new(0, 50, 200, 90),
    )];
    s
}

pub fn retail_facing_episode(extent_px: u32) -> Episode {
    let scene = retail_facing_scene(extent_px);
    Episode {
        name: scene.name.clone(),
        frames: vec![frame(&scene.name, 0)],
        scenes: vec![scene],
        task_regions: vec!["shelf-floor#2".into()],
        ground_truth_objects: None,
        noise_sigma: 4.0,
    }
}

/// Row of each shelf floor in the shelf scene, top to bottom.
pub const SHELF_FLOOR_ROWS: [u32; 4] = [40, 110, 180, 250];

/// A four-floor shelf with separators, scanned by a camera that moves down
/// 40 mm per frame.
pub fn shelf_episode() -> Episode {
    let mut s = blank("shelf", 200, 280);
    s.surface_color = SHELF_BACK;
    let mut objects = Vec::new();
    for (i, &y) in SHELF_FLOOR_ROWS.iter().enumerate() {
        objects.push(object(
            &format!("floor-{}", i + 1),
            "ShelfFloor",
            ShapePrimitive::Flat,
            "gray",
            rect(0, y, 200, y + 5),
            0,
        ));
        for (j, x) in [10u32, 100, 190].into_iter().enumerate() {
            objects.push(object(
                &format!("separator-{}-{j}", i + 1),
                "Separator",
                ShapePrimitive::Flat,
                "white",
                rect(x, y - 20, x + 2, y),
                0,
            ));
        }
        objects.push(object(
            &format!("product-{}", i + 1),
            if i % 2 == 0 { "ANXXXX" } else { "AN4711" },
            ShapePrimitive::Box,
            if i % 2 == 0 { "red" } else { "blue" },
            rect(30, y - 15, 80, y - 1),
            150,
        ));
    }
    s.objects = objects;
    s.semantic_regions = vec![region("shelf#1", "Shelf", PixelRect::new(0, 0, 200, 280))];
    let frames = (0..10)
        .map(|i| Frame {
            scene: s.name.clone(),
            camera_pose: Pose::from_translation(0.0, 0.04 * i as f64, 0.0),
            blur_score: 0.0,
            tick: i * 100,
        })
        .collect();
    Episode {
        name: "shelf".into(),
        scenes: vec![s],
        frames,
        task_regions: vec!["shelf#1".into()],
        ground_truth_objects: None,
        noise_sigma: 4.0,
    }
}

/// Laboratory bench for a pipetting task.
pub fn chemlab_scene() -> SceneDocument {
    use ShapePrimitive::*;
    let mut s = blank("chemlab", 200, 150);
    s.objects = vec![
        object(
            "bottle",
            "Bottle",
            Round,
            "brown",
            disc(30.0, 30.0, 12.0),
            220,
        ),
        object(
            "flask",
            "ErlenmeyerFlask",
            Round,
            "cyan",
            disc(80.0, 30.0, 14.0),
            180,
        ),
        object("rack", "TubeRack", Box, "blue", rect(120, 15, 180, 40), 60),
        object("pipette", "Pipette", Flat, "gray", rect(20, 80, 90, 83), 6),
        object(
            "trash",
            "TrashBox",
            Box,
            "red",
            rect(130, 80, 180, 130),
            250,
        ),
    ];
    s.semantic_regions = vec![region(
        "bench#1",
        "PhysicalThing",
        PixelRect::new(0, 0, 200, 150),
    )];
    s
}

/// Every shipped document as `(file stem, json, is_scene)`.
pub fn shipped_documents() -> Vec<(String, String, bool)> {
    let mut docs = vec![
        ("kitchen".to_string(), kitchen_scene().to_json(), true),
        ("chemlab".to_string(), chemlab_scene().to_json(), true),
        (
            "retail-facing-50".to_string(),
            retail_facing_scene(50).to_json(),
            true,
        ),
        (
            "retail-facing-48".to_string(),
            retail_facing_scene(48).to_json(),
            true,
        ),
        ("kitchen".to_string(), kitchen_episode().to_json(), false),
        ("shelf".to_string(), shelf_episode().to_json(), false),
    ];
    for n in PICK_AND_PLACE_SIZES {
        let ep = pick_and_place_episode(n, 42);
        docs.push((ep.name.clone(), ep.to_json(), false));
    }
    docs
}

/// Looks up a bundled scene by name.
pub fn scene(name: &str) -> Option<SceneDocument> {
    match name {
        "kitchen" => Some(kitchen_scene()),
        "chemlab" => Some(chemlab_scene()),
        _ => name
            .strip_prefix("retail-facing-")
            .and_then(|w| w.parse().ok())
            .filter(|&w: &u32| (1..=100).contains(&w))
            .map(retail_facing_scene),
    }
}

/// Looks up a bundled episode by name.
pub fn episode(name: &str) -> Option<Episode> {
    match name {
        "kitchen" => Some(kitchen_episode()),
        "shelf" => Some(shelf_episode()),
        _ => {
            if let Some(n) = name
                .strip_prefix("pick-place-")
                .and_then(|n| n.parse().ok())
            {
                return PICK_AND_PLACE_SIZES
                    .contains(&n)
                    .then(|| pick_and_place_episode(n, 42));
            }
            scene(name).map(|s| Episode {
                name: s.name.clone(),
                frames: vec![frame(&s.name, 0)],
                scenes: vec![s],
                task_regions: vec![],
                ground_truth_objects: None,
                noise_sigma: 4.0,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_documents_validate() {
        kitchen_scene().validate().unwrap();
        chemlab_scene().validate().unwrap();
        retail_facing_scene(50).validate().unwrap();
        kitchen_episode().validate().unwrap();
        shelf_episode().validate().unwrap();
        for n in PICK_AND_PLACE_SIZES {
            let ep = pick_and_place_episode(n, 42);
            ep.validate().unwrap();
            assert_eq!(ep.ground_truth_objects, Some(n));
            assert!(ep.frames.iter().any(|f| f.blur_score > 100.0));
        }
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(
            pick_and_place_episode(15, 42),
            pick_and_place_episode(15, 42)
        );
        assert_ne!(
            pick_and_place_episode(15, 42),
            pick_and_place_episode(15, 43)
        );
    }

    #[test]
    fn lookup_by_name() {
        assert!(scene("retail-facing-48").is_some());
        assert!(scene("retail-facing-0").is_none());
        assert!(episode("pick-place-20").is_some());
        assert!(episode("pick-place-21").is_none());
        assert_eq!(episode("chemlab").unwrap().frames.len(), 1);
    }

    /// The JSON files under data/ are exactly what the generators produce.
    /// Set `PERCEPT_REGENERATE=1` to rewrite them.
    #[test]
    fn shipped_files_match_generators() {
        let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
        let regenerate = std::env::var_os("PERCEPT_REGENERATE").is_some();
        for (stem, json, is_scene) in shipped_documents() {
            let dir = root.join(if is_scene { "scenes" } else { "episodes" });
            let path = dir.join(format!("{stem}.json"));
            if regenerate {
                std::fs::write(&path, format!("{json}\n")).unwrap();
            }
            let on_disk = std::fs::read_to_string(&path).unwrap_or_default();
            assert_eq!(on_disk.trim_end(), json, "{} is stale", path.display());
        }
    }
}
