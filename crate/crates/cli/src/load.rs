//! Resolving `--ontology`, `--robot`, `--episode` and `--scene` arguments.
//! Each accepts either a bundled name or a file path.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use percept_core::geometry::Pose;
use percept_core::ontology::{KnowledgeBase, RobotProfile};
use percept_core::registry::scene::{Episode, Frame, SceneDocument};
use percept_core::{scenarios, shipped};

fn read(path: &str) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {path}"))
}

/// Reads `arg` as a file, or explains that it is neither bundled nor a file.
fn read_named(arg: &str, what: &str, bundled: &str) -> Result<String> {
    if !Path::new(arg).exists() {
        bail!("unknown {what} `{arg}`: not a file and not one of {bundled}");
    }
    read(arg)
}

const BUNDLED_EPISODES: &str = "kitchen, shelf, pick-place-{9,15,20,25}, or any bundled scene";
const BUNDLED_SCENES: &str = "kitchen, chemlab, retail-facing-<1..100>";

/// Bundled domain names and their ontology documents.
fn bundled_ontology(name: &str) -> Option<&'static str> {
    match name {
        "kitchen" => Some(shipped::KITCHEN_ONTOLOGY),
        "chemlab" => Some(shipped::CHEMLAB_ONTOLOGY),
        "retail" => Some(shipped::RETAIL_ONTOLOGY),
        _ => None,
    }
}

/// Loads the built-in taxonomy, the bundled robot profiles, and every
/// requested ontology (kitchen when none is given). A `--robot` file is
/// loaded as one more document.
pub fn knowledge_base(ontologies: &[String], robot: &str) -> Result<KnowledgeBase> {
    let mut docs: Vec<String> = Vec::new();
    let requested: Vec<&str> = if ontologies.is_empty() {
        vec!["kitchen"]
    } else {
        ontologies.iter().map(String::as_str).collect()
    };
    for o in requested {
        match bundled_ontology(o) {
            Some(text) => docs.push(text.to_string()),
            None => docs.push(read_named(o, "ontology", "kitchen, chemlab, retail")?),
        }
    }
    docs.push(shipped::PR2_ROBOT.to_string());
    docs.push(shipped::NO_DEPTH_ROBOT.to_string());
    if Path::new(robot).is_file() {
        docs.push(read(robot)?);
    }
    let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
    Ok(shipped::load(&refs)?)
}

/// `pr2` and `no-depth` name the bundled profiles. Any other value is a
/// robot name in the knowledge base, or a file defining exactly one robot.
pub fn robot(kb: &KnowledgeBase, arg: &str) -> Result<RobotProfile> {
    let wanted = match arg {
        "pr2" => "PR2".to_string(),
        "no-depth" => "NoDepth".to_string(),
        other if Path::new(other).is_file() => {
            let only = shipped::load(&[&read(other)?])?;
            let mut names = only.robots.keys();
            match (names.next(), names.next()) {
                (Some(n), None) => n.clone(),
                _ => bail!("{other} must define exactly one robot"),
            }
        }
        other => other.to_string(),
    };
    kb.robots
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(&wanted))
        .map(|(_, r)| r.clone())
        .ok_or_else(|| {
            let known: Vec<&str> = kb.robots.keys().map(String::as_str).collect();
            anyhow!("unknown robot `{arg}` (known: {})", known.join(", "))
        })
}

/// A single-frame episode over `scene`.
fn still(scene: SceneDocument) -> Episode {
    Episode {
        name: scene.name.clone(),
        frames: vec![Frame {
            scene: scene.name.clone(),
            camera_pose: Pose::identity(),
            blur_score: 0.0,
            tick: 0,
        }],
        scenes: vec![scene],
        task_regions: Vec::new(),
        ground_truth_objects: None,
        noise_sigma: 4.0,
    }
}

pub fn episode(episode: Option<&str>, scene: Option<&str>) -> Result<Episode> {
    match (episode, scene) {
        (Some(e), None) => match scenarios::episode(e) {
            Some(ep) => Ok(ep),
            None => Ok(
                Episode::from_json(&read_named(e, "episode", BUNDLED_EPISODES)?)
                    .with_context(|| format!("loading {e}"))?,
            ),
        },
        (None, Some(s)) => match scenarios::scene(s) {
            Some(sc) => Ok(still(sc)),
            None => Ok(still(
                SceneDocument::from_json(&read_named(s, "scene", BUNDLED_SCENES)?)
                    .with_context(|| format!("loading {s}"))?,
            )),
        },
        (Some(_), Some(_)) => bail!("give either --episode or --scene, not both"),
        (None, None) => bail!("this command needs --episode or --scene"),
    }
}
