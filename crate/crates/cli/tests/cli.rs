use std::fs;
use std::io::Write;
use std::process::{Command, Output, Stdio};

use percept_core::cas::Cas;
use percept_core::registry::CONTINUOUS_BASE;
use percept_core::scenarios;

fn percept(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_percept"))
        .args(args)
        .stdin(Stdio::null())
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const ROUND_BLACK: &str =
    "(detect (an object (shape round) (color black) (location (a location (on (a table (category table-top#3)))))))";

#[test]
fn plan_prints_the_six_annotator_pipeline() {
    let o = percept(&["plan", "--robot", "pr2", "--query", ROUND_BLACK]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "PlaneAnnotator\nPointCloudClusterExtractor\nNormalEstimator\nPrimitiveShapeAnnotator\n\
         ClusterColorHistogramCalculator\nClusterLocationAnnotator\n"
    );
}

#[test]
fn an_unconstrained_query_plans_the_continuous_base() {
    let o = percept(&["plan", "--query", "(detect (an object))"]);
    assert_eq!(o.status.code(), Some(0));
    let names: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(names, CONTINUOUS_BASE);
}

#[test]
fn missing_capabilities_exit_with_a_planning_error() {
    let o = percept(&[
        "plan",
        "--robot",
        "no-depth",
        "--query",
        "(detect (an object (shape box)))",
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(
        stderr(&o).contains("Perceive3DDepthCapability"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn robot_profiles_can_come_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eyes.onto");
    fs::write(
        &path,
        "(robot EyesOnly (capabilities PerceiveColorCapability))\n",
    )
    .unwrap();
    let robot = path.to_str().unwrap();
    let o = percept(&[
        "plan",
        "--robot",
        robot,
        "--query",
        "(detect (an object (shape box)))",
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let o = percept(&[
        "plan",
        "--robot",
        "nobody",
        "--query",
        "(detect (an object))",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("PR2"), "{}", stderr(&o));
}

#[test]
fn explain_gives_a_reason_per_step() {
    let o = percept(&["explain", "--attributes", "color,shape,location"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(
        text.contains("PrimitiveShapeAnnotator") && text.contains("query-attribute (shape)"),
        "{text}"
    );
    assert!(
        text.contains("precondition-of PointCloudClusterExtractor"),
        "{text}"
    );
}

#[test]
fn determiners_map_to_exit_codes() {
    let two = percept(&[
        "run",
        "--episode",
        "kitchen",
        "--query",
        "(detect (the object (type 'Cup')))",
    ]);
    assert_eq!(two.status.code(), Some(3));
    assert!(
        stderr(&two).contains("obj-") && stderr(&two).contains("2 candidates"),
        "{}",
        stderr(&two)
    );
    let one = percept(&[
        "run",
        "--episode",
        "kitchen",
        "--query",
        "(detect (the object (type 'Pot')))",
    ]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(stdout(&one).lines().count(), 1);
    let none = percept(&[
        "run",
        "--episode",
        "kitchen",
        "--query",
        "(detect (the object (color magenta)))",
    ]);
    assert_eq!(none.status.code(), Some(2));
}

#[test]
fn the_query_can_come_from_stdin() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_percept"))
        .args(["run", "--scene", "kitchen", "--json"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"(detect (an object (type 'Food')))")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["ids"].as_array().unwrap().len(), 1);
    assert_eq!(v["objects"][0]["attributes"]["class"], "KnusperHonig");
}

#[test]
fn bad_queries_are_reported() {
    let o = percept(&[
        "run",
        "--episode",
        "kitchen",
        "--query",
        "(detect (an object (colour red)))",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("did you mean `color`"),
        "{}",
        stderr(&o)
    );
    let o = percept(&["run", "--episode", "kitchen"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no query"), "{}", stderr(&o));
}

#[test]
fn same_seed_same_belief_dump() {
    let args = ["belief", "--episode", "pick-place-9", "--seed", "7"];
    let a = percept(&args);
    let b = percept(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let dump: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(dump["objects"].as_array().unwrap().len(), 9);
    assert!(dump["objects"][0].get("firstSeen").is_some());
}

#[test]
fn filters_can_be_switched_off() {
    let count = |filters: &str| {
        let o = percept(&[
            "continuous",
            "--episode",
            "pick-place-9",
            "--filters",
            filters,
            "--json",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v["objects"].as_u64().unwrap()
    };
    let (on, off) = (count("on"), count("off"));
    assert_eq!(on, 9);
    assert!(off > on);
}

#[test]
fn episodes_load_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kitchen.episode.json");
    fs::write(&path, scenarios::kitchen_episode().to_json()).unwrap();
    let q = "(detect (an object (shape box) (color green)))";
    let from_file = percept(&["run", "--episode", path.to_str().unwrap(), "--query", q]);
    let bundled = percept(&["run", "--episode", "kitchen", "--query", q]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, bundled.stdout);
    let missing = percept(&["run", "--episode", "no-such-episode", "--query", q]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).contains("unknown episode"));
}

#[test]
fn the_analysis_structure_can_be_dumped() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cas.json");
    let o = percept(&[
        "run",
        "--scene",
        "kitchen",
        "--query",
        "(detect (an object (color green)))",
        "--dump-cas",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let cas = Cas::from_json(&fs::read_to_string(&path).unwrap()).unwrap();
    assert!(!cas.hypotheses.is_empty());
}

#[test]
fn config_files_override_filters_and_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "(filters (static-skip-enabled false))\n").unwrap();
    let o = percept(&[
        "continuous",
        "--episode",
        "kitchen",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(!stdout(&o).contains("skipped"), "{}", stdout(&o));
    let o = percept(&["continuous", "--episode", "kitchen"]);
    assert!(
        stdout(&o).contains("skipped, static scene"),
        "{}",
        stdout(&o)
    );

    fs::write(
        &cfg,
        "(annotator PointCloudClusterExtractor (min-pixels 100000))\n",
    )
    .unwrap();
    let o = percept(&[
        "continuous",
        "--episode",
        "kitchen",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert!(stdout(&o).ends_with("objects: 0\n"), "{}", stdout(&o));

    fs::write(
        &cfg,
        "(annotator PointCloudClusterExtractor (min-pixles 1))\n",
    )
    .unwrap();
    let o = percept(&[
        "plan",
        "--query",
        "(detect (an object))",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compound_queries_run_end_to_end() {
    let count = percept(&[
        "run",
        "--ontology",
        "retail",
        "--scene",
        "retail-facing-48",
        "--query",
        "(count (object (detect (an object ((type 'ANXXXX') (pose (x y z qx qy qz qw)) (width 0.05))))))",
    ]);
    assert_eq!(count.status.code(), Some(0), "{}", stderr(&count));
    assert!(
        stdout(&count).contains("(count obj-1 4)"),
        "{}",
        stdout(&count)
    );
    let scan = percept(&[
        "run",
        "--ontology",
        "retail",
        "--episode",
        "shelf",
        "--query",
        "(scan (for object (detect (an object ((type 'Shelf') (command 'start'))))))",
    ]);
    assert!(
        stdout(&scan).contains("(scan (floors 4) (separators 12))"),
        "{}",
        stdout(&scan)
    );
    let missing = percept(&[
        "run",
        "--ontology",
        "retail",
        "--scene",
        "retail-facing-50",
        "--query",
        "(count (object (detect (an object (type 'ANXXXX')))))",
    ]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(stderr(&missing).contains("width"));
}
