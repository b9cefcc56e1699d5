//! One line per acceptance criterion, then a single assertion over all of
//! them. Run with `cargo test --test acceptance -- --nocapture` to see the
//! report.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use percept_core::cas::{init_cas, Cas, Region};
use percept_core::engine::{BeliefState, Detail, Engine, EngineError, FilterConfig, FusionModel};
use percept_core::evidence::{Atom, Cpt};
use percept_core::geometry::Pose;
use percept_core::ontology::KnowledgeBase;
use percept_core::planner::{validate_pipeline, Planner};
use percept_core::query::{format_query, parse_query, ResolutionError};
use percept_core::registry::render::{render_observation, RenderOptions};
use percept_core::registry::scene::{Episode, SceneDocument};
use percept_core::registry::Registry;
use percept_core::{scenarios, shipped};

const SIX: [&str; 6] = [
    "PlaneAnnotator",
    "PointCloudClusterExtractor",
    "NormalEstimator",
    "PrimitiveShapeAnnotator",
    "ClusterColorHistogramCalculator",
    "ClusterLocationAnnotator",
];

const RANDOM_REGISTRIES: usize = 1000;
const ROUND_TRIPS: u32 = 10_000;
const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Query listings as printed, with typesetting markup removed.
const PRINTED_QUERIES: [&str; 11] = [
    "(detect (an object (shape flat) (color black) (location in (a container (category drawer#3)))))",
    "(inspect #obj_id :pose :grasp-points)",
    "(track (an object (type `Spatula`) command `start`))",
    "(detect (an object (shape round) (color black) (location (a location ( on (a table (category table-top#3)))))",
    "(detect ( an object ( (type 'Handle') (part-of (an object ( type 'Drawer')) ))))",
    "(inspect (#uid :pose,:obj-part)",
    "(detect ( an object( (shape box) (color green)))",
    "(detect ( an object( (class 'KnusperHonig'))))",
    "(detect ( an object( (type 'Food')))",
    "(scan (for object (detect ( an object ( (type 'Shelf') (command 'start') ))))",
    "(count (object (detect ( an object ( (type 'ANXXXX') (pose (x y z qx qy qz qw)) (width 0.05) )))))",
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

fn kitchen() -> (Registry, percept_core::ontology::RobotProfile) {
    (
        Registry::shipped(shipped::kitchen_kb()).expect("kitchen registry"),
        shipped::pr2(),
    )
}

fn ask(
    engine: &mut Engine<'_>,
    episode: &Episode,
    belief: &mut BeliefState,
    text: &str,
) -> Result<Vec<String>, EngineError> {
    let q = parse_query(text).expect("fixture query parses");
    engine.answer_query(&q, episode, belief).map(|a| a.ids)
}

fn pipeline_reproduction() -> Outcome {
    let start = Instant::now();
    let (reg, robot) = kitchen();
    let registered: Vec<&str> = reg.names().take(SIX.len()).collect();
    let plan = match Planner::new(&reg, &robot).plan_for_attributes(&["color", "shape", "location"])
    {
        Ok(p) => p,
        Err(e) => return outcome(false, format!("planning failed: {e}")),
    };
    let names = plan.names();
    let valid = validate_pipeline(&reg, &names, &robot).is_ok();
    let elapsed = start.elapsed();
    let pass =
        names == SIX && registered == SIX && valid && within(elapsed, Duration::from_secs(1));
    outcome(
        pass,
        format!("{} in {elapsed:.2?} (limit 1s)", names.join(" ")),
    )
}

fn planner_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut mismatches, mut solvable) = (0, 0);
    let mut first = None;
    for i in 0..RANDOM_REGISTRIES {
        let case = common::random_case(&mut rng);
        let oracle = common::exhaustive_search(&case);
        let planned = Planner::new(&case.registry, &case.robot).plan_needs(&case.needs);
        let agree = match (&oracle, &planned) {
            (Some(_), Ok(plan)) => {
                let names = plan.names();
                validate_pipeline(&case.registry, &names, &case.robot).is_ok()
                    && common::covers(&case.registry, &names, &case.needs)
            }
            (None, Err(_)) => true,
            _ => false,
        };
        solvable += usize::from(oracle.is_some());
        if !agree {
            mismatches += 1;
            first.get_or_insert(i);
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatches == 0 && within(elapsed, Duration::from_secs(60));
    outcome(
        pass,
        format!(
            "{RANDOM_REGISTRIES} registries, {solvable} solvable, {mismatches} mismatches{} in {elapsed:.2?} (limit 60s)",
            first.map(|i| format!(" (first at case {i})")).unwrap_or_default()
        ),
    )
}

fn query_equivalence() -> Outcome {
    let (reg, robot) = kitchen();
    let ep = scenarios::kitchen_episode();
    let mut engine = Engine::new(&reg, &robot);
    let mut belief = BeliefState::new();
    let forms = [
        "(detect (an object (shape box) (color green)))",
        "(detect (an object (class 'KnusperHonig')))",
        "(detect (an object (type 'Food')))",
    ];
    let results: Vec<_> = forms
        .iter()
        .map(|q| ask(&mut engine, &ep, &mut belief, q))
        .collect();
    let pass = match &results[..] {
        [Ok(a), Ok(b), Ok(c)] => a.len() == 1 && a == b && a == c,
        _ => false,
    };
    outcome(pass, format!("{results:?}"))
}

fn determiner_contract() -> Outcome {
    let (reg, robot) = kitchen();
    let ep = scenarios::kitchen_episode();
    let mut engine = Engine::new(&reg, &robot);
    let mut belief = BeliefState::new();
    let two = ask(
        &mut engine,
        &ep,
        &mut belief,
        "(detect (the object (type 'Cup')))",
    );
    let cups_named = match &two {
        Err(EngineError::Resolution(ResolutionError::Ambiguity(ids))) => {
            ids.len() == 2
                && ids
                    .iter()
                    .all(|id| belief.object(id).and_then(|o| o.class.as_deref()) == Some("Cup"))
        }
        _ => false,
    };
    let one = ask(
        &mut engine,
        &ep,
        &mut belief,
        "(detect (the object (type 'Pot')))",
    );
    let none = ask(
        &mut engine,
        &ep,
        &mut belief,
        "(detect (the object (color magenta)))",
    );
    let pass = cups_named
        && matches!(&one, Ok(ids) if ids.len() == 1)
        && matches!(
            none,
            Err(EngineError::Resolution(ResolutionError::NotFound))
        );
    outcome(pass, format!("two: {two:?}; one: {one:?}; zero: {none:?}"))
}

/// The table with every probability of `atom` multiplied by `factor`.
fn scale_row(cpt: &Cpt, atom: &Atom, factor: f64) -> Cpt {
    let mut json = serde_json::to_value(cpt).expect("table serializes");
    for row in json["atoms"].as_array_mut().expect("rows") {
        if row["predicate"] == atom.predicate.as_str() && row["value"] == atom.value.as_str() {
            for p in row["p"].as_array_mut().expect("probabilities") {
                *p = serde_json::json!(p.as_f64().expect("number") * factor);
            }
        }
    }
    Cpt::from_json(&json.to_string()).expect("scaled table is valid")
}

fn fusion_fixture() -> Outcome {
    let model = FusionModel::kitchen();
    let fixtures = [
        (Atom::new("linemod", "Pot"), "Pot"),
        (Atom::new("text", "VITALIS_A"), "Cereal"),
        (Atom::new("logo", "Kellogg's"), "Cereal"),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (atom, expected) in &fixtures {
        let Ok(post) = model.posterior(std::slice::from_ref(atom)) else {
            pass = false;
            notes.push(format!("{atom}: no posterior"));
            continue;
        };
        let sum: f64 = post.iter().map(|(_, p)| p).sum();
        let (class, _) = model
            .argmax(std::slice::from_ref(atom))
            .expect("posterior exists");
        pass &= class == *expected && (sum - 1.0).abs() <= NORMALIZATION_TOLERANCE;
        notes.push(format!("{atom} -> {class}"));
    }
    // Scaling a whole row by a positive factor leaves every argmax alone.
    let atoms: Vec<Atom> = model.cpt.atoms().collect();
    let mut scale_violations = 0;
    for atom in &atoms {
        for factor in [0.5, 0.1, 1e-3] {
            let scaled = FusionModel::uniform(scale_row(&model.cpt, atom, factor));
            for probe in &atoms {
                let evidence = [atom.clone(), probe.clone()];
                if model.argmax(&evidence).ok().map(|r| r.0)
                    != scaled.argmax(&evidence).ok().map(|r| r.0)
                {
                    scale_violations += 1;
                }
            }
        }
    }
    pass &= scale_violations == 0;
    notes.push(format!(
        "{scale_violations} scaling violations over {} rows",
        atoms.len()
    ));
    outcome(pass, notes.join(", "))
}

fn pick_and_place_filters() -> Outcome {
    let start = Instant::now();
    let (reg, robot) = kitchen();
    let mut pass = true;
    let mut notes = Vec::new();
    for n in scenarios::PICK_AND_PLACE_SIZES {
        let ep = scenarios::episode(&format!("pick-place-{n}")).expect("shipped episode");
        let count = |filters: FilterConfig| -> Result<usize, EngineError> {
            let mut engine = Engine::new(&reg, &robot).with_filters(filters);
            let base = engine.planner().continuous_base()?;
            let mut belief = BeliefState::new();
            engine.run_continuous(&ep, &base, &mut belief)?;
            Ok(belief.len())
        };
        let on = count(FilterConfig::on(&ep.task_regions));
        let off = count(FilterConfig::off());
        let truth = ep.ground_truth_objects.unwrap_or(0);
        pass &= matches!((&on, &off), (Ok(on), Ok(off)) if *on == truth && off > on);
        notes.push(format!("{n}: on {on:?} off {off:?}"));
    }
    let elapsed = start.elapsed();
    pass &= within(elapsed, Duration::from_secs(30));
    outcome(
        pass,
        format!("{} in {elapsed:.2?} (limit 30s)", notes.join("; ")),
    )
}

fn kitchen_cas(scene: &SceneDocument, reg: &Registry, names: &[&str]) -> Cas {
    let options = RenderOptions {
        noise_sigma: 0.0,
        seed: 0,
        timestamp: 0,
    };
    let obs = render_observation(scene, Pose::identity(), 0.0, "kitchen", options);
    let mut cas = init_cas(obs).expect("rendered observation is valid");
    for n in names {
        cas = reg.run_annotator(n, cas, 0).expect("annotator runs");
    }
    cas
}

fn regions(cas: &Cas) -> BTreeSet<Vec<u32>> {
    cas.hypotheses
        .iter()
        .map(|h| h.region.indices().to_vec())
        .collect()
}

fn segmentation_recovery() -> Outcome {
    let (reg, _) = kitchen();
    let scene = scenarios::kitchen_scene();
    let footprint = |id: &str| {
        let o = scene.object(id).expect("scene object");
        Region::new(o.footprint.pixels(scene.width, scene.height))
            .indices()
            .to_vec()
    };
    let plane = kitchen_cas(&scene, &reg, &["PlaneAnnotator"]);
    let with = |name: &str| {
        let mut cas = plane.clone();
        cas = reg.run_annotator(name, cas, 0).expect("annotator runs");
        regions(&cas)
    };

    let expected: BTreeSet<Vec<u32>> = scene
        .objects
        .iter()
        .filter(|o| !o.transparent && o.height_mm > 10)
        .map(|o| footprint(&o.id))
        .collect();
    let clusters = with("PointCloudClusterExtractor");
    let clusters_ok = clusters == expected;
    let glass_ok = with("TransparentSegmentation").contains(&footprint("glass"));
    let knife_ok = with("ImageSegmentation").contains(&footprint("knife"));
    let knife_missed = !clusters.contains(&footprint("knife"));
    outcome(
        clusters_ok && glass_ok && knife_ok && knife_missed,
        format!(
            "{} clusters for {} opaque objects (exact: {clusters_ok}), glass {glass_ok}, knife {knife_ok}",
            clusters.len(),
            expected.len()
        ),
    )
}

fn subsumption_properties() -> Outcome {
    let kbs: [(&str, KnowledgeBase); 3] = [
        ("kitchen", shipped::kitchen_kb()),
        ("chemlab", shipped::chemlab_kb()),
        ("retail", shipped::retail_kb()),
    ];
    let mut violations = 0usize;
    let mut pairs = 0usize;
    for (_, kb) in &kbs {
        let tbox = &kb.tbox;
        let types: Vec<&str> = tbox.types().map(|t| t.name.as_str()).collect();
        let individuals: Vec<BTreeSet<String>> = types
            .iter()
            .map(|t| tbox.individuals_of(t, &kb.abox).expect("declared type"))
            .collect();
        for (i, a) in types.iter().enumerate() {
            violations += usize::from(!tbox.subsumed(a, a));
            for (j, b) in types.iter().enumerate() {
                pairs += 1;
                if !tbox.subsumed(a, b) {
                    continue;
                }
                if i != j && tbox.subsumed(b, a) {
                    violations += 1;
                }
                if !individuals[i].is_subset(&individuals[j]) {
                    violations += 1;
                }
                for c in &types {
                    if tbox.subsumed(b, c) && !tbox.subsumed(a, c) {
                        violations += 1;
                    }
                }
            }
        }
    }
    outcome(
        violations == 0,
        format!("{pairs} pairs, {violations} violations"),
    )
}

fn parser_round_trip() -> Outcome {
    let config = Config {
        cases: ROUND_TRIPS,
        failure_persistence: None,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    let mut runner = TestRunner::new_with_rng(config, rng);
    let round_trip = runner.run(&common::query(), |q| {
        let text = format_query(&q);
        let back = parse_query(&text)
            .map_err(|e| proptest::test_runner::TestCaseError::fail(format!("{text}: {e}")))?;
        proptest::prop_assert_eq!(back, q, "{}", text);
        Ok(())
    });
    let unparsed: Vec<usize> = PRINTED_QUERIES
        .iter()
        .enumerate()
        .filter(|(_, q)| parse_query(q).is_err())
        .map(|(i, _)| i + 1)
        .collect();
    let pass = round_trip.is_ok() && unparsed.is_empty();
    let trips = match &round_trip {
        Ok(()) => format!("{ROUND_TRIPS} round trips ok"),
        Err(e) => format!("round trip failed: {e}"),
    };
    outcome(
        pass,
        format!(
            "{trips}; {}/{} printed queries parse, failing: {unparsed:?}",
            PRINTED_QUERIES.len() - unparsed.len(),
            PRINTED_QUERIES.len()
        ),
    )
}

fn compound_count() -> Outcome {
    let reg = Registry::shipped(shipped::retail_kb()).expect("retail registry");
    let robot = shipped::pr2();
    let q = parse_query(
        "(count (object (detect (an object ((type 'ANXXXX') (pose (x y z qx qy qz qw)) (width 0.05))))))",
    )
    .expect("count query parses");
    let mut pass = true;
    let mut notes = Vec::new();
    for (extent_mm, expected) in [(250, 5), (240, 4)] {
        let ep = scenarios::episode(&format!("retail-facing-{}", extent_mm / 5))
            .unwrap_or_else(|| scenarios::retail_facing_episode(extent_mm / 5));
        let mut engine = Engine::new(&reg, &robot);
        let mut belief = BeliefState::new();
        let counts = match engine.answer_query(&q, &ep, &mut belief).map(|a| a.detail) {
            Ok(Detail::Counts(c)) => c.into_iter().map(|(_, n)| n).collect::<Vec<_>>(),
            other => {
                notes.push(format!("{extent_mm} mm: {other:?}"));
                pass = false;
                continue;
            }
        };
        pass &= counts == [expected];
        notes.push(format!("{extent_mm} mm -> {counts:?}"));
    }
    outcome(pass, notes.join(", "))
}

fn determinism() -> Outcome {
    let (reg, robot) = kitchen();
    let ep = scenarios::episode("pick-place-15").expect("shipped episode");
    let run = || -> Result<String, EngineError> {
        let mut engine = Engine::new(&reg, &robot)
            .with_seed(11)
            .with_filters(FilterConfig::on(&ep.task_regions));
        let base = engine.planner().continuous_base()?;
        let mut belief = BeliefState::new();
        engine.run_continuous(&ep, &base, &mut belief)?;
        let q = parse_query("(detect (an object (shape round)))").expect("query parses");
        engine.answer_query(&q, &ep, &mut belief)?;
        Ok(belief.dump())
    };
    match (run(), run()) {
        (Ok(a), Ok(b)) => outcome(a == b, format!("{} bytes, identical: {}", a.len(), a == b)),
        (a, b) => outcome(false, format!("{:?} / {:?}", a.err(), b.err())),
    }
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("pipeline reproduction", pipeline_reproduction),
        ("planner oracle equivalence", planner_oracle),
        ("query equivalence", query_equivalence),
        ("determiner contract", determiner_contract),
        ("fusion fixture", fusion_fixture),
        ("pick-and-place filters", pick_and_place_filters),
        ("segmentation recovery", segmentation_recovery),
        ("subsumption properties", subsumption_properties),
        ("parser round trip", parser_round_trip),
        ("compound count", compound_count),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {verdict} {name}: {} [{:.2?}]",
            i + 1,
            o.detail,
            start.elapsed()
        );
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
