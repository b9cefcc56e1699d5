use super::*;
use crate::query::parse_query;
use crate::registry::Registry;
use crate::shipped;

fn kitchen() -> Registry {
    Registry::shipped(shipped::kitchen_kb()).unwrap()
}

const SIX: [&str; 6] = [
    "PlaneAnnotator",
    "PointCloudClusterExtractor",
    "NormalEstimator",
    "PrimitiveShapeAnnotator",
    "ClusterColorHistogramCalculator",
    "ClusterLocationAnnotator",
];

#[test]
fn shape_color_location_yields_the_six_annotator_pipeline() {
    let reg = kitchen();
    let robot = shipped::pr2();
    let planner = Planner::new(&reg, &robot);
    let plan = planner
        .plan_for_attributes(&["color", "shape", "location"])
        .unwrap();
    assert_eq!(plan.names(), SIX);
    assert!(!plan.continuous);
    let q = parse_query(
        "(detect (an object (shape round) (color black) (location (a location (on (a table (category table-top#3)))))))",
    )
    .unwrap();
    assert_eq!(planner.plan_for_query(&q).unwrap().names(), SIX);
}

#[test]
fn provenance_names_the_reason_for_each_step() {
    let reg = kitchen();
    let robot = shipped::pr2();
    let plan = Planner::new(&reg, &robot)
        .plan_for_attributes(&["shape"])
        .unwrap();
    let step = |n: &str| {
        plan.steps
            .iter()
            .find(|s| s.annotator == n)
            .unwrap()
            .reasons
            .clone()
    };
    assert_eq!(
        step("PrimitiveShapeAnnotator"),
        [Reason::QueryAttribute("(shape)".into())]
    );
    assert_eq!(
        step("NormalEstimator"),
        [Reason::PreconditionOf("PrimitiveShapeAnnotator".into())]
    );
    assert_eq!(
        step("PlaneAnnotator"),
        [Reason::PreconditionOf("PointCloudClusterExtractor".into())]
    );
    assert!(plan
        .explain()
        .contains("precondition-of PrimitiveShapeAnnotator"));
}

#[test]
fn empty_request_keeps_the_continuous_base() {
    let reg = kitchen();
    let robot = shipped::pr2();
    let planner = Planner::new(&reg, &robot);
    let plan = planner.plan_for_attributes::<&str>(&[]).unwrap();
    assert_eq!(plan.names(), CONTINUOUS_BASE);
    assert!(plan.continuous);
    let plan = planner.plan_for_attributes(&["color", "pose"]).unwrap();
    assert!(plan.continuous);
}

#[test]
fn handle_query_selects_the_task_specific_detector() {
    let reg = kitchen();
    let robot = shipped::pr2();
    let q = parse_query(
        "(detect ( an object ( (type 'Handle') (part-of (an object ( type 'Drawer'))) )))",
    )
    .unwrap();
    let plan = Planner::new(&reg, &robot).plan_for_query(&q).unwrap();
    assert_eq!(plan.names(), ["HandleDetector"]);
    assert_eq!(
        plan.steps[0].reasons,
        [
            Reason::QueryAttribute("(type Handle)".into()),
            Reason::QueryAttribute("(part-of)".into())
        ]
    );
}

#[test]
fn class_queries_go_through_the_classifier() {
    let reg = kitchen();
    let robot = shipped::pr2();
    let q = parse_query("(detect ( an object( (type 'Food'))))").unwrap();
    let plan = Planner::new(&reg, &robot).plan_for_query(&q).unwrap();
    assert_eq!(plan.names().last(), Some(&"ClassificationAnnotator"));
    assert!(plan.contains("Cluster3DGeometryAnnotator"));
    assert!(!plan.contains("HandleDetector"));
}

#[test]
fn flat_and_transparent_values_add_generators() {
    let reg = kitchen();
    let robot = shipped::pr2();
    let planner = Planner::new(&reg, &robot);
    let flat = planner
        .plan_for_query(&parse_query("(detect (an object (shape flat) (color black)))").unwrap())
        .unwrap();
    assert!(flat.contains("ImageSegmentation"));
    let glass = planner.plan_for_object("Glass").unwrap();
    assert!(glass.contains("TransparentSegmentation"));
    assert!(glass.contains("PrimitiveShapeAnnotator"));
}

#[test]
fn missing_depth_is_reported() {
    let reg = kitchen();
    let robot = shipped::no_depth();
    let planner = Planner::new(&reg, &robot);
    assert_eq!(
        planner.plan_for_attributes(&["shape"]),
        Err(PlanError::CapabilityMissing {
            annotator: "PrimitiveShapeAnnotator".into(),
            capability: "Perceive3DDepthCapability".into()
        })
    );
    assert!(matches!(
        planner.plan_for_attributes(&["color"]),
        Err(PlanError::CapabilityMissing { .. })
    ));
}

#[test]
fn object_planning_errors() {
    let reg = kitchen();
    let robot = shipped::pr2();
    let planner = Planner::new(&reg, &robot);
    assert_eq!(
        planner.plan_for_object("Unicorn"),
        Err(PlanError::UnknownObject("Unicorn".into()))
    );
    assert_eq!(
        planner.plan_for_object("Handle"),
        Err(PlanError::NoDescription("Handle".into()))
    );
    // No annotator can tell a medium-sized object apart.
    assert!(matches!(
        planner.plan_for_object("MondaminPancakeMix"),
        Err(PlanError::NoProvider(_))
    ));
    let q = parse_query("(detect (an object (color red)))").unwrap();
    assert!(planner.plan_for_query(&q).is_ok());
    let scene = Query::Detect(crate::query::ObjectDescription::new(
        crate::query::Determiner::A,
        Kind::Scene,
    ));
    assert!(matches!(
        planner.plan_for_query(&scene),
        Err(PlanError::Unsupported(_))
    ));
}

#[test]
fn subclasses_are_planned_individually() {
    let reg = kitchen();
    let robot = shipped::pr2();
    let plans = Planner::new(&reg, &robot)
        .plan_for_subclasses("Container")
        .unwrap();
    assert!(plans["Cup"].is_ok());
    assert!(plans["Pot"].is_ok());
    assert!(!plans.contains_key("Container"));
}

#[test]
fn inspection_rules() {
    let reg = kitchen();
    let robot = shipped::pr2();
    let planner = Planner::new(&reg, &robot);
    let plan = planner.plan_inspection(Some("Pot"), &["volume"]).unwrap();
    assert!(plan.contains("SacModelAnnotator"));
    assert!(plan
        .steps
        .iter()
        .any(|s| s.reasons.contains(&Reason::Rule("detect-volume".into()))));
    assert!(matches!(
        planner.plan_inspection(Some("KnusperHonig"), &["volume"]),
        Err(PlanError::RuleNotApplicable(_))
    ));
    let parts = planner
        .plan_inspection(Some("Cup"), &["pose", "obj-part"])
        .unwrap();
    assert!(parts.contains("PartSegmenter"));
    assert!(parts.contains("ClassificationAnnotator"));
}

#[test]
fn count_pipeline_ends_with_the_counter() {
    let reg = Registry::shipped(shipped::retail_kb()).unwrap();
    let robot = shipped::pr2();
    let q = parse_query(
        "(count (object (detect ( an object ( (type 'ANXXXX') (pose (x y z qx qy qz qw)) (width 0.05) )))))",
    )
    .unwrap();
    let plan = Planner::new(&reg, &robot).plan_for_query(&q).unwrap();
    assert_eq!(plan.names().last(), Some(&"VolumetricCounter"));
    assert!(plan.contains("ClassificationAnnotator"));
    validate_pipeline(&reg, &plan.names(), &robot).unwrap();
}

#[test]
fn validation_and_dependents() {
    let reg = kitchen();
    let robot = shipped::pr2();
    assert!(matches!(
        validate_pipeline(
            &reg,
            &["PointCloudClusterExtractor", "PlaneAnnotator"],
            &robot
        ),
        Err(PlanError::InvalidOrder { .. })
    ));
    assert!(matches!(
        validate_pipeline(&reg, &["PlaneAnnotator"], &shipped::no_depth()),
        Err(PlanError::CapabilityMissing { .. })
    ));
    let planner = Planner::new(&reg, &robot);
    let base = planner.plan_for_attributes(&["shape"]).unwrap();
    let wider = planner.plan_with_dependents(&base).unwrap();
    assert!(wider.contains("ClassificationAnnotator"));
    assert!(!wider.contains("GraspPointStub"));
    validate_pipeline(&reg, &wider.names(), &robot).unwrap();
    feasible_on_robot(&reg, &wider, &robot).unwrap();
}
