use super::*;
use crate::cas::{Annotation, SemanticRegion};
use crate::geometry::PixelRect;
use crate::ontology::Value;

fn detect(text: &str) -> ObjectDescription {
    match parse_query(text).unwrap() {
        Query::Detect(d) => d,
        other => panic!("expected detect, got {other:?}"),
    }
}

#[test]
fn drawer_query_structure() {
    let d = detect("(detect (an object (shape flat) (color black) (location in (a container (category drawer#3)))))");
    assert_eq!(d.determiner, Determiner::An);
    assert_eq!(d.kind, Kind::Object);
    let names: Vec<&str> = d.constraints.iter().map(|c| c.attribute.as_str()).collect();
    assert_eq!(names, ["shape", "color", "location"]);
    let QueryValue::Relation {
        preposition,
        target,
    } = &d.constraints[2].value
    else {
        panic!("location should be a relation");
    };
    assert_eq!(preposition, "in");
    assert_eq!(target.kind, Kind::Named("container".into()));
    assert_eq!(target.symbol_of("category"), Some("drawer#3"));
}

#[test]
fn inspect_forms() {
    let q = parse_query("(inspect #obj_id :pose :grasp-points)").unwrap();
    assert_eq!(
        q,
        Query::Inspect {
            uid: "obj_id".into(),
            attributes: vec!["pose".into(), "grasp-points".into()]
        }
    );
    let q = parse_query("(inspect (#uid :pose,:obj-part))").unwrap();
    assert_eq!(
        q,
        Query::Inspect {
            uid: "uid".into(),
            attributes: vec!["pose".into(), "obj-part".into()]
        }
    );
    assert!(matches!(
        parse_query("(inspect #x)"),
        Err(QueryError::Arity { .. })
    ));
}

#[test]
fn track_with_inline_command() {
    let expected = parse_query("(track (an object (type 'Spatula') (command 'start')))").unwrap();
    let inline = parse_query("(track (an object (type `Spatula`) command `start`))").unwrap();
    assert_eq!(expected, inline);
    let Query::Compound(c) = expected else {
        panic!()
    };
    assert_eq!(c.verb, Verb::Track);
    assert!(c.direct);
    assert_eq!(c.inner.symbol_of("type"), Some("Spatula"));
    assert_eq!(c.inner.symbol_of("command"), Some("start"));
}

#[test]
fn wrapped_compounds() {
    let Query::Compound(c) =
        parse_query("(scan (for object (detect (an object ((type 'Shelf') (command 'start'))))))")
            .unwrap()
    else {
        panic!()
    };
    assert_eq!(c.wrapper, ["for", "object"]);
    assert_eq!(c.inner.constraints.len(), 2);
    let q = parse_query("(count (object (detect (an object ((type 'ANXXXX') (pose (x y z qx qy qz qw)) (width 0.05))))))").unwrap();
    assert_eq!(
        required_attributes(&q).into_iter().collect::<Vec<_>>(),
        ["pose", "type", "width"]
    );
}

#[test]
fn unknown_attribute_suggests() {
    let err = parse_query("(detect (an object (colour red)))").unwrap_err();
    assert_eq!(
        err,
        QueryError::UnknownAttribute {
            name: "colour".into(),
            suggestion: Some("color".into()),
            pos: crate::sexpr::Pos {
                line: 1,
                column: 21
            }
        }
    );
}

#[test]
fn syntax_errors() {
    assert!(matches!(
        parse_query("(detect (an object)"),
        Err(QueryError::Syntax(_))
    ));
    assert!(matches!(
        parse_query("(find (an object))"),
        Err(QueryError::Syntax(_))
    ));
    assert!(matches!(
        parse_query("(detect (some object))"),
        Err(QueryError::Syntax(_))
    ));
    assert!(matches!(
        parse_query("(detect (an object (shape)))"),
        Err(QueryError::Arity { .. })
    ));
    // nested descriptions only where a location-like attribute expects one
    assert!(parse_query("(detect (an object (shape (a box))))").is_err());
    assert!(parse_query("(detect (a thing))").is_err());
}

#[test]
fn required_attributes_walk_nesting() {
    let q = parse_query("(detect (an object (shape flat) (color black) (location in (a container (category drawer#3)))))").unwrap();
    let attrs: Vec<String> = required_attributes(&q).into_iter().collect();
    assert_eq!(attrs, ["category", "color", "location", "shape"]);
    assert!(required_attributes(&parse_query("(detect (an object))").unwrap()).is_empty());
}

#[test]
fn format_round_trips_reference_forms() {
    for text in [
        "(detect (an object (shape round) (color black) (location (a location (on (a table (category table-top#3)))))))",
        "(track (an object (type 'Spatula') command 'start'))",
        "(inspect #obj_id :pose :grasp-points)",
        "(detect (an object (type \"Kellogg's\")))",
        "(detect (the object (pose (1 2 3 0 0 0 1)) (capacity 2)))",
    ] {
        let q = parse_query(text).unwrap();
        assert_eq!(parse_query(&format_query(&q)).unwrap(), q, "{text}");
    }
}

#[test]
fn determiners() {
    let one = vec!["o1".to_string()];
    let two = vec!["o1".to_string(), "o2".to_string()];
    assert_eq!(resolve_determiner(Determiner::The, one.clone()), Ok(one));
    assert_eq!(
        resolve_determiner(Determiner::The, two.clone()),
        Err(ResolutionError::Ambiguity(two))
    );
    assert_eq!(
        resolve_determiner(Determiner::The, vec![]),
        Err(ResolutionError::NotFound)
    );
    assert_eq!(resolve_determiner(Determiner::An, vec![]), Ok(vec![]));
}

fn classified(label: &str) -> Annotation {
    Annotation::new("ClassificationAnnotation")
        .with("classLabel", Value::symbol(label))
        .with("classConfidence", Value::Real(0.9))
        .with("classifierName", Value::symbol("knn"))
}

#[test]
fn matching_uses_subsumption_and_aliases() {
    let kb = crate::shipped::kitchen_kb();
    let ctx = MatchContext {
        tbox: &kb.tbox,
        semantic_map: &[],
    };
    let cereal = [
        classified("KnusperHonig"),
        Annotation::new("ShapeAnnotation").with("shape", Value::symbol("box")),
    ];
    let m = |text: &str, anns: &[Annotation]| match_object(&detect(text), anns, &ctx);
    assert!(m("(detect (an object (class 'KnusperHonig')))", &cereal));
    assert!(m("(detect (an object (type 'Food')))", &cereal));
    assert!(m("(detect (an object (type Cereal)))", &cereal));
    assert!(!m("(detect (an object (type Container)))", &cereal));
    assert!(!m("(detect (an object (class Cereal)))", &cereal));
    let round = [Annotation::new("ShapeAnnotation").with("shape", Value::symbol("round"))];
    assert!(!m("(detect (an object (shape box)))", &round));
    assert!(!m("(detect (an object (type Ghost)))", &cereal));
}

#[test]
fn matching_capacity_and_location() {
    let kb = crate::shipped::kitchen_kb();
    let map = [
        SemanticRegion {
            label: "drawer#3".into(),
            class: "Drawer".into(),
            rect: PixelRect::new(0, 0, 10, 10),
        },
        SemanticRegion {
            label: "table-top#3".into(),
            class: "Table".into(),
            rect: PixelRect::new(10, 0, 20, 10),
        },
    ];
    let ctx = MatchContext {
        tbox: &kb.tbox,
        semantic_map: &map,
    };
    let obj = [
        Annotation::new("VolumeAnnotation").with("capacity", Value::Real(2.5)),
        Annotation::new("LocationAnnotation").with("location", Value::symbol("drawer#3")),
    ];
    let m = |text: &str| match_object(&detect(text), &obj, &ctx);
    assert!(m("(detect (an object (capacity 2)))"));
    assert!(!m("(detect (an object (capacity 3)))"));
    assert!(m(
        "(detect (an object (location in (a container (category drawer#3)))))"
    ));
    assert!(!m(
        "(detect (an object (location in (a container (category drawer#1)))))"
    ));
    assert!(m(
        "(detect (an object (part-of (an object (type 'Drawer')))))"
    ));
    assert!(!m(
        "(detect (an object (location (a location (on (a table (category table-top#3)))))))"
    ));
}
