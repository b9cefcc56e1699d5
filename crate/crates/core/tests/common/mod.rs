//! Generators shared by the property tests and the acceptance run.
#![allow(dead_code)]

use std::sync::Arc;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use percept_core::cas::BASE_TYPES;
use percept_core::ontology::RobotProfile;
use percept_core::planner::Need;
use percept_core::query::{
    Compound, Constraint, Determiner, Kind, ObjectDescription, Query, QueryValue, Verb,
    DEFAULT_ATTRIBUTES, NESTING_ATTRIBUTES,
};
use percept_core::registry::{AnnotatorDescriptor, ComponentKind, Process, Registry};
use percept_core::shipped;

// ---- query ASTs ----

fn word() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_-]{0,7}".prop_filter("not a determiner", |s| {
        Determiner::from_keyword(s).is_none()
    })
}

fn symbol() -> impl Strategy<Value = String> {
    prop_oneof![
        word(),
        "[A-Z][A-Za-z0-9' _#-]{0,10}",
        Just("a".to_string()),
        Just("the".to_string()),
    ]
}

fn number() -> impl Strategy<Value = f64> {
    prop_oneof![
        (-1000i32..1000).prop_map(f64::from),
        (-1.0e6f64..1.0e6).prop_filter("finite", |n| n.is_finite()),
    ]
}

fn plain_value() -> impl Strategy<Value = QueryValue> {
    let leaf = prop_oneof![
        symbol().prop_map(QueryValue::Symbol),
        number().prop_map(QueryValue::Number),
    ];
    leaf.prop_recursive(2, 8, 4, |inner| {
        prop::collection::vec(inner, 0..4).prop_map(QueryValue::List)
    })
}

fn determiner() -> impl Strategy<Value = Determiner> {
    prop_oneof![
        Just(Determiner::A),
        Just(Determiner::An),
        Just(Determiner::The)
    ]
}

fn top_kind() -> impl Strategy<Value = Kind> {
    prop_oneof![
        Just(Kind::Object),
        Just(Kind::ObjectPart),
        Just(Kind::Scene)
    ]
}

fn nested_kind() -> impl Strategy<Value = Kind> {
    prop_oneof![top_kind(), word().prop_map(Kind::Named)]
}

fn flat_constraint() -> impl Strategy<Value = Constraint> {
    (
        prop::sample::select(DEFAULT_ATTRIBUTES.to_vec()),
        plain_value(),
    )
        .prop_map(|(a, v)| Constraint::new(a, v))
}

fn description(depth: u32, top: bool) -> BoxedStrategy<ObjectDescription> {
    let kind = if top {
        top_kind().boxed()
    } else {
        nested_kind().boxed()
    };
    let constraint = if depth == 0 {
        flat_constraint().boxed()
    } else {
        let nested = (
            prop::sample::select(NESTING_ATTRIBUTES.to_vec()),
            prop::option::of(word()),
            description(depth - 1, false),
        )
            .prop_map(|(a, prep, d)| {
                let v = match prep {
                    Some(preposition) => QueryValue::Relation {
                        preposition,
                        target: Box::new(d),
                    },
                    None => QueryValue::Description(Box::new(d)),
                };
                Constraint::new(a, v)
            });
        prop_oneof![3 => flat_constraint(), 1 => nested].boxed()
    };
    (determiner(), kind, prop::collection::vec(constraint, 0..4))
        .prop_map(|(determiner, kind, constraints)| ObjectDescription {
            determiner,
            kind,
            constraints,
        })
        .boxed()
}

/// Arbitrary well-formed queries.
pub fn query() -> impl Strategy<Value = Query> {
    let verb = prop_oneof![Just(Verb::Track), Just(Verb::Scan), Just(Verb::Count)];
    let wrapper = prop::collection::vec(word(), 0..3);
    prop_oneof![
        3 => description(2, true).prop_map(Query::Detect),
        1 => (word(), prop::collection::vec(prop::sample::select(DEFAULT_ATTRIBUTES.to_vec()), 1..4))
            .prop_map(|(uid, attrs)| Query::Inspect {
                uid,
                attributes: attrs.into_iter().map(str::to_string).collect(),
            }),
        2 => (verb, wrapper, any::<bool>(), description(1, true)).prop_map(
            |(verb, wrapper, direct, inner)| {
                Query::Compound(Compound {
                    verb,
                    wrapper: if direct { Vec::new() } else { wrapper },
                    direct,
                    inner,
                })
            }
        ),
    ]
}

// ---- random registries ----

pub const CAPABILITIES: [&str; 2] = ["Perceive3DDepthCapability", "PerceiveColorCapability"];
pub const SYNTHETIC_TYPES: usize = 8;

pub fn synthetic_type(i: usize) -> String {
    format!("SynthAnnotation{i}")
}

fn synthetic_ontology() -> String {
    (0..SYNTHETIC_TYPES)
        .map(|i| {
            format!(
                "(class {} (parents SemanticAnnotation))\n",
                synthetic_type(i)
            )
        })
        .collect()
}

/// A small registry over synthetic types, with a robot and a request.
pub struct RandomCase {
    pub registry: Registry,
    pub robot: RobotProfile,
    pub needs: Vec<Need>,
}

fn noop() -> Process {
    Arc::new(|_, _| Ok(()))
}

/// Inputs of an annotator only use types below the lowest type it outputs,
/// so the dependency graph is acyclic by construction.
pub fn random_case(rng: &mut ChaCha8Rng) -> RandomCase {
    let kb = shipped::load(&[&synthetic_ontology()]).expect("synthetic ontology loads");
    let mut registry = Registry::new(kb);
    let n = rng.gen_range(1..=8);
    for a in 0..n {
        let lowest = rng.gen_range(0..SYNTHETIC_TYPES);
        let mut outputs = vec![synthetic_type(lowest)];
        if rng.gen_bool(0.3) && lowest + 1 < SYNTHETIC_TYPES {
            outputs.push(synthetic_type(rng.gen_range(lowest + 1..SYNTHETIC_TYPES)));
        }
        let mut inputs: Vec<String> = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            if lowest > 0 && rng.gen_bool(0.8) {
                inputs.push(synthetic_type(rng.gen_range(0..lowest)));
            } else {
                inputs.push(BASE_TYPES.choose(rng).expect("non-empty").to_string());
            }
        }
        inputs.sort();
        inputs.dedup();
        let caps: Vec<&str> = CAPABILITIES
            .iter()
            .copied()
            .filter(|_| rng.gen_bool(0.3))
            .collect();
        let kind = if rng.gen_bool(0.5) {
            ComponentKind::HypothesisGenerator
        } else {
            ComponentKind::Annotator
        };
        let input_refs: Vec<&str> = inputs.iter().map(String::as_str).collect();
        let output_refs: Vec<&str> = outputs.iter().map(String::as_str).collect();
        let mut d = AnnotatorDescriptor::new(&format!("Synth{a}"), kind)
            .inputs(&input_refs)
            .outputs(&output_refs)
            .capabilities(&caps);
        if rng.gen_bool(0.15) {
            d = d.task_specific();
        }
        registry
            .register(d, noop())
            .expect("acyclic by construction");
    }
    let robot = RobotProfile::new(
        "Random",
        CAPABILITIES.iter().copied().filter(|_| rng.gen_bool(0.7)),
    );
    let mut types: Vec<usize> = (0..SYNTHETIC_TYPES).collect();
    types.shuffle(rng);
    let needs = types[..rng.gen_range(1..=3)]
        .iter()
        .map(|&t| Need::of_type(&synthetic_type(t)))
        .collect();
    RandomCase {
        registry,
        robot,
        needs,
    }
}

pub fn covers(registry: &Registry, names: &[&str], needs: &[Need]) -> bool {
    needs.iter().all(|need| {
        names.iter().any(|n| {
            registry.descriptor(n).is_some_and(|d| {
                d.outputs
                    .iter()
                    .any(|o| registry.satisfies(o, &need.type_name))
            })
        })
    })
}

/// Exhaustive search over orderings of subsets for a pipeline that passes
/// `validate_pipeline` and covers every need. Orderings whose prefix is
/// already invalid are cut, which loses nothing: validity is prefix-closed.
pub fn exhaustive_search(case: &RandomCase) -> Option<Vec<String>> {
    let names: Vec<&str> = case.registry.names().collect();
    let mut used = vec![false; names.len()];
    let mut seq: Vec<&str> = Vec::new();
    fn go<'n>(
        case: &RandomCase,
        names: &[&'n str],
        used: &mut [bool],
        seq: &mut Vec<&'n str>,
    ) -> bool {
        if percept_core::planner::validate_pipeline(&case.registry, seq, &case.robot).is_err() {
            return false;
        }
        if covers(&case.registry, seq, &case.needs) {
            return true;
        }
        for i in 0..names.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            seq.push(names[i]);
            if go(case, names, used, seq) {
                return true;
            }
            seq.pop();
            used[i] = false;
        }
        false
    }
    go(case, &names, &mut used, &mut seq).then(|| seq.iter().map(|s| s.to_string()).collect())
}
