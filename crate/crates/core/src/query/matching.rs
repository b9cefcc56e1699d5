use super::{annotation_for, ObjectDescription, QueryValue, NESTING_ATTRIBUTES};
use crate::cas::{Annotation, SemanticRegion};
use crate::ontology::TBox;

/// Background knowledge a description is evaluated against.
#[derive(Debug, Clone, Copy)]
pub struct MatchContext<'a> {
    pub tbox: &'a TBox,
    pub semantic_map: &'a [SemanticRegion],
}

/// True iff every constraint of `desc` holds for an object carrying
/// `annotations`. Constraints that cannot be evaluated are false.
pub fn match_object(
    desc: &ObjectDescription,
    annotations: &[Annotation],
    ctx: &MatchContext<'_>,
) -> bool {
    desc.constraints
        .iter()
        .all(|c| constraint_holds(&c.attribute, &c.value, annotations, ctx))
}

fn values<'a>(
    annotations: &'a [Annotation],
    type_name: &'a str,
    property: &'a str,
) -> impl Iterator<Item = &'a crate::ontology::Value> {
    annotations
        .iter()
        .filter(move |a| a.type_name == type_name)
        .filter_map(move |a| a.get(property))
}

fn labels(annotations: &[Annotation]) -> impl Iterator<Item = &str> {
    values(annotations, "ClassificationAnnotation", "classLabel").filter_map(|v| v.as_symbol())
}

fn locations(annotations: &[Annotation]) -> impl Iterator<Item = &str> {
    values(annotations, "LocationAnnotation", "location").filter_map(|v| v.as_symbol())
}

fn constraint_holds(
    attribute: &str,
    value: &QueryValue,
    annotations: &[Annotation],
    ctx: &MatchContext<'_>,
) -> bool {
    match attribute {
        "type" => {
            let Some(wanted) = value.as_symbol().map(|s| ctx.tbox.resolve_alias(s)) else {
                return false;
            };
            ctx.tbox.contains_type(wanted)
                && labels(annotations).any(|l| ctx.tbox.subsumed(l, wanted))
        }
        "class" => value
            .as_symbol()
            .is_some_and(|wanted| labels(annotations).any(|l| l == wanted)),
        "capacity" | "volume" => value.as_number().is_some_and(|min| {
            values(annotations, "VolumeAnnotation", "capacity")
                .any(|v| v.as_real().is_some_and(|c| c >= min))
        }),
        "category" => value
            .as_symbol()
            .is_some_and(|wanted| locations(annotations).any(|l| l == wanted)),
        a if NESTING_ATTRIBUTES.contains(&a) => match value {
            QueryValue::Symbol(s) => locations(annotations).any(|l| l == s),
            QueryValue::Description(d) | QueryValue::Relation { target: d, .. } => {
                locations(annotations).any(|l| region_satisfies(d, l, ctx))
            }
            _ => false,
        },
        "material" => match value.as_symbol() {
            Some("transparent") => annotations
                .iter()
                .any(|a| a.type_name == "RsTransparentCluster"),
            Some("opaque") => !annotations
                .iter()
                .any(|a| a.type_name == "RsTransparentCluster"),
            _ => false,
        },
        // Task parameters rather than perceivable properties.
        "width" | "command" | "pose" | "grasp-points" => true,
        a => {
            let Some((type_name, property)) = annotation_for(a) else {
                return false;
            };
            match value {
                QueryValue::Symbol(s) => {
                    values(annotations, type_name, property).any(|v| v.as_symbol() == Some(s))
                }
                QueryValue::Number(n) => {
                    values(annotations, type_name, property).any(|v| v.as_real() == Some(*n))
                }
                _ => false,
            }
        }
    }
}

/// Evaluates a nested description against the semantic-map region `label`.
fn region_satisfies(desc: &ObjectDescription, label: &str, ctx: &MatchContext<'_>) -> bool {
    let classes: Vec<&str> = ctx
        .semantic_map
        .iter()
        .filter(|r| r.label == label)
        .map(|r| r.class.as_str())
        .collect();
    desc.constraints
        .iter()
        .all(|c| match (c.attribute.as_str(), &c.value) {
            ("category", QueryValue::Symbol(s)) => s == label,
            ("type" | "class", QueryValue::Symbol(s)) => {
                let wanted = ctx.tbox.resolve_alias(s);
                classes.iter().any(|cls| ctx.tbox.subsumed(cls, wanted))
            }
            (a, QueryValue::Symbol(s)) if NESTING_ATTRIBUTES.contains(&a) => s == label,
            (a, QueryValue::Description(d) | QueryValue::Relation { target: d, .. })
                if NESTING_ATTRIBUTES.contains(&a) =>
            {
                region_satisfies(d, label, ctx)
            }
            _ => false,
        })
}
