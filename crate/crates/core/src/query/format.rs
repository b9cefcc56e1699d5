use std::fmt::Write;

use super::{Determiner, ObjectDescription, Query, QueryValue};
use crate::sexpr;

/// Canonical text for `q`; `parse_query(format_query(q)) == q`.
pub fn format_query(q: &Query) -> String {
    let mut out = String::new();
    match q {
        Query::Detect(d) => {
            out.push_str("(detect ");
            description(&mut out, d);
            out.push(')');
        }
        Query::Inspect { uid, attributes } => {
            let _ = write!(out, "(inspect #{uid}");
            for a in attributes {
                let _ = write!(out, " :{a}");
            }
            out.push(')');
        }
        Query::Compound(c) => {
            let _ = write!(out, "({} ", c.verb.keyword());
            if c.direct {
                description(&mut out, &c.inner);
            } else {
                out.push('(');
                for w in &c.wrapper {
                    let _ = write!(out, "{w} ");
                }
                out.push_str("(detect ");
                description(&mut out, &c.inner);
                out.push_str("))");
            }
            out.push(')');
        }
    }
    out
}

fn description(out: &mut String, d: &ObjectDescription) {
    let _ = write!(out, "({} {}", d.determiner.keyword(), d.kind.keyword());
    for c in &d.constraints {
        let _ = write!(out, " ({} ", c.attribute);
        value(out, &c.value);
        out.push(')');
    }
    out.push(')');
}

fn symbol(out: &mut String, s: &str) {
    // Determiner words are quoted so a data list never reads back as a description.
    if Determiner::from_keyword(s).is_some() {
        let _ = sexpr::write_quoted(out, s);
    } else {
        let _ = sexpr::write_symbol(out, s);
    }
}

fn value(out: &mut String, v: &QueryValue) {
    match v {
        QueryValue::Symbol(s) => symbol(out, s),
        QueryValue::Number(n) => {
            let _ = write!(out, "{n}");
        }
        QueryValue::List(items) => {
            out.push('(');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                value(out, item);
            }
            out.push(')');
        }
        QueryValue::Description(d) => description(out, d),
        QueryValue::Relation {
            preposition,
            target,
        } => {
            let _ = write!(out, "{preposition} ");
            description(out, target);
        }
    }
}
