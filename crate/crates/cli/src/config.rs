//! `--config` files: s-expression blocks overriding annotator parameters,
//! frame filters and identity matching.
//!
//! ```text
//! (annotator PointCloudClusterExtractor (min-pixels 30))
//! (filters (static-epsilon-mm 3) (task-regions table-top#3))
//! (matching (threshold 0.4))
//! ```

use anyhow::{anyhow, bail, Result};
use percept_core::engine::{FilterConfig, MatchConfig};
use percept_core::registry::Registry;
use percept_core::sexpr::{self, Node};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Default)]
pub struct Overrides {
    pub params: Vec<(String, String, f64)>,
    pub filters: Map<String, Value>,
    pub matching: Map<String, Value>,
}

fn value_of(nodes: &[Node]) -> Result<Value> {
    let one = |n: &Node| -> Result<Value> {
        if let Some(x) = n.number() {
            return Ok(serde_json::json!(x));
        }
        match n.text() {
            Some("true") => Ok(Value::Bool(true)),
            Some("false") => Ok(Value::Bool(false)),
            Some(s) => Ok(Value::String(s.to_string())),
            None => Err(anyhow!("{}: expected a number or a word", n.pos)),
        }
    };
    match nodes {
        [single] => one(single),
        many => many
            .iter()
            .map(one)
            .collect::<Result<Vec<_>>>()
            .map(Value::Array),
    }
}

/// `(name value...)` pairs of a block body.
fn pairs(block: &[Node]) -> Result<Vec<(String, &[Node])>> {
    block
        .iter()
        .map(|n| {
            let items = n.list().unwrap_or_default();
            match items.split_first() {
                Some((key, rest)) if key.symbol().is_some() && !rest.is_empty() => {
                    Ok((key.symbol().unwrap_or_default().to_string(), rest))
                }
                _ => Err(anyhow!("{}: expected `(<name> <value>)`", n.pos)),
            }
        })
        .collect()
}

pub fn parse(text: &str) -> Result<Overrides> {
    let mut out = Overrides::default();
    for block in sexpr::parse_all(text)? {
        let items = block.list().unwrap_or_default();
        match items.first().and_then(Node::symbol) {
            Some("annotator") => {
                let name = items
                    .get(1)
                    .and_then(Node::symbol)
                    .ok_or_else(|| anyhow!("{}: `annotator` needs a name", block.pos))?;
                for (param, value) in pairs(&items[2..])? {
                    let v = value_of(value)?
                        .as_f64()
                        .ok_or_else(|| anyhow!("{}: `{param}` must be a number", block.pos))?;
                    out.params
                        .push((name.to_string(), param.replace('-', "_"), v));
                }
            }
            Some(section @ ("filters" | "matching")) => {
                let target = if section == "filters" {
                    &mut out.filters
                } else {
                    &mut out.matching
                };
                for (key, value) in pairs(&items[1..])? {
                    target.insert(key.replace('-', "_"), value_of(value)?);
                }
            }
            _ => bail!(
                "{}: expected an `annotator`, `filters` or `matching` block",
                block.pos
            ),
        }
    }
    Ok(out)
}

/// `base` with the keys of `changes` replaced. Unknown keys are errors.
fn merged<T: Serialize + DeserializeOwned>(
    base: &T,
    changes: &Map<String, Value>,
    what: &str,
) -> Result<T> {
    let mut json = serde_json::to_value(base)?;
    let fields = json
        .as_object_mut()
        .expect("config structs serialize to objects");
    for (k, v) in changes {
        if !fields.contains_key(k) {
            let known: Vec<String> = fields.keys().map(|k| k.replace('_', "-")).collect();
            bail!(
                "unknown {what} setting `{}` (known: {})",
                k.replace('_', "-"),
                known.join(", ")
            );
        }
        let v = match (&fields[k], v) {
            // a single word where a list is expected
            (Value::Array(_), Value::String(_)) => Value::Array(vec![v.clone()]),
            _ => v.clone(),
        };
        fields.insert(k.clone(), v);
    }
    serde_json::from_value(json).map_err(|e| anyhow!("bad {what} setting: {e}"))
}

impl Overrides {
    pub fn apply_params(&self, registry: &mut Registry) -> Result<()> {
        for (annotator, param, value) in &self.params {
            registry.set_param(annotator, param, *value)?;
        }
        Ok(())
    }

    pub fn filters(&self, base: FilterConfig) -> Result<FilterConfig> {
        let f = merged(&base, &self.filters, "filter")?;
        f.validate().map_err(|e| anyhow!(e))?;
        Ok(f)
    }

    pub fn matching(&self, base: MatchConfig) -> Result<MatchConfig> {
        let m = merged(&base, &self.matching, "matching")?;
        m.validate().map_err(|e| anyhow!(e))?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_are_read() {
        let o = parse(
            "; tuned for the demo\n\
             (annotator PointCloudClusterExtractor (min-pixels 30))\n\
             (filters (static-epsilon-mm 3) (motion-enabled false) (task-regions a b))\n\
             (matching (threshold 0.25))",
        )
        .unwrap();
        assert_eq!(
            o.params,
            [(
                "PointCloudClusterExtractor".into(),
                "min_pixels".into(),
                30.0
            )]
        );
        let f = o.filters(FilterConfig::default()).unwrap();
        assert_eq!(f.static_epsilon_mm, 3.0);
        assert!(!f.motion_enabled);
        assert_eq!(f.task_regions, ["a", "b"]);
        assert_eq!(o.matching(MatchConfig::default()).unwrap().threshold, 0.25);
    }

    #[test]
    fn unknown_settings_are_rejected() {
        let o = parse("(filters (max-wobble 3))").unwrap();
        let e = o.filters(FilterConfig::default()).unwrap_err().to_string();
        assert!(e.contains("max-wobble") && e.contains("max-blur"), "{e}");
        assert!(parse("(pipeline (x 1))").is_err());
        assert!(parse("(annotator X (p fast))").is_err());
        let bad = parse("(matching (threshold -1))").unwrap();
        assert!(bad.matching(MatchConfig::default()).is_err());
    }
}
