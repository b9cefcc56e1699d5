use super::{
    Compound, Constraint, Determiner, Kind, ObjectDescription, Query, QueryError, QueryValue, Verb,
    Vocabulary, NESTING_ATTRIBUTES,
};
use crate::sexpr::{self, Atom, Node, NodeKind, Pos, SyntaxError};

/// Parses a query against the default attribute vocabulary.
pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    parse_query_with(text, &Vocabulary::default())
}

pub fn parse_query_with(text: &str, vocabulary: &Vocabulary) -> Result<Query, QueryError> {
    let node = sexpr::parse_one(text)?;
    Parser { vocabulary }.query(&node)
}

fn syntax(pos: Pos, expected: &[&str], found: String) -> QueryError {
    QueryError::Syntax(SyntaxError {
        pos,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found,
    })
}

fn arity(form: &str, expected: &str, found: usize, pos: Pos) -> QueryError {
    QueryError::Arity {
        form: form.to_string(),
        expected: expected.to_string(),
        found,
        pos,
    }
}

fn is_description(node: &Node) -> bool {
    node.list()
        .and_then(|items| items.first())
        .and_then(Node::symbol)
        .and_then(Determiner::from_keyword)
        .is_some()
}

struct Parser<'v> {
    vocabulary: &'v Vocabulary,
}

impl Parser<'_> {
    fn query(&self, node: &Node) -> Result<Query, QueryError> {
        let Some(items) = node.list().filter(|i| !i.is_empty()) else {
            return Err(syntax(node.pos, &["`(`"], node.describe()));
        };
        let verbs = ["detect", "inspect", "track", "scan", "count"];
        match items[0].symbol() {
            Some("detect") => {
                let [desc] = &items[1..] else {
                    return Err(arity(
                        "detect",
                        "one description",
                        items.len() - 1,
                        node.pos,
                    ));
                };
                Ok(Query::Detect(self.description(desc, true)?))
            }
            Some("inspect") => self.inspect(node.pos, &items[1..]),
            Some(v) if Verb::from_keyword(v).is_some() => {
                let verb = Verb::from_keyword(v).expect("checked above");
                let [body] = &items[1..] else {
                    return Err(arity(v, "one task description", items.len() - 1, node.pos));
                };
                self.compound(verb, body)
            }
            _ => Err(syntax(items[0].pos, &verbs, items[0].describe())),
        }
    }

    fn inspect(&self, pos: Pos, rest: &[Node]) -> Result<Query, QueryError> {
        // Both `(inspect #uid :a :b)` and `(inspect (#uid :a :b))` are accepted.
        let flat: &[Node] = match rest {
            [single] if single.list().is_some() => single.list().unwrap_or_default(),
            _ => rest,
        };
        let Some((uid_node, attrs)) = flat.split_first() else {
            return Err(arity(
                "inspect",
                "an object id and at least one attribute",
                0,
                pos,
            ));
        };
        let uid = uid_node
            .symbol()
            .and_then(|s| s.strip_prefix('#'))
            .filter(|s| !s.is_empty())
            .ok_or_else(|| syntax(uid_node.pos, &["`#<object-id>`"], uid_node.describe()))?;
        if attrs.is_empty() {
            return Err(arity("inspect", "at least one attribute", 0, pos));
        }
        let mut attributes = Vec::new();
        for a in attrs {
            let name = a
                .symbol()
                .and_then(|s| s.strip_prefix(':'))
                .filter(|s| !s.is_empty())
                .ok_or_else(|| syntax(a.pos, &["`:<attribute>`"], a.describe()))?;
            self.check_attribute(name, a.pos)?;
            attributes.push(name.to_string());
        }
        Ok(Query::Inspect {
            uid: uid.to_string(),
            attributes,
        })
    }

    fn compound(&self, verb: Verb, body: &Node) -> Result<Query, QueryError> {
        if is_description(body) {
            return Ok(Query::Compound(Compound {
                verb,
                wrapper: Vec::new(),
                direct: true,
                inner: self.description(body, true)?,
            }));
        }
        let items = body.list().ok_or_else(|| {
            syntax(
                body.pos,
                &["description", "`(... (detect ...))`"],
                body.describe(),
            )
        })?;
        let Some((detect, words)) = items.split_last() else {
            return Err(syntax(body.pos, &["`(detect ...)`"], body.describe()));
        };
        let wrapper = words
            .iter()
            .map(|w| {
                w.symbol()
                    .map(str::to_string)
                    .ok_or_else(|| syntax(w.pos, &["word"], w.describe()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let inner = match detect.list() {
            Some([head, desc]) if head.symbol() == Some("detect") => {
                self.description(desc, true)?
            }
            _ => return Err(syntax(detect.pos, &["`(detect ...)`"], detect.describe())),
        };
        Ok(Query::Compound(Compound {
            verb,
            wrapper,
            direct: false,
            inner,
        }))
    }

    fn check_attribute(&self, name: &str, pos: Pos) -> Result<(), QueryError> {
        if self.vocabulary.contains(name) {
            Ok(())
        } else {
            Err(QueryError::UnknownAttribute {
                name: name.to_string(),
                suggestion: self.vocabulary.suggest(name),
                pos,
            })
        }
    }

    fn description(&self, node: &Node, top_level: bool) -> Result<ObjectDescription, QueryError> {
        let items = node
            .list()
            .ok_or_else(|| syntax(node.pos, &["`(<determiner> <kind> ...)`"], node.describe()))?;
        let determiner = items
            .first()
            .and_then(Node::symbol)
            .and_then(Determiner::from_keyword)
            .ok_or_else(|| {
                let found = items
                    .first()
                    .map(Node::describe)
                    .unwrap_or_else(|| "`)`".into());
                syntax(
                    items.first().map_or(node.pos, |n| n.pos),
                    &["a", "an", "the"],
                    found,
                )
            })?;
        let kind_node = items
            .get(1)
            .ok_or_else(|| syntax(node.pos, &["object", "object-part", "scene"], "`)`".into()))?;
        let kind_word = kind_node.symbol().ok_or_else(|| {
            syntax(
                kind_node.pos,
                &["object", "object-part", "scene"],
                kind_node.describe(),
            )
        })?;
        let kind = match Kind::top_level(kind_word) {
            Some(k) => k,
            None if !top_level => Kind::Named(kind_word.to_string()),
            None => {
                return Err(syntax(
                    kind_node.pos,
                    &["object", "object-part", "scene"],
                    kind_node.describe(),
                ))
            }
        };
        let mut desc = ObjectDescription::new(determiner, kind);
        let mut rest = items[2..].iter().peekable();
        while let Some(item) = rest.next() {
            match &item.kind {
                NodeKind::List(inner) if inner.first().is_some_and(|n| n.list().is_some()) => {
                    // Grouped constraints: `((shape box) (color green))`.
                    for c in inner {
                        desc.constraints.push(self.constraint(c)?);
                    }
                }
                NodeKind::List(_) => desc.constraints.push(self.constraint(item)?),
                NodeKind::Atom(Atom::Symbol(name)) => {
                    // Unparenthesized pair: `command 'start'`.
                    self.check_attribute(name, item.pos)?;
                    let value_node = rest
                        .next()
                        .ok_or_else(|| arity(name, "a value", 0, item.pos))?;
                    let value = self.value(name, std::slice::from_ref(value_node), item.pos)?;
                    desc.constraints.push(Constraint::new(name, value));
                }
                NodeKind::Atom(_) => {
                    return Err(syntax(item.pos, &["constraint"], item.describe()))
                }
            }
        }
        Ok(desc)
    }

    fn constraint(&self, node: &Node) -> Result<Constraint, QueryError> {
        let items = node
            .list()
            .filter(|i| !i.is_empty())
            .ok_or_else(|| syntax(node.pos, &["`(<attribute> <value>)`"], node.describe()))?;
        let name = items[0]
            .symbol()
            .ok_or_else(|| syntax(items[0].pos, &["attribute name"], items[0].describe()))?;
        self.check_attribute(name, items[0].pos)?;
        let value = self.value(name, &items[1..], node.pos)?;
        Ok(Constraint::new(name, value))
    }

    fn value(&self, attribute: &str, nodes: &[Node], pos: Pos) -> Result<QueryValue, QueryError> {
        let nests = NESTING_ATTRIBUTES.contains(&attribute);
        match nodes {
            [] => Err(arity(attribute, "a value", 0, pos)),
            [single] if is_description(single) => {
                if !nests {
                    return Err(syntax(
                        single.pos,
                        &["a value"],
                        "nested description".into(),
                    ));
                }
                Ok(QueryValue::Description(Box::new(
                    self.description(single, false)?,
                )))
            }
            [single] => plain_value(single),
            [prep, target] if prep.symbol().is_some() && is_description(target) => {
                if !nests {
                    return Err(syntax(
                        target.pos,
                        &["a value"],
                        "nested description".into(),
                    ));
                }
                Ok(QueryValue::Relation {
                    preposition: prep.symbol().unwrap_or_default().to_string(),
                    target: Box::new(self.description(target, false)?),
                })
            }
            many => many
                .iter()
                .map(plain_value)
                .collect::<Result<Vec<_>, _>>()
                .map(QueryValue::List),
        }
    }
}

fn plain_value(node: &Node) -> Result<QueryValue, QueryError> {
    match &node.kind {
        NodeKind::Atom(Atom::Number(n)) => Ok(QueryValue::Number(*n)),
        NodeKind::Atom(a) => Ok(QueryValue::Symbol(
            a.as_text().unwrap_or_default().to_string(),
        )),
        NodeKind::List(items) => items
            .iter()
            .map(plain_value)
            .collect::<Result<Vec<_>, _>>()
            .map(QueryValue::List),
    }
}
