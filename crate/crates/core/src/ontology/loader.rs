use std::collections::{BTreeMap, BTreeSet};

use super::{
    ABox, Cardinality, KnowledgeBase, OntologyError, PrimitiveKind, PropertyDefinition, Range,
    Restriction, Result, RobotProfile, TBox, TypeSymbol, Value, THING,
};
use crate::sexpr::{self, Node, NodeKind, Pos};

/// Taxonomy merged into every loaded knowledge base.
pub const BUILTIN_ONTOLOGY: &str = include_str!("../../data/ontologies/builtin.onto");

/// Loads one document on top of the built-in taxonomy.
pub fn load_ontology(document: &str) -> Result<KnowledgeBase> {
    load_documents(&[document])
}

/// Loads several documents (e.g. a domain ontology plus a robot profile) as
/// one knowledge base on top of the built-in taxonomy.
pub fn load_documents(documents: &[&str]) -> Result<KnowledgeBase> {
    let mut raw = RawDocument::default();
    raw.read(BUILTIN_ONTOLOGY)?;
    for doc in documents {
        raw.read(doc)?;
    }
    raw.build()
}

struct RawClass {
    symbol: TypeSymbol,
    pos: Pos,
    parent_pos: Vec<Pos>,
    restriction_pos: Vec<Pos>,
}

struct RawProperty {
    def: PropertyDefinition,
    pos: Pos,
    domain_pos: Pos,
    range_pos: Pos,
}

struct RawIndividual {
    id: String,
    pos: Pos,
    types: Vec<(String, Pos)>,
    roles: Vec<(String, Value, Pos)>,
}

#[derive(Default)]
struct RawDocument {
    classes: Vec<RawClass>,
    properties: Vec<RawProperty>,
    individuals: Vec<RawIndividual>,
    aliases: Vec<(String, String, Pos)>,
    robots: Vec<(String, Vec<(String, Pos)>, Pos)>,
}

fn parse_error(pos: Pos, message: impl Into<String>) -> OntologyError {
    OntologyError::Parse {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

fn unknown(symbol: &str, pos: Pos) -> OntologyError {
    OntologyError::UnknownReference {
        symbol: symbol.to_string(),
        line: pos.line,
        column: pos.column,
    }
}

fn name_of<'a>(node: &'a Node, what: &str) -> Result<&'a str> {
    node.text().ok_or_else(|| {
        parse_error(
            node.pos,
            format!("expected {what}, found {}", node.describe()),
        )
    })
}

fn list_of<'a>(node: &'a Node, what: &str) -> Result<&'a [Node]> {
    match node.list() {
        Some(items) if !items.is_empty() => Ok(items),
        _ => Err(parse_error(
            node.pos,
            format!("expected {what}, found {}", node.describe()),
        )),
    }
}

fn value_of(node: &Node) -> Result<Value> {
    match &node.kind {
        NodeKind::Atom(sexpr::Atom::Number(n)) => Ok(Value::Real(*n)),
        NodeKind::Atom(a) => Ok(Value::Symbol(a.as_text().unwrap_or_default().to_string())),
        NodeKind::List(items) => items
            .iter()
            .map(|n| {
                n.number().ok_or_else(|| {
                    parse_error(n.pos, format!("expected number, found {}", n.describe()))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Value::Vector),
    }
}

fn count_of(node: Option<&Node>, at: Pos) -> Result<u32> {
    let n = node
        .and_then(Node::number)
        .ok_or_else(|| parse_error(at, "expected a non-negative integer count"))?;
    if n < 0.0 || n.fract() != 0.0 || n > u32::MAX as f64 {
        return Err(parse_error(at, format!("invalid count {n}")));
    }
    Ok(n as u32)
}

impl RawDocument {
    fn read(&mut self, text: &str) -> Result<()> {
        let nodes = sexpr::parse_all(text).map_err(|e| {
            parse_error(
                e.pos,
                format!("expected {}, found {}", e.expected.join(" or "), e.found),
            )
        })?;
        for node in &nodes {
            let items = list_of(node, "a top-level form")?;
            let head = items[0]
                .symbol()
                .ok_or_else(|| parse_error(items[0].pos, "expected a form keyword"))?;
            match head {
                "class" => self.read_class(node.pos, &items[1..])?,
                "property-def" => self.read_property(node.pos, &items[1..])?,
                "individual" => self.read_individual(node.pos, &items[1..])?,
                "alias" => {
                    let [from, to] = &items[1..] else {
                        return Err(parse_error(node.pos, "alias takes exactly two names"));
                    };
                    self.aliases.push((
                        name_of(from, "alias name")?.to_string(),
                        name_of(to, "type name")?.to_string(),
                        to.pos,
                    ));
                }
                "robot" => self.read_robot(node.pos, &items[1..])?,
                other => {
                    return Err(parse_error(
                        items[0].pos,
                        format!("unknown form `{other}`, expected class, property-def, individual, alias or robot"),
                    ))
                }
            }
        }
        Ok(())
    }

    fn read_class(&mut self, pos: Pos, rest: &[Node]) -> Result<()> {
        let name_node = rest
            .first()
            .ok_or_else(|| parse_error(pos, "class needs a name"))?;
        let mut raw = RawClass {
            symbol: TypeSymbol {
                name: name_of(name_node, "class name")?.to_string(),
                parents: Vec::new(),
                restrictions: Vec::new(),
            },
            pos: name_node.pos,
            parent_pos: Vec::new(),
            restriction_pos: Vec::new(),
        };
        for clause in &rest[1..] {
            let items = list_of(clause, "a class clause")?;
            match items[0].symbol() {
                Some("parents") => {
                    for p in &items[1..] {
                        raw.symbol
                            .parents
                            .push(name_of(p, "parent name")?.to_string());
                        raw.parent_pos.push(p.pos);
                    }
                }
                Some("property") => {
                    let [prop, value] = &items[1..] else {
                        return Err(parse_error(
                            clause.pos,
                            "property clause takes a name and a value",
                        ));
                    };
                    raw.symbol.restrictions.push(Restriction {
                        property: name_of(prop, "property name")?.to_string(),
                        value: value_of(value)?,
                    });
                    raw.restriction_pos.push(value.pos);
                }
                _ => {
                    return Err(parse_error(
                        items[0].pos,
                        format!(
                            "expected `parents` or `property`, found {}",
                            items[0].describe()
                        ),
                    ))
                }
            }
        }
        self.classes.push(raw);
        Ok(())
    }

    fn read_property(&mut self, pos: Pos, rest: &[Node]) -> Result<()> {
        let name_node = rest
            .first()
            .ok_or_else(|| parse_error(pos, "property-def needs a name"))?;
        let name = name_of(name_node, "property name")?.to_string();
        let mut domain = None;
        let mut range = None;
        let mut cardinality = Cardinality::default();
        let mut bounds: Vec<(u32, u32)> = Vec::new();
        for clause in &rest[1..] {
            let items = list_of(clause, "a property clause")?;
            match items[0].symbol() {
                Some("domain") => {
                    let node = items
                        .get(1)
                        .ok_or_else(|| parse_error(clause.pos, "domain needs a type"))?;
                    domain = Some((name_of(node, "domain type")?.to_string(), node.pos));
                }
                Some("range") => {
                    let node = items
                        .get(1)
                        .ok_or_else(|| parse_error(clause.pos, "range needs a type"))?;
                    let text = name_of(node, "range type")?;
                    let r = match PrimitiveKind::from_keyword(text) {
                        Some(k) => Range::Primitive(k),
                        None => Range::Type(text.to_string()),
                    };
                    range = Some((r, node.pos));
                }
                Some("cardinality") => {
                    let kind = items.get(1).and_then(Node::symbol);
                    let n = count_of(items.get(2), clause.pos)?;
                    let (lo, hi) = match kind {
                        Some("exact") => (n, n),
                        Some("min") => (n, u32::MAX),
                        Some("max") => (0, n),
                        _ => {
                            return Err(parse_error(
                                clause.pos,
                                "cardinality must be exact, min or max",
                            ))
                        }
                    };
                    bounds.push((lo, hi));
                }
                _ => {
                    return Err(parse_error(
                        items[0].pos,
                        format!(
                            "expected domain, range or cardinality, found {}",
                            items[0].describe()
                        ),
                    ))
                }
            }
        }
        if !bounds.is_empty() {
            let lo = bounds.iter().map(|b| b.0).max().unwrap_or(0);
            let hi = bounds.iter().map(|b| b.1).min().unwrap_or(u32::MAX);
            if lo > hi {
                return Err(OntologyError::Unsatisfiable {
                    name,
                    reason: format!("cardinality requires at least {lo} and at most {hi} values"),
                });
            }
            cardinality.min = (lo > 0).then_some(lo);
            cardinality.max = (hi < u32::MAX).then_some(hi);
        }
        let (domain, domain_pos) = domain.unwrap_or_else(|| (THING.to_string(), name_node.pos));
        let (range, range_pos) =
            range.ok_or_else(|| parse_error(pos, format!("property `{name}` needs a range")))?;
        self.properties.push(RawProperty {
            def: PropertyDefinition {
                name,
                domain,
                range,
                cardinality,
            },
            pos: name_node.pos,
            domain_pos,
            range_pos,
        });
        Ok(())
    }

    fn read_individual(&mut self, pos: Pos, rest: &[Node]) -> Result<()> {
        let id_node = rest
            .first()
            .ok_or_else(|| parse_error(pos, "individual needs an id"))?;
        let mut raw = RawIndividual {
            id: name_of(id_node, "individual id")?.to_string(),
            pos: id_node.pos,
            types: Vec::new(),
            roles: Vec::new(),
        };
        for clause in &rest[1..] {
            let items = list_of(clause, "an individual clause")?;
            let key = name_of(&items[0], "property name")?;
            let [value] = &items[1..] else {
                return Err(parse_error(
                    clause.pos,
                    format!("`{key}` takes exactly one value"),
                ));
            };
            if key == "type" {
                raw.types
                    .push((name_of(value, "type name")?.to_string(), value.pos));
            } else {
                raw.roles
                    .push((key.to_string(), value_of(value)?, value.pos));
            }
        }
        self.individuals.push(raw);
        Ok(())
    }

    fn read_robot(&mut self, pos: Pos, rest: &[Node]) -> Result<()> {
        let name_node = rest
            .first()
            .ok_or_else(|| parse_error(pos, "robot needs a name"))?;
        let mut caps = Vec::new();
        for clause in &rest[1..] {
            let items = list_of(clause, "a robot clause")?;
            if items[0].symbol() != Some("capabilities") {
                return Err(parse_error(items[0].pos, "expected `capabilities`"));
            }
            for c in &items[1..] {
                caps.push((name_of(c, "capability name")?.to_string(), c.pos));
            }
        }
        self.robots.push((
            name_of(name_node, "robot name")?.to_string(),
            caps,
            name_node.pos,
        ));
        Ok(())
    }

    fn build(self) -> Result<KnowledgeBase> {
        let mut tbox = TBox::default();

        let mut class_pos: BTreeMap<String, Pos> = BTreeMap::new();
        for raw in &self.classes {
            if class_pos.insert(raw.symbol.name.clone(), raw.pos).is_some() {
                return Err(OntologyError::DuplicateName(raw.symbol.name.clone()));
            }
        }
        for raw in &self.classes {
            for (p, pos) in raw.symbol.parents.iter().zip(&raw.parent_pos) {
                if !class_pos.contains_key(p) {
                    return Err(unknown(p, *pos));
                }
            }
            let mut symbol = raw.symbol.clone();
            if symbol.parents.is_empty() && symbol.name != THING {
                symbol.parents.push(THING.to_string());
            }
            tbox.order.push(symbol.name.clone());
            tbox.types.insert(symbol.name.clone(), symbol);
        }
        if !tbox.types.contains_key(THING) {
            return Err(OntologyError::UnknownType(THING.to_string()));
        }
        if let Some(cycle) = find_cycle(&tbox.types) {
            return Err(OntologyError::Cycle { cycle });
        }
        compute_closure(&mut tbox);

        for raw in self.properties {
            if tbox.properties.contains_key(&raw.def.name) {
                return Err(OntologyError::DuplicateName(raw.def.name));
            }
            if !tbox.types.contains_key(&raw.def.domain) {
                return Err(unknown(&raw.def.domain, raw.domain_pos));
            }
            if let Range::Type(t) = &raw.def.range {
                if !tbox.types.contains_key(t) {
                    return Err(unknown(t, raw.range_pos));
                }
            }
            let _ = raw.pos;
            tbox.properties.insert(raw.def.name.clone(), raw.def);
        }

        let individual_ids: BTreeSet<String> =
            self.individuals.iter().map(|i| i.id.clone()).collect();

        for raw in &self.classes {
            let mut coerced = Vec::new();
            for (r, pos) in raw.symbol.restrictions.iter().zip(&raw.restriction_pos) {
                let def = tbox
                    .properties
                    .get(&r.property)
                    .ok_or_else(|| unknown(&r.property, *pos))?;
                let value = TBox::coerce(&def.range, r.value.clone());
                if let (Range::Type(_), Value::Symbol(s)) = (&def.range, &value) {
                    if !tbox.types.contains_key(s) && !individual_ids.contains(s) {
                        return Err(unknown(s, *pos));
                    }
                }
                if !tbox.subsumed(&raw.symbol.name, &def.domain) {
                    return Err(OntologyError::TypeCheck {
                        property: r.property.clone(),
                        reason: format!("`{}` is outside domain `{}`", raw.symbol.name, def.domain),
                    });
                }
                // Individual fillers are checked once the ABox exists.
                if !individual_ids.contains(value.as_symbol().unwrap_or_default()) {
                    tbox.check_value(&def.range, &value, None)
                        .map_err(|reason| OntologyError::TypeCheck {
                            property: r.property.clone(),
                            reason,
                        })?;
                }
                coerced.push(Restriction {
                    property: r.property.clone(),
                    value,
                });
            }
            for def in tbox.properties.values() {
                let n = coerced.iter().filter(|r| r.property == def.name).count();
                if def.cardinality.max.is_some_and(|m| n > m as usize) {
                    return Err(OntologyError::Unsatisfiable {
                        name: raw.symbol.name.clone(),
                        reason: format!(
                            "{n} `{}` restrictions exceed {}",
                            def.name, def.cardinality
                        ),
                    });
                }
            }
            tbox.types
                .get_mut(&raw.symbol.name)
                .expect("declared above")
                .restrictions = coerced;
        }

        for (from, to, pos) in self.aliases {
            if !tbox.types.contains_key(&to) {
                return Err(unknown(&to, pos));
            }
            if tbox.types.contains_key(&from) || tbox.aliases.contains_key(&from) {
                return Err(OntologyError::DuplicateName(from));
            }
            tbox.aliases.insert(from, to);
        }

        let mut abox = ABox::default();
        let mut seen = BTreeSet::new();
        for raw in self.individuals {
            if !seen.insert(raw.id.clone()) || tbox.types.contains_key(&raw.id) {
                return Err(OntologyError::DuplicateName(raw.id));
            }
            if raw.types.is_empty() {
                return Err(parse_error(
                    raw.pos,
                    format!("individual `{}` has no type", raw.id),
                ));
            }
            for (t, pos) in &raw.types {
                if !tbox.types.contains_key(t) {
                    return Err(unknown(t, *pos));
                }
                abox.assert_concept(&raw.id, t);
            }
            for (prop, value, pos) in raw.roles {
                let def = tbox
                    .properties
                    .get(&prop)
                    .ok_or_else(|| unknown(&prop, pos))?;
                let value = TBox::coerce(&def.range, value);
                if let (Range::Type(_), Value::Symbol(s)) = (&def.range, &value) {
                    if !tbox.types.contains_key(s) && !individual_ids.contains(s) {
                        return Err(unknown(s, pos));
                    }
                }
                abox.assert_role(&prop, &raw.id, value);
            }
        }

        let mut robots = BTreeMap::new();
        for (name, caps, pos) in self.robots {
            let mut set = BTreeSet::new();
            for (c, cpos) in caps {
                if !tbox.types.contains_key(&c) {
                    return Err(unknown(&c, cpos));
                }
                if !tbox.subsumed(&c, "Capability") {
                    return Err(OntologyError::TypeCheck {
                        property: "capabilities".into(),
                        reason: format!("`{c}` is not a Capability"),
                    });
                }
                set.insert(c);
            }
            if robots.contains_key(&name) {
                return Err(OntologyError::DuplicateName(name));
            }
            let _ = pos;
            robots.insert(
                name.clone(),
                RobotProfile {
                    name,
                    capabilities: set,
                },
            );
        }

        let kb = KnowledgeBase { tbox, abox, robots };
        kb.validate_abox(&kb.abox)?;
        for t in kb.tbox.types() {
            for r in &t.restrictions {
                let def = &kb.tbox.properties[&r.property];
                kb.tbox
                    .check_value(&def.range, &r.value, Some(&kb.abox))
                    .map_err(|reason| OntologyError::TypeCheck {
                        property: r.property.clone(),
                        reason,
                    })?;
            }
        }
        Ok(kb)
    }
}

/// Returns one parent cycle, starting and ending at the same type.
fn find_cycle(types: &BTreeMap<String, TypeSymbol>) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Fresh,
        Active,
        Done,
    }
    let mut marks: BTreeMap<&str, Mark> = types.keys().map(|k| (k.as_str(), Mark::Fresh)).collect();
    let names: Vec<&str> = types.keys().map(String::as_str).collect();
    for start in names {
        if marks[start] != Mark::Fresh {
            continue;
        }
        // Iterative DFS: (node, next parent index).
        let mut stack: Vec<(&str, usize)> = vec![(start, 0)];
        marks.insert(start, Mark::Active);
        while let Some(&mut (node, ref mut idx)) = stack.last_mut() {
            let parents = &types[node].parents;
            if *idx < parents.len() {
                let p = parents[*idx].as_str();
                *idx += 1;
                match marks[p] {
                    Mark::Fresh => {
                        marks.insert(p, Mark::Active);
                        stack.push((p, 0));
                    }
                    Mark::Active => {
                        let from = stack.iter().position(|(n, _)| *n == p).unwrap_or(0);
                        let mut cycle: Vec<String> =
                            stack[from..].iter().map(|(n, _)| n.to_string()).collect();
                        cycle.push(p.to_string());
                        return Some(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                marks.insert(node, Mark::Done);
                stack.pop();
            }
        }
    }
    None
}

fn compute_closure(tbox: &mut TBox) {
    fn visit(
        name: &str,
        types: &BTreeMap<String, TypeSymbol>,
        closure: &mut BTreeMap<String, BTreeSet<String>>,
    ) {
        if closure.contains_key(name) {
            return;
        }
        let mut set = BTreeSet::from([name.to_string()]);
        for p in &types[name].parents {
            visit(p, types, closure);
            set.extend(closure[p.as_str()].iter().cloned());
        }
        closure.insert(name.to_string(), set);
    }
    let mut closure = BTreeMap::new();
    for name in tbox.types.keys() {
        visit(name, &tbox.types, &mut closure);
    }
    tbox.closure = closure;
}
