//! Small S-expression reader shared by the ontology, query and config formats.
//!
//! Whitespace and `,` separate tokens, `;` starts a line comment. A token that
//! starts with `'`, `"` or `` ` `` is read up to the next occurrence of the same
//! character and becomes a [`Atom::Quoted`]; quotes inside bare symbols are
//! kept verbatim (`Kellogg's`).

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    Symbol(String),
    Quoted(String),
    Number(f64),
}

impl Atom {
    /// Symbol or quoted text, with quotes already stripped.
    pub fn as_text(&self) -> Option<&str> {
        match self {
            Atom::Symbol(s) | Atom::Quoted(s) => Some(s),
            Atom::Number(_) => None,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Symbol(s) => f.write_str(s),
            Atom::Quoted(s) => write_quoted(f, s),
            Atom::Number(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Atom(Atom),
    List(Vec<Node>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub pos: Pos,
}

impl Node {
    pub fn atom(&self) -> Option<&Atom> {
        match &self.kind {
            NodeKind::Atom(a) => Some(a),
            NodeKind::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Node]> {
        match &self.kind {
            NodeKind::List(items) => Some(items),
            NodeKind::Atom(_) => None,
        }
    }

    pub fn text(&self) -> Option<&str> {
        self.atom().and_then(Atom::as_text)
    }

    /// Bare symbol only; quoted text does not count.
    pub fn symbol(&self) -> Option<&str> {
        match &self.kind {
            NodeKind::Atom(Atom::Symbol(s)) => Some(s),
            _ => None,
        }
    }

    pub fn number(&self) -> Option<f64> {
        match &self.kind {
            NodeKind::Atom(Atom::Number(n)) => Some(*n),
            _ => None,
        }
    }

    /// Short rendering used in error messages.
    pub fn describe(&self) -> String {
        match &self.kind {
            NodeKind::Atom(a) => format!("`{a}`"),
            NodeKind::List(items) if items.is_empty() => "`()`".to_string(),
            NodeKind::List(items) => match items[0].atom() {
                Some(a) => format!("list `({a} ...)`"),
                None => "nested list".to_string(),
            },
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            NodeKind::Atom(a) => write!(f, "{a}"),
            NodeKind::List(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("syntax error at {pos}: expected {}, found {found}", expected.join(" or "))]
pub struct SyntaxError {
    pub pos: Pos,
    pub expected: Vec<String>,
    pub found: String,
}

const QUOTES: [char; 3] = ['\'', '"', '`'];

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || c == ',' || c == '(' || c == ')' || c == ';'
}

/// Whether `s` can be printed bare and read back as the same symbol.
pub fn is_plain_symbol(s: &str) -> bool {
    let Some(first) = s.chars().next() else {
        return false;
    };
    !QUOTES.contains(&first) && !s.chars().any(is_delimiter) && classify_bare(s).is_none()
}

/// Writes `s` as a quoted token, choosing a quote character it does not contain.
pub fn write_quoted(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    let q = QUOTES
        .iter()
        .copied()
        .find(|q| !s.contains(*q))
        .unwrap_or('"');
    write!(f, "{q}{s}{q}")
}

pub fn write_symbol(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    if is_plain_symbol(s) {
        f.write_str(s)
    } else {
        write_quoted(f, s)
    }
}

fn classify_bare(token: &str) -> Option<f64> {
    let mut chars = token.chars();
    let first = chars.next()?;
    let numeric_start = first.is_ascii_digit()
        || ((first == '-' || first == '+' || first == '.')
            && token[first.len_utf8()..]
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_digit() || c == '.'));
    if !numeric_start {
        return None;
    }
    token.parse::<f64>().ok().filter(|n| n.is_finite())
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            chars: text.chars().peekable(),
            pos: Pos { line: 1, column: 1 },
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() || c == ',' {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn node(&mut self) -> Result<Node, SyntaxError> {
        self.skip_trivia();
        let pos = self.pos;
        match self.chars.peek().copied() {
            None => Err(SyntaxError {
                pos,
                expected: vec!["expression".into()],
                found: "end of input".into(),
            }),
            Some(')') => Err(SyntaxError {
                pos,
                expected: vec!["expression".into()],
                found: "`)`".into(),
            }),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        Some(')') => {
                            self.bump();
                            return Ok(Node {
                                kind: NodeKind::List(items),
                                pos,
                            });
                        }
                        None => {
                            return Err(SyntaxError {
                                pos: self.pos,
                                expected: vec!["`)`".into(), "expression".into()],
                                found: "end of input".into(),
                            })
                        }
                        Some(_) => items.push(self.node()?),
                    }
                }
            }
            Some(q) if QUOTES.contains(&q) => {
                self.bump();
                let mut text = String::new();
                loop {
                    match self.bump() {
                        Some(c) if c == q => break,
                        Some(c) => text.push(c),
                        None => {
                            return Err(SyntaxError {
                                pos: self.pos,
                                expected: vec![format!("closing `{q}`")],
                                found: "end of input".into(),
                            })
                        }
                    }
                }
                Ok(Node {
                    kind: NodeKind::Atom(Atom::Quoted(text)),
                    pos,
                })
            }
            Some(_) => {
                let mut token = String::new();
                while let Some(&c) = self.chars.peek() {
                    if is_delimiter(c) {
                        break;
                    }
                    token.push(c);
                    self.bump();
                }
                let atom = match classify_bare(&token) {
                    Some(n) => Atom::Number(n),
                    None => Atom::Symbol(token),
                };
                Ok(Node {
                    kind: NodeKind::Atom(atom),
                    pos,
                })
            }
        }
    }
}

/// Reads every top-level expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<Node>, SyntaxError> {
    let mut reader = Reader::new(text);
    let mut out = Vec::new();
    loop {
        reader.skip_trivia();
        if reader.chars.peek().is_none() {
            return Ok(out);
        }
        out.push(reader.node()?);
    }
}

/// Reads exactly one expression; trailing content is an error.
pub fn parse_one(text: &str) -> Result<Node, SyntaxError> {
    let mut reader = Reader::new(text);
    let node = reader.node()?;
    reader.skip_trivia();
    if let Some(&c) = reader.chars.peek() {
        return Err(SyntaxError {
            pos: reader.pos,
            expected: vec!["end of input".into()],
            found: format!("`{c}`"),
        });
    }
    Ok(node)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_atoms() {
        let node = parse_one("(detect (an object (width 0.05) (type 'Food')))").unwrap();
        let items = node.list().unwrap();
        assert_eq!(items[0].symbol(), Some("detect"));
        let desc = items[1].list().unwrap();
        assert_eq!(desc[2].list().unwrap()[1].number(), Some(0.05));
        assert_eq!(
            desc[3].list().unwrap()[1].atom(),
            Some(&Atom::Quoted("Food".into()))
        );
    }

    #[test]
    fn quotes_inside_symbols_are_kept() {
        let node = parse_one("(logo Kellogg's)").unwrap();
        assert_eq!(node.list().unwrap()[1].symbol(), Some("Kellogg's"));
    }

    #[test]
    fn backticks_and_commas() {
        let node = parse_one("(inspect #uid :pose,:obj-part (type `Spatula`))").unwrap();
        let items = node.list().unwrap();
        assert_eq!(items.len(), 5);
        assert_eq!(items[4].list().unwrap()[1].text(), Some("Spatula"));
    }

    #[test]
    fn comments_and_positions() {
        let nodes = parse_all("; header\n(a b)\n  (c)").unwrap();
        assert_eq!(nodes.len(), 2);
        assert_eq!(nodes[1].pos, Pos { line: 3, column: 3 });
    }

    #[test]
    fn symbols_that_look_numeric() {
        assert_eq!(
            parse_one("table-top#3").unwrap().symbol(),
            Some("table-top#3")
        );
        assert_eq!(parse_one("-2.5").unwrap().number(), Some(-2.5));
        assert_eq!(parse_one("inf").unwrap().symbol(), Some("inf"));
        assert!(!is_plain_symbol("12"));
        assert!(is_plain_symbol("drawer#3"));
    }

    #[test]
    fn unbalanced_input_reports_position() {
        let err = parse_one("(detect (an object)").unwrap_err();
        assert_eq!(err.found, "end of input");
        assert!(err.expected.contains(&"`)`".to_string()));
        let err = parse_one("(a))").unwrap_err();
        assert_eq!(err.pos.column, 4);
    }
}
