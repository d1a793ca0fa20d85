//! SGF FF[4] reader and writer.
//!
//! Grammar handled:
//!
//! ```text
//! Collection = GameTree+
//! GameTree   = "(" Node+ GameTree* ")"
//! Node       = ";" Property*
//! Property   = Ident ("[" Value "]")+
//! ```
//!
//! Values are stored unescaped. Only the mainline (first child chain) is
//! converted to a [`GameRecord`].

use thiserror::Error;

use crate::go::{Color, GameRecord, Move, Source, DEFAULT_KOMI};

#[derive(Debug, Error, PartialEq)]
pub enum SgfError {
    #[error("syntax error at byte {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },
    #[error("setup property {0} is not supported")]
    UnsupportedSetup(String),
    #[error("game type GM[{0}] is not Go")]
    NotGo(String),
    #[error("bad board size {0:?}")]
    BadSize(String),
    #[error("bad komi {0:?}")]
    BadKomi(String),
    #[error("bad move value {0:?}")]
    BadMove(String),
    #[error("move {index} is played by the wrong color")]
    NonAlternating { index: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Property {
    pub ident: String,
    pub values: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Node {
    pub properties: Vec<Property>,
}

impl Node {
    pub fn get(&self, ident: &str) -> Option<&Property> {
        self.properties.iter().find(|p| p.ident == ident)
    }

    pub fn first_value(&self, ident: &str) -> Option<&str> {
        self.get(ident).and_then(|p| p.values.first()).map(String::as_str)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GameTree {
    pub nodes: Vec<Node>,
    pub children: Vec<GameTree>,
}

impl GameTree {
    /// Nodes along the first-child chain.
    pub fn mainline(&self) -> Vec<&Node> {
        let mut out: Vec<&Node> = self.nodes.iter().collect();
        let mut cur = self;
        while let Some(first) = cur.children.first() {
            out.extend(first.nodes.iter());
            cur = first;
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SgfCollection {
    pub trees: Vec<GameTree>,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, expected: &str) -> Result<T, SgfError> {
        Err(SgfError::Syntax {
            offset: self.pos,
            expected: expected.to_string(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn collection(&mut self) -> Result<SgfCollection, SgfError> {
        let mut trees = Vec::new();
        while let Some(c) = self.peek() {
            if c != b'(' {
                return self.err("\"(\"");
            }
            trees.push(self.tree()?);
        }
        if trees.is_empty() {
            return self.err("\"(\"");
        }
        Ok(SgfCollection { trees })
    }

    fn tree(&mut self) -> Result<GameTree, SgfError> {
        // caller has checked '('
        self.pos += 1;
        let mut tree = GameTree::default();
        while self.peek() == Some(b';') {
            self.pos += 1;
            tree.nodes.push(self.node()?);
        }
        if tree.nodes.is_empty() {
            return self.err("\";\"");
        }
        while self.peek() == Some(b'(') {
            tree.children.push(self.tree()?);
        }
        match self.peek() {
            Some(b')') => {
                self.pos += 1;
                Ok(tree)
            }
            _ => self.err("\")\""),
        }
    }

    fn node(&mut self) -> Result<Node, SgfError> {
        let mut node = Node::default();
        while let Some(c) = self.peek() {
            if !c.is_ascii_alphabetic() {
                break;
            }
            let mut ident = String::new();
            while let Some(&c) = self.text.get(self.pos) {
                if !c.is_ascii_alphabetic() {
                    break;
                }
                // FF[3] lowercase letters inside identifiers are dropped.
                if c.is_ascii_uppercase() {
                    ident.push(c as char);
                }
                self.pos += 1;
            }
            if ident.is_empty() {
                return self.err("uppercase property identifier");
            }
            let mut values = Vec::new();
            while self.peek() == Some(b'[') {
                self.pos += 1;
                values.push(self.value()?);
            }
            if values.is_empty() {
                return self.err("\"[\"");
            }
            node.properties.push(Property { ident, values });
        }
        Ok(node)
    }

    fn value(&mut self) -> Result<String, SgfError> {
        let mut out = Vec::new();
        loop {
            match self.text.get(self.pos) {
                None => return self.err("\"]\""),
                Some(b']') => {
                    self.pos += 1;
                    break;
                }
                Some(b'\\') => {
                    self.pos += 1;
                    match self.text.get(self.pos) {
                        None => return self.err("\"]\""),
                        // soft line break
                        Some(b'\n') => self.pos += 1,
                        Some(&c) => {
                            out.push(c);
                            self.pos += 1;
                        }
                    }
                }
                Some(&c) => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
        Ok(String::from_utf8_lossy(&out).into_owned())
    }
}

pub fn parse(text: &str) -> Result<SgfCollection, SgfError> {
    Parser {
        text: text.as_bytes(),
        pos: 0,
    }
    .collection()
}

fn escape_into(out: &mut String, value: &str) {
    for c in value.chars() {
        if c == ']' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
}

fn write_tree(out: &mut String, tree: &GameTree) {
    out.push('(');
    for node in &tree.nodes {
        out.push(';');
        for prop in &node.properties {
            out.push_str(&prop.ident);
            for v in &prop.values {
                out.push('[');
                escape_into(out, v);
                out.push(']');
            }
        }
    }
    for child in &tree.children {
        write_tree(out, child);
    }
    out.push(')');
}

/// Writes a collection; one game tree per line.
pub fn serialize(collection: &SgfCollection) -> String {
    let mut out = String::new();
    for tree in &collection.trees {
        write_tree(&mut out, tree);
        out.push('\n');
    }
    out
}

fn parse_point(value: &str, size: usize) -> Result<Move, SgfError> {
    let b = value.as_bytes();
    if b.is_empty() || (value == "tt" && size <= 19) {
        return Ok(Move::Pass);
    }
    if b.len() != 2 || !b.iter().all(|c| c.is_ascii_lowercase()) {
        return Err(SgfError::BadMove(value.to_string()));
    }
    let (col, row) = ((b[0] - b'a') as usize, (b[1] - b'a') as usize);
    if col >= size || row >= size {
        return Err(SgfError::BadMove(value.to_string()));
    }
    Ok(Move::place(col, row))
}

/// Converts the mainline of a game tree into a record.
pub fn to_record(tree: &GameTree, default_komi: f64) -> Result<GameRecord, SgfError> {
    let nodes = tree.mainline();
    let root = nodes.first().copied().cloned().unwrap_or_default();
    if let Some(gm) = root.first_value("GM") {
        if gm.trim() != "1" {
            return Err(SgfError::NotGo(gm.to_string()));
        }
    }
    let size = match root.first_value("SZ") {
        None => 19,
        Some(sz) => {
            let first = sz.split(':').next().unwrap_or("").trim();
            match first.parse::<usize>() {
                Ok(n) if (2..=19).contains(&n) => n,
                _ => return Err(SgfError::BadSize(sz.to_string())),
            }
        }
    };
    let komi = match root.first_value("KM") {
        None => default_komi,
        Some(km) if km.trim().is_empty() => default_komi,
        Some(km) => km.trim().parse::<f64>().map_err(|_| SgfError::BadKomi(km.to_string()))?,
    };
    let source = root.first_value("SO").and_then(Source::parse).unwrap_or(Source::Human);
    let mut moves = Vec::new();
    for node in &nodes {
        for prop in &node.properties {
            match prop.ident.as_str() {
                "AB" | "AW" | "AE" => return Err(SgfError::UnsupportedSetup(prop.ident.clone())),
                "B" | "W" => {
                    let expected = if moves.len() % 2 == 0 { "B" } else { "W" };
                    if prop.ident != expected {
                        return Err(SgfError::NonAlternating { index: moves.len() });
                    }
                    let v = prop.values.first().map(String::as_str).unwrap_or("");
                    moves.push(parse_point(v, size)?);
                }
                _ => {}
            }
        }
    }
    Ok(GameRecord::new(size, komi, source, moves))
}

/// Inverse of [`to_record`]: a single linear game tree.
pub fn from_record(record: &GameRecord) -> GameTree {
    let fmt_komi = if record.komi.fract() == 0.0 {
        format!("{}", record.komi as i64)
    } else {
        format!("{}", record.komi)
    };
    let prop = |ident: &str, value: String| Property {
        ident: ident.to_string(),
        values: vec![value],
    };
    let root = Node {
        properties: vec![
            prop("GM", "1".into()),
            prop("FF", "4".into()),
            prop("SZ", record.size.to_string()),
            prop("KM", fmt_komi),
            prop("SO", record.source.as_str().into()),
        ],
    };
    let mut nodes = vec![root];
    let mut color = Color::Black;
    for mv in &record.moves {
        let value = match *mv {
            Move::Place { col, row } => format!("{}{}", (b'a' + col) as char, (b'a' + row) as char),
            Move::Pass | Move::Resign => String::new(),
        };
        nodes.push(Node {
            properties: vec![prop(&color.letter().to_string(), value)],
        });
        color = color.opponent();
    }
    GameTree { nodes, children: vec![] }
}

/// Parses every tree in `text` into records.
pub fn records_from_text(text: &str) -> Result<Vec<GameRecord>, SgfError> {
    parse(text)?.trees.iter().map(|t| to_record(t, DEFAULT_KOMI)).collect()
}
