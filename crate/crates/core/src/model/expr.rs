//! Boolean expressions over tag predicates and their surface syntax.
//!
//! ```text
//! expr   := term ("OR" term)*
//! term   := factor ("AND" factor)*
//! factor := "(" expr ")" | ["NOT"] atom
//! atom   := IDENT "(" STRING ")"
//! ```
//!
//! `AND` binds tighter than `OR`. Keywords are case-insensitive. `NOT` applies
//! only to atoms and lowers to the `!=` operator.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::schema::Schema;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Equal,
    NotEqual,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Predicate {
    pub tag_type: String,
    pub tag: String,
    pub op: Op,
    /// Index of `tag_type` in the schema.
    pub tag_type_index: usize,
    /// Index of `tag` within its tag type.
    pub tag_index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    /// Index into [`Expression::predicates`].
    Leaf(usize),
    And(Vec<Node>),
    Or(Vec<Node>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expression {
    pub root: Node,
    /// Leaves in left-to-right order.
    pub predicates: Vec<Predicate>,
}

impl Expression {
    pub fn parse(text: &str, schema: &Schema) -> Result<Expression> {
        parse_expression(text, schema)
    }

    /// Indices of the schema tag types referenced by at least one predicate.
    pub fn tag_types(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.predicates.iter().map(|p| p.tag_type_index).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Evaluates the expression against known tags (ground truth).
    pub fn holds(&self, tag_of: impl Fn(&str) -> Option<String>) -> bool {
        fn go(node: &Node, preds: &[Predicate], tag_of: &dyn Fn(&str) -> Option<String>) -> bool {
            match node {
                Node::Leaf(i) => {
                    let p = &preds[*i];
                    let has = tag_of(&p.tag_type).as_deref() == Some(p.tag.as_str());
                    match p.op {
                        Op::Equal => has,
                        Op::NotEqual => !has,
                    }
                }
                Node::And(c) => c.iter().all(|n| go(n, preds, tag_of)),
                Node::Or(c) => c.iter().any(|n| go(n, preds, tag_of)),
            }
        }
        go(&self.root, &self.predicates, &tag_of)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, preds: &[Predicate], nested: bool) -> fmt::Result {
            match node {
                Node::Leaf(i) => {
                    let p = &preds[*i];
                    if p.op == Op::NotEqual {
                        write!(f, "NOT ")?;
                    }
                    write!(f, "{}(\"{}\")", p.tag_type, p.tag.replace('\\', "\\\\").replace('"', "\\\""))
                }
                Node::And(children) | Node::Or(children) => {
                    let sep = if matches!(node, Node::And(_)) { " AND " } else { " OR " };
                    if nested {
                        write!(f, "(")?;
                    }
                    for (k, c) in children.iter().enumerate() {
                        if k > 0 {
                            write!(f, "{sep}")?;
                        }
                        write_node(f, c, preds, true)?;
                    }
                    if nested {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
            }
        }
        write_node(f, &self.root, &self.predicates, false)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    LParen,
    RParen,
    And,
    Or,
    Not,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            b'"' => {
                let start = i;
                i += 1;
                let mut s = String::new();
                loop {
                    match bytes.get(i) {
                        None => {
                            return Err(Error::Syntax { pos: start, msg: "unterminated string".into() })
                        }
                        Some(b'"') => {
                            i += 1;
                            break;
                        }
                        Some(b'\\') => {
                            match bytes.get(i + 1) {
                                Some(&e @ (b'"' | b'\\')) => s.push(e as char),
                                _ => {
                                    return Err(Error::Syntax { pos: i, msg: "bad escape".into() })
                                }
                            }
                            i += 2;
                        }
                        Some(_) => {
                            // Copy one UTF-8 scalar.
                            let ch = text[i..].chars().next().unwrap();
                            s.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                out.push((start, Tok::Str(s)));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                let tok = match word.to_ascii_uppercase().as_str() {
                    "AND" => Tok::And,
                    "OR" => Tok::Or,
                    "NOT" => Tok::Not,
                    _ => Tok::Ident(word.to_string()),
                };
                out.push((start, tok));
            }
            _ => {
                return Err(Error::Syntax { pos: i, msg: format!("unexpected character `{}`", c as char) })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    schema: &'a Schema,
    predicates: Vec<Predicate>,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { pos: self.offset(), msg: msg.into() })
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut children = vec![self.term()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            children.push(self.term()?);
        }
        Ok(if children.len() == 1 { children.pop().unwrap() } else { Node::Or(children) })
    }

    fn term(&mut self) -> Result<Node> {
        let mut children = vec![self.factor()?];
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            children.push(self.factor()?);
        }
        Ok(if children.len() == 1 { children.pop().unwrap() } else { Node::And(children) })
    }

    fn factor(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let n = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(n)
            }
            Some(Tok::Not) => {
                self.pos += 1;
                if !matches!(self.peek(), Some(Tok::Ident(_))) {
                    return self.err("NOT applies only to a tag atom");
                }
                self.atom(Op::NotEqual)
            }
            Some(Tok::Ident(_)) => self.atom(Op::Equal),
            Some(_) => self.err("expected a tag atom or `(`"),
            None => self.err("unexpected end of expression"),
        }
    }

    fn atom(&mut self, op: Op) -> Result<Node> {
        let Some(Tok::Ident(tag_type)) = self.peek().cloned() else {
            return self.err("expected tag type");
        };
        self.pos += 1;
        self.expect(Tok::LParen, "`(` after tag type")?;
        let Some(Tok::Str(tag)) = self.peek().cloned() else {
            return self.err("expected quoted tag");
        };
        self.pos += 1;
        self.expect(Tok::RParen, "`)` after tag")?;

        let tag_type_index =
            self.schema.tag_type_index(&tag_type).ok_or_else(|| Error::UnknownTagType(tag_type.clone()))?;
        let tag_index = self.schema.tag_types[tag_type_index]
            .tag_index(&tag)
            .ok_or_else(|| Error::UnknownTag { tag_type: tag_type.clone(), tag: tag.clone() })?;
        self.predicates.push(Predicate { tag_type, tag, op, tag_type_index, tag_index });
        Ok(Node::Leaf(self.predicates.len() - 1))
    }
}

/// Parses an expression such as `Gender("Male") AND (Person("John") OR Person("David"))`.
pub fn parse_expression(text: &str, schema: &Schema) -> Result<Expression> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len(), schema, predicates: Vec::new() };
    let root = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(Expression { root, predicates: p.predicates })
}
