//! Literal and predicate language shared by scenarios, goals and subgoals.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! pred    := or
//! or      := and ( "||" and )*
//! and     := unary ( "&&" unary )*
//! unary   := "!" unary | "(" pred ")" | "true" | "false" | literal
//! literal := ident op value
//! op      := "=" | "==" | "!=" | "<" | "<=" | ">" | ">="
//! value   := integer | "true" | "false" | ident
//! ```
//!
//! Identifiers may contain ASCII letters, digits, `_` and `-`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A variable value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Sym(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Sym(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// The operator selecting exactly the values this one rejects.
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

/// `variable op value`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: String,
    pub op: CmpOp,
    pub value: Value,
}

impl Literal {
    pub fn new(var: impl Into<String>, op: CmpOp, value: Value) -> Self {
        Literal { var: var.into(), op, value }
    }

    pub fn eq(var: impl Into<String>, value: Value) -> Self {
        Literal::new(var, CmpOp::Eq, value)
    }

    pub fn negated(&self) -> Literal {
        Literal { var: self.var.clone(), op: self.op.negate(), value: self.value.clone() }
    }

    /// Whether `actual` satisfies this literal. Mismatched value kinds never hold.
    pub fn holds_for(&self, actual: &Value) -> bool {
        match self.op {
            CmpOp::Eq => actual == &self.value,
            CmpOp::Ne => actual != &self.value,
            op => match (actual, &self.value) {
                (Value::Int(a), Value::Int(b)) => match op {
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Gt => a > b,
                    CmpOp::Ge => a >= b,
                    CmpOp::Eq | CmpOp::Ne => unreachable!(),
                },
                _ => false,
            },
        }
    }

    pub fn eval(&self, lookup: &impl Lookup) -> Result<bool, String> {
        lookup
            .value_of(&self.var)
            .map(|v| self.holds_for(v))
            .ok_or_else(|| self.var.clone())
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.var, self.op.symbol(), self.value)
    }
}

/// Variable lookup used during evaluation.
pub trait Lookup {
    fn value_of(&self, var: &str) -> Option<&Value>;
}

impl Lookup for BTreeMap<String, Value> {
    fn value_of(&self, var: &str) -> Option<&Value> {
        self.get(var)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicate {
    True,
    False,
    Lit(Literal),
    Not(Box<Predicate>),
    All(Vec<Predicate>),
    Any(Vec<Predicate>),
}

impl Predicate {
    pub fn conjunction(literals: impl IntoIterator<Item = Literal>) -> Predicate {
        let mut parts: Vec<Predicate> = literals.into_iter().map(Predicate::Lit).collect();
        match parts.len() {
            0 => Predicate::True,
            1 => parts.pop().unwrap(),
            _ => Predicate::All(parts),
        }
    }

    /// Evaluates the predicate; `Err` carries the first unknown variable.
    pub fn eval(&self, lookup: &impl Lookup) -> Result<bool, String> {
        Ok(match self {
            Predicate::True => true,
            Predicate::False => false,
            Predicate::Lit(l) => l.eval(lookup)?,
            Predicate::Not(p) => !p.eval(lookup)?,
            Predicate::All(ps) => {
                for p in ps {
                    if !p.eval(lookup)? {
                        return Ok(false);
                    }
                }
                true
            }
            Predicate::Any(ps) => {
                for p in ps {
                    if p.eval(lookup)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }

    /// Flattens the predicate into a conjunction of literals, if it is one.
    /// Negated literals are folded into their complementary operator.
    pub fn as_conjunction(&self) -> Option<Vec<Literal>> {
        let mut out = Vec::new();
        if self.collect_conjunction(&mut out) {
            Some(out)
        } else {
            None
        }
    }

    fn collect_conjunction(&self, out: &mut Vec<Literal>) -> bool {
        match self {
            Predicate::True => true,
            Predicate::Lit(l) => {
                out.push(l.clone());
                true
            }
            Predicate::Not(inner) => match inner.as_ref() {
                Predicate::Lit(l) => {
                    out.push(l.negated());
                    true
                }
                _ => false,
            },
            Predicate::All(ps) => ps.iter().all(|p| p.collect_conjunction(out)),
            Predicate::False | Predicate::Any(_) => false,
        }
    }

    /// Every literal mentioned anywhere in the predicate.
    pub fn literals(&self) -> Vec<&Literal> {
        let mut out = Vec::new();
        self.walk_literals(&mut out);
        out
    }

    fn walk_literals<'a>(&'a self, out: &mut Vec<&'a Literal>) {
        match self {
            Predicate::Lit(l) => out.push(l),
            Predicate::Not(p) => p.walk_literals(out),
            Predicate::All(ps) | Predicate::Any(ps) => ps.iter().for_each(|p| p.walk_literals(out)),
            Predicate::True | Predicate::False => {}
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(f: &mut fmt::Formatter<'_>, ps: &[Predicate], sep: &str) -> fmt::Result {
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                match p {
                    Predicate::All(_) | Predicate::Any(_) => write!(f, "({p})")?,
                    _ => write!(f, "{p}")?,
                }
            }
            Ok(())
        }
        match self {
            Predicate::True => f.write_str("true"),
            Predicate::False => f.write_str("false"),
            Predicate::Lit(l) => write!(f, "{l}"),
            Predicate::Not(p) => match p.as_ref() {
                Predicate::Lit(_) | Predicate::All(_) | Predicate::Any(_) => write!(f, "!({p})"),
                _ => write!(f, "!{p}"),
            },
            Predicate::All(ps) => join(f, ps, " && "),
            Predicate::Any(ps) => join(f, ps, " || "),
        }
    }
}

/// Renders a literal list as a conjunction; the empty list renders as `true`.
pub fn format_conjunction(literals: &[Literal]) -> String {
    if literals.is_empty() {
        return "true".to_string();
    }
    literals.iter().map(Literal::to_string).collect::<Vec<_>>().join(" && ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at offset {offset}: {message}")]
pub struct ExprError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Op(CmpOp),
    And,
    Or,
    Bang,
    LParen,
    RParen,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    let err = |offset: usize, message: String| ExprError { offset, message };
    while i < chars.len() {
        let (pos, c) = chars[i];
        let next = chars.get(i + 1).map(|&(_, c)| c);
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push((pos, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((pos, Tok::RParen));
                i += 1;
            }
            '&' if next == Some('&') => {
                out.push((pos, Tok::And));
                i += 2;
            }
            '|' if next == Some('|') => {
                out.push((pos, Tok::Or));
                i += 2;
            }
            '!' if next == Some('=') => {
                out.push((pos, Tok::Op(CmpOp::Ne)));
                i += 2;
            }
            '!' => {
                out.push((pos, Tok::Bang));
                i += 1;
            }
            '=' => {
                out.push((pos, Tok::Op(CmpOp::Eq)));
                i += if next == Some('=') { 2 } else { 1 };
            }
            '<' | '>' => {
                let (op, len) = match (c, next) {
                    ('<', Some('=')) => (CmpOp::Le, 2),
                    ('<', _) => (CmpOp::Lt, 1),
                    ('>', Some('=')) => (CmpOp::Ge, 2),
                    _ => (CmpOp::Gt, 1),
                };
                out.push((pos, Tok::Op(op)));
                i += len;
            }
            c if is_ident_char(c) => {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i].1) {
                    i += 1;
                }
                let end = chars.get(i).map_or(text.len(), |&(p, _)| p);
                let word = &text[pos..end];
                let numeric = word
                    .strip_prefix('-')
                    .unwrap_or(word)
                    .chars()
                    .all(|c| c.is_ascii_digit())
                    && !word.trim_start_matches('-').is_empty();
                if numeric {
                    let n = word
                        .parse::<i64>()
                        .map_err(|e| err(chars[start].0, format!("bad integer '{word}': {e}")))?;
                    out.push((pos, Tok::Int(n)));
                } else {
                    out.push((pos, Tok::Ident(word.to_string())));
                }
            }
            other => return Err(err(pos, format!("unexpected character '{other}'"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |(o, _)| *o)
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError { offset: self.offset(), message: message.into() })
    }

    fn or(&mut self) -> Result<Predicate, ExprError> {
        let mut parts = vec![self.and()?];
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            parts.push(self.and()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Predicate::Any(parts) })
    }

    fn and(&mut self) -> Result<Predicate, ExprError> {
        let mut parts = vec![self.unary()?];
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Predicate::All(parts) })
    }

    fn unary(&mut self) -> Result<Predicate, ExprError> {
        match self.peek().cloned() {
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(Predicate::Not(Box::new(self.unary()?)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.or()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.fail("expected ')'");
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Tok::Ident(word)) => {
                let is_op_next = matches!(self.toks.get(self.pos + 1), Some((_, Tok::Op(_))));
                if !is_op_next && (word == "true" || word == "false") {
                    self.pos += 1;
                    return Ok(if word == "true" { Predicate::True } else { Predicate::False });
                }
                self.literal().map(Predicate::Lit)
            }
            Some(_) => self.fail("expected literal, '!' or '('"),
            None => self.fail("unexpected end of expression"),
        }
    }

    fn literal(&mut self) -> Result<Literal, ExprError> {
        let var = match self.peek().cloned() {
            Some(Tok::Ident(v)) => v,
            _ => return self.fail("expected variable name"),
        };
        self.pos += 1;
        let op = match self.peek() {
            Some(Tok::Op(op)) => *op,
            _ => return self.fail("expected comparison operator"),
        };
        self.pos += 1;
        let value = match self.peek().cloned() {
            Some(Tok::Int(n)) => Value::Int(n),
            Some(Tok::Ident(w)) if w == "true" => Value::Bool(true),
            Some(Tok::Ident(w)) if w == "false" => Value::Bool(false),
            Some(Tok::Ident(w)) => Value::Sym(w),
            _ => return self.fail("expected value"),
        };
        self.pos += 1;
        Ok(Literal { var, op, value })
    }
}

fn parser(text: &str) -> Result<Parser, ExprError> {
    Ok(Parser { toks: lex(text)?, pos: 0, len: text.len() })
}

pub fn parse_predicate(text: &str) -> Result<Predicate, ExprError> {
    let mut p = parser(text)?;
    let pred = p.or()?;
    if p.pos != p.toks.len() {
        return p.fail("trailing input");
    }
    Ok(pred)
}

pub fn parse_literal(text: &str) -> Result<Literal, ExprError> {
    let mut p = parser(text)?;
    let lit = p.literal()?;
    if p.pos != p.toks.len() {
        return p.fail("trailing input");
    }
    Ok(lit)
}

/// Parses a conjunction of literals (`true` is the empty conjunction).
pub fn parse_conjunction(text: &str) -> Result<Vec<Literal>, ExprError> {
    let pred = parse_predicate(text)?;
    pred.as_conjunction().ok_or(ExprError {
        offset: 0,
        message: "expected a conjunction of literals".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn parses_literals_with_every_operator() {
        for (text, op) in [
            ("x = 1", CmpOp::Eq),
            ("x == 1", CmpOp::Eq),
            ("x != 1", CmpOp::Ne),
            ("x < 1", CmpOp::Lt),
            ("x <= 1", CmpOp::Le),
            ("x > 1", CmpOp::Gt),
            ("x >= 1", CmpOp::Ge),
        ] {
            assert_eq!(parse_literal(text).unwrap(), Literal::new("x", op, Value::Int(1)));
        }
        assert_eq!(
            parse_literal("robot_at = key-room").unwrap().value,
            Value::Sym("key-room".into())
        );
        assert_eq!(parse_literal("t=-3").unwrap().value, Value::Int(-3));
    }

    #[test]
    fn precedence_and_display_round_trip() {
        let p = parse_predicate("a = true || b = 1 && !(c = x)").unwrap();
        match &p {
            Predicate::Any(parts) => assert!(matches!(parts[1], Predicate::All(_))),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(parse_predicate(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn evaluation() {
        let w = world(&[("a", Value::Bool(false)), ("n", Value::Int(3))]);
        assert!(parse_predicate("a = false && n >= 3").unwrap().eval(&w).unwrap());
        assert!(!parse_predicate("n > 3").unwrap().eval(&w).unwrap());
        assert_eq!(parse_predicate("zz = 1").unwrap().eval(&w), Err("zz".to_string()));
        assert!(parse_predicate("true").unwrap().eval(&w).unwrap());
    }

    #[test]
    fn conjunction_flattening() {
        let lits = parse_conjunction("a = 1 && !(b = 2) && true").unwrap();
        assert_eq!(lits.len(), 2);
        assert_eq!(lits[1].op, CmpOp::Ne);
        assert!(parse_conjunction("true").unwrap().is_empty());
        assert!(parse_conjunction("a = 1 || b = 2").is_err());
    }

    #[test]
    fn errors_carry_offsets() {
        let e = parse_predicate("a = 1 &&").unwrap_err();
        assert_eq!(e.offset, 8);
        assert!(parse_predicate("a = 1 )").is_err());
        assert!(parse_predicate("a $ 1").is_err());
    }

    #[test]
    fn ordering_literal_on_non_integers_never_holds() {
        let l = Literal::new("x", CmpOp::Lt, Value::Int(2));
        assert!(!l.holds_for(&Value::Bool(true)));
        assert!(l.holds_for(&Value::Int(1)));
        assert!(l.negated().holds_for(&Value::Int(2)));
    }
}
