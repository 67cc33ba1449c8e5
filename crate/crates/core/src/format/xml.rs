//! The BT XML dialect.
//!
//! Elements: `Fallback`, `Sequence`, `Parallel` (attribute `threshold`),
//! `Condition`, `Action` (optional `binding`, defaulting to the instance
//! name) and `Open` (attributes `subgoal`, optional `mode`, `description`).
//! Every element carries `instance_name`. Input may use either quote style
//! and whitespace around `=`; output is canonical: double quotes, two-space
//! indentation, self-closing leaves, LF line endings.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::bt::{BehaviorTree, BtNode, NodeKind, Subgoal, SubgoalMode};
use crate::expr::parse_conjunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XmlErrorKind {
    MalformedXml,
    UnknownElement,
    MissingAttribute,
    DuplicateInstanceName,
}

impl fmt::Display for XmlErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            XmlErrorKind::MalformedXml => "malformed XML",
            XmlErrorKind::UnknownElement => "unknown element",
            XmlErrorKind::MissingAttribute => "missing attribute",
            XmlErrorKind::DuplicateInstanceName => "duplicate instance name",
        })
    }
}

/// Parse diagnostic with a 1-based line and column (in characters).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}: {message}")]
pub struct XmlError {
    pub kind: XmlErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub fn parse_bt_xml(text: &str) -> Result<BehaviorTree, XmlError> {
    let mut p = XmlParser { src: text, pos: 0, names: BTreeSet::new() };
    p.skip_misc()?;
    if p.at_end() {
        return Err(p.error(XmlErrorKind::MalformedXml, "no root element"));
    }
    let root = p.element()?;
    p.skip_misc()?;
    if !p.at_end() {
        return Err(p.error(XmlErrorKind::MalformedXml, "content after the root element"));
    }
    Ok(BehaviorTree::new(root))
}

struct XmlParser<'a> {
    src: &'a str,
    pos: usize,
    names: BTreeSet<String>,
}

struct Attr {
    name: String,
    value: String,
    pos: usize,
}

impl<'a> XmlParser<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn error_at(&self, pos: usize, kind: XmlErrorKind, message: impl Into<String>) -> XmlError {
        let before = &self.src[..pos.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        XmlError { kind, line, column, message: message.into() }
    }

    fn error(&self, kind: XmlErrorKind, message: impl Into<String>) -> XmlError {
        self.error_at(self.pos, kind, message)
    }

    fn malformed(&self, message: impl Into<String>) -> XmlError {
        self.error(XmlErrorKind::MalformedXml, message)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn skip_until(&mut self, terminator: &str, what: &str) -> Result<(), XmlError> {
        match self.rest().find(terminator) {
            Some(i) => {
                self.pos += i + terminator.len();
                Ok(())
            }
            None => Err(self.malformed(format!("unterminated {what}"))),
        }
    }

    /// Whitespace, comments, processing instructions and doctype declarations.
    fn skip_misc(&mut self) -> Result<(), XmlError> {
        loop {
            self.skip_ws();
            let rest = self.rest();
            if rest.starts_with("<!--") {
                self.skip_until("-->", "comment")?;
            } else if rest.starts_with("<?") {
                self.skip_until("?>", "processing instruction")?;
            } else if rest.starts_with("<!") {
                self.skip_until(">", "declaration")?;
            } else {
                return Ok(());
            }
        }
    }

    fn name(&mut self) -> Result<String, XmlError> {
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_alphabetic() || c == '_' => {}
            _ => return Err(self.malformed("expected a name")),
        }
        while matches!(self.peek(), Some(c) if c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':'))
        {
            self.bump();
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn attr_value(&mut self) -> Result<String, XmlError> {
        let quote = match self.peek() {
            Some(q @ ('"' | '\'')) => q,
            _ => return Err(self.malformed("expected a quoted attribute value")),
        };
        self.bump();
        let start = self.pos;
        loop {
            match self.peek() {
                None => return Err(self.error_at(start, XmlErrorKind::MalformedXml, "unterminated attribute value")),
                Some('<') => return Err(self.malformed("'<' inside attribute value")),
                Some(c) if c == quote => break,
                Some(_) => {
                    self.bump();
                }
            }
        }
        let raw = &self.src[start..self.pos];
        self.bump();
        unescape(raw).map_err(|(offset, msg)| self.error_at(start + offset, XmlErrorKind::MalformedXml, msg))
    }

    fn element(&mut self) -> Result<BtNode, XmlError> {
        let start = self.pos;
        if self.bump() != Some('<') {
            return Err(self.error_at(start, XmlErrorKind::MalformedXml, "expected '<'"));
        }
        let tag = self.name()?;
        let mut attrs: Vec<Attr> = Vec::new();
        let self_closing = loop {
            let had_ws = matches!(self.peek(), Some(c) if c.is_whitespace());
            self.skip_ws();
            match self.peek() {
                Some('/') => {
                    self.bump();
                    if self.bump() != Some('>') {
                        return Err(self.malformed("expected '>' after '/'"));
                    }
                    break true;
                }
                Some('>') => {
                    self.bump();
                    break false;
                }
                None => return Err(self.malformed(format!("unterminated start tag <{tag}>"))),
                Some(_) => {
                    if !had_ws {
                        return Err(self.malformed("expected whitespace before attribute"));
                    }
                    let pos = self.pos;
                    let name = self.name()?;
                    self.skip_ws();
                    if self.bump() != Some('=') {
                        return Err(self.malformed(format!("expected '=' after attribute '{name}'")));
                    }
                    self.skip_ws();
                    let value = self.attr_value()?;
                    if attrs.iter().any(|a| a.name == name) {
                        return Err(self.error_at(pos, XmlErrorKind::MalformedXml, format!("duplicate attribute '{name}'")));
                    }
                    attrs.push(Attr { name, value, pos });
                }
            }
        };

        let mut children = Vec::new();
        if !self_closing {
            loop {
                self.skip_ws();
                let rest = self.rest();
                if rest.starts_with("</") {
                    self.pos += 2;
                    let close_pos = self.pos;
                    let close = self.name()?;
                    if close != tag {
                        return Err(self.error_at(
                            close_pos,
                            XmlErrorKind::MalformedXml,
                            format!("closing tag </{close}> does not match <{tag}>"),
                        ));
                    }
                    self.skip_ws();
                    if self.bump() != Some('>') {
                        return Err(self.malformed("expected '>'"));
                    }
                    break;
                } else if rest.starts_with("<!--") {
                    self.skip_until("-->", "comment")?;
                } else if rest.starts_with('<') {
                    children.push(self.element()?);
                } else if rest.is_empty() {
                    return Err(self.malformed(format!("missing </{tag}>")));
                } else {
                    return Err(self.malformed("unexpected text content"));
                }
            }
        }
        self.build(start, &tag, attrs, children)
    }

    fn build(
        &mut self,
        start: usize,
        tag: &str,
        attrs: Vec<Attr>,
        children: Vec<BtNode>,
    ) -> Result<BtNode, XmlError> {
        let get = |key: &str| attrs.iter().find(|a| a.name == key);
        let required = |key: &str| {
            get(key).map(|a| a.value.clone()).ok_or_else(|| {
                self.error_at(start, XmlErrorKind::MissingAttribute, format!("<{tag}> requires '{key}'"))
            })
        };
        let kind = match tag {
            "Fallback" => NodeKind::Fallback,
            "Sequence" => NodeKind::Sequence,
            "Parallel" => {
                let raw = required("threshold")?;
                let threshold = raw.trim().parse::<usize>().map_err(|_| {
                    let at = get("threshold").map_or(start, |a| a.pos);
                    self.error_at(at, XmlErrorKind::MalformedXml, format!("threshold '{raw}' is not a non-negative integer"))
                })?;
                NodeKind::Parallel { threshold }
            }
            "Condition" | "Action" => {
                let binding = match get("binding") {
                    Some(a) => a.value.clone(),
                    None => required("instance_name")?,
                };
                if tag == "Condition" {
                    NodeKind::Condition { binding }
                } else {
                    NodeKind::Action { binding }
                }
            }
            "Open" => {
                let raw = required("subgoal")?;
                let at = get("subgoal").map_or(start, |a| a.pos);
                let literals = parse_conjunction(&raw).map_err(|e| {
                    self.error_at(at, XmlErrorKind::MalformedXml, format!("bad subgoal '{raw}': {e}"))
                })?;
                let mode = match get("mode") {
                    None => SubgoalMode::Achieve,
                    Some(a) => SubgoalMode::parse(&a.value).ok_or_else(|| {
                        self.error_at(a.pos, XmlErrorKind::MalformedXml, format!("unknown mode '{}'", a.value))
                    })?,
                };
                let description = get("description").map(|a| a.value.clone()).unwrap_or_default();
                NodeKind::Open(Subgoal { literals, description, mode })
            }
            other => {
                return Err(self.error_at(
                    start,
                    XmlErrorKind::UnknownElement,
                    format!("<{other}> is not part of the dialect"),
                ))
            }
        };
        let name = required("instance_name")?;
        if !self.names.insert(name.clone()) {
            return Err(self.error_at(
                start,
                XmlErrorKind::DuplicateInstanceName,
                format!("instance_name '{name}' used more than once"),
            ));
        }
        Ok(BtNode { name, kind, children })
    }
}

fn unescape(raw: &str) -> Result<String, (usize, String)> {
    if !raw.contains('&') {
        return Ok(raw.to_string());
    }
    let mut out = String::with_capacity(raw.len());
    let mut i = 0;
    while let Some(off) = raw[i..].find('&') {
        out.push_str(&raw[i..i + off]);
        let at = i + off;
        let end = raw[at..].find(';').ok_or((at, "unterminated entity".to_string()))? + at;
        let entity = &raw[at + 1..end];
        let c = match entity {
            "amp" => '&',
            "lt" => '<',
            "gt" => '>',
            "quot" => '"',
            "apos" => '\'',
            _ => {
                let code = if let Some(hex) = entity.strip_prefix("#x") {
                    u32::from_str_radix(hex, 16).ok()
                } else if let Some(dec) = entity.strip_prefix('#') {
                    dec.parse::<u32>().ok()
                } else {
                    None
                };
                code.and_then(char::from_u32).ok_or((at, format!("unknown entity '&{entity};'")))?
            }
        };
        out.push(c);
        i = end + 1;
    }
    out.push_str(&raw[i..]);
    Ok(out)
}

fn escape_attr(value: &str, out: &mut String) {
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
}

/// Canonical serialization; always ends with a newline.
pub fn serialize_bt_xml(tree: &BehaviorTree) -> String {
    let mut out = String::new();
    write_node(tree.root(), 0, &mut out);
    out
}

fn write_node(node: &BtNode, indent: usize, out: &mut String) {
    for _ in 0..indent {
        out.push_str("  ");
    }
    out.push('<');
    out.push_str(node.kind.element_name());
    let mut attr = |key: &str, value: &str| {
        out.push(' ');
        out.push_str(key);
        out.push_str("=\"");
        escape_attr(value, out);
        out.push('"');
    };
    attr("instance_name", &node.name);
    match &node.kind {
        NodeKind::Parallel { threshold } => attr("threshold", &threshold.to_string()),
        NodeKind::Condition { binding } | NodeKind::Action { binding } if *binding != node.name => {
            attr("binding", binding)
        }
        NodeKind::Open(sub) => {
            attr("subgoal", &sub.expression());
            if sub.mode != SubgoalMode::Achieve {
                attr("mode", sub.mode.as_str());
            }
            if !sub.description.is_empty() {
                attr("description", &sub.description);
            }
        }
        _ => {}
    }
    if node.children.is_empty() {
        out.push_str(" />\n");
        return;
    }
    out.push_str(">\n");
    for child in &node.children {
        write_node(child, indent + 1, out);
    }
    for _ in 0..indent {
        out.push_str("  ");
    }
    out.push_str("</");
    out.push_str(node.kind.element_name());
    out.push_str(">\n");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt::uav_patrol_tree;
    use crate::expr::{Literal, Value};

    /// The patrol tree as typeset, with the control elements opened rather than self-closed.
    const TABLE_XML: &str = "<Fallback instance_name = 'fallback_node'>
  <Sequence instance_name = 'sequence_node'>
    <Condition instance_name = 'check-target_detected'/>
    <Action instance_name = 'warn-target' />
  </Sequence>
  <Action instance_name = 'move-to_next-pos'/>
</Fallback>
";

    #[test]
    fn parses_patrol_tree() {
        let t = parse_bt_xml(TABLE_XML).unwrap();
        assert_eq!(t, uav_patrol_tree());
    }

    #[test]
    fn canonical_output() {
        let expected = "<Fallback instance_name=\"fallback_node\">
  <Sequence instance_name=\"sequence_node\">
    <Condition instance_name=\"check-target_detected\" />
    <Action instance_name=\"warn-target\" />
  </Sequence>
  <Action instance_name=\"move-to_next-pos\" />
</Fallback>
";
        assert_eq!(serialize_bt_xml(&uav_patrol_tree()), expected);
        assert_eq!(serialize_bt_xml(&parse_bt_xml(expected).unwrap()), expected);
    }

    #[test]
    fn smallest_tree() {
        let t = BehaviorTree::new(BtNode::action("a"));
        assert_eq!(serialize_bt_xml(&t), "<Action instance_name=\"a\" />\n");
    }

    #[test]
    fn self_closed_control_with_children_is_rejected() {
        let typeset = "<Fallback instance_name = 'fallback_node'/>
  <Action instance_name = 'move-to_next-pos'/>
</Fallback>";
        let e = parse_bt_xml(typeset).unwrap_err();
        assert_eq!(e.kind, XmlErrorKind::MalformedXml);
        assert_eq!((e.line, e.column), (2, 3));
    }

    #[test]
    fn empty_sequence_parses() {
        let t = parse_bt_xml("<Sequence instance_name='s'/>").unwrap();
        assert_eq!(t.root().children.len(), 0);
    }

    #[test]
    fn unknown_element() {
        let e = parse_bt_xml("<Robot instance_name='x'/>").unwrap_err();
        assert_eq!(e.kind, XmlErrorKind::UnknownElement);
        assert_eq!((e.line, e.column), (1, 1));
    }

    #[test]
    fn missing_attributes() {
        assert_eq!(parse_bt_xml("<Action/>").unwrap_err().kind, XmlErrorKind::MissingAttribute);
        assert_eq!(
            parse_bt_xml("<Parallel instance_name='p'><Action instance_name='a'/></Parallel>")
                .unwrap_err()
                .kind,
            XmlErrorKind::MissingAttribute
        );
    }

    #[test]
    fn duplicate_instance_names() {
        let e = parse_bt_xml(
            "<Sequence instance_name='s'>\n  <Action instance_name='a'/>\n  <Action instance_name='a'/>\n</Sequence>",
        )
        .unwrap_err();
        assert_eq!(e.kind, XmlErrorKind::DuplicateInstanceName);
        assert_eq!(e.line, 3);
    }

    #[test]
    fn malformed_inputs_report_locations() {
        for bad in [
            "",
            "<",
            "<Sequence instance_name='s'>",
            "<Sequence instance_name='s'></Fallback>",
            "<Action instance_name='a'/><Action instance_name='b'/>",
            "<Action instance_name='a' instance_name='b'/>",
            "<Action instance_name=a/>",
            "<Sequence instance_name='s'>text</Sequence>",
            "<Action instance_name='&bogus;'/>",
            "<Parallel instance_name='p' threshold='two'/>",
        ] {
            let e = parse_bt_xml(bad).unwrap_err();
            assert_eq!(e.kind, XmlErrorKind::MalformedXml, "{bad:?} -> {e}");
            assert!(e.line >= 1 && e.column >= 1);
        }
    }

    #[test]
    fn prolog_comments_and_entities() {
        let t = parse_bt_xml(
            "<?xml version=\"1.0\"?>\n<!-- patrol -->\n<Action instance_name=\"a&amp;b\" binding=\"x\"/>\n",
        )
        .unwrap();
        assert_eq!(t.root().name, "a&b");
        assert_eq!(t.root().kind, NodeKind::Action { binding: "x".into() });
        assert!(serialize_bt_xml(&t).contains("binding=\"x\""));
    }

    #[test]
    fn open_nodes_round_trip() {
        let sub = Subgoal {
            literals: vec![
                Literal::eq("position", Value::Int(4)),
                Literal::eq("threat_cleared", Value::Bool(true)),
            ],
            description: "patrol \"the\" route\n<fast>".into(),
            mode: SubgoalMode::Ensure,
        };
        let t = BehaviorTree::new(BtNode::sequence(
            "s",
            vec![BtNode::open("o", sub), BtNode::action("move-to_next-pos")],
        ));
        let text = serialize_bt_xml(&t);
        assert!(text.contains("subgoal=\"position = 4 &amp;&amp; threat_cleared = true\""));
        assert_eq!(parse_bt_xml(&text).unwrap(), t);
    }
}
