//! Text form of a tree.
//!
//! ```text
//! sequence #0 {
//!   fallback #2 {
//!     condition #1 object_at(red_can, position_2)
//!     sequence #3 {
//!       condition #4 holding(red_can)
//!       action #6 place(x=red_can, p=position_2)
//!     }
//!   }
//! }
//! ```
//!
//! Control nodes are `sequence` or `fallback` with a braced, non-empty child
//! list; leaves are `condition` with a literal or `action` with a
//! `name(var=value, ...)` instance. Whitespace and line breaks are free.

use std::fmt::Write as _;

use super::{BtError, BtNode, NodeId, NodeKind};
use crate::atl::{is_ident, ActionInstance, Literal};

pub fn serialize_bt(tree: &BtNode) -> String {
    let mut out = String::new();
    write_node(tree, 0, &mut out);
    out
}

fn write_node(node: &BtNode, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match &node.kind {
        NodeKind::Sequence(children) | NodeKind::Fallback(children) => {
            let word = if matches!(node.kind, NodeKind::Sequence(_)) {
                "sequence"
            } else {
                "fallback"
            };
            let _ = writeln!(out, "{pad}{word} #{} {{", node.id.0);
            for c in children {
                write_node(c, depth + 1, out);
            }
            let _ = writeln!(out, "{pad}}}");
        }
        NodeKind::Condition(l) => {
            let _ = writeln!(out, "{pad}condition #{} {l}", node.id.0);
        }
        NodeKind::Action(a) => {
            let args: Vec<String> = a.binding.iter().map(|(v, c)| format!("{v}={c}")).collect();
            let _ = writeln!(out, "{pad}action #{} {}({})", node.id.0, a.name, args.join(", "));
        }
    }
}

pub fn deserialize_bt(text: &str) -> Result<BtNode, BtError> {
    let mut p = Parser { text, pos: 0 };
    let tree = p.node()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.error("trailing input after root node"));
    }
    tree.validate()?;
    Ok(tree)
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> BtError {
        let before = &self.text[..self.pos];
        let line = before.matches('\n').count() + 1;
        let column = before.chars().rev().take_while(|c| *c != '\n').count() + 1;
        BtError::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char) -> Result<(), BtError> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(x) => Err(self.error(format!("expected `{c}`, found `{x}`"))),
            None => Err(self.error(format!("expected `{c}`, found end of input"))),
        }
    }

    fn word(&mut self) -> Result<&'a str, BtError> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '-'))
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(self.error("expected identifier"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn node(&mut self) -> Result<BtNode, BtError> {
        let start = self.pos;
        let kind = self.word()?;
        self.expect('#')?;
        let id_at = self.pos;
        let digits = self.word()?;
        let id: u32 = digits.parse().map_err(|_| {
            self.pos = id_at;
            self.error(format!("bad node id `{digits}`"))
        })?;
        let id = NodeId(id);
        match kind {
            "sequence" | "fallback" => {
                self.expect('{')?;
                let mut children = Vec::new();
                while self.peek() != Some('}') {
                    if self.peek().is_none() {
                        return Err(self.error(format!("unclosed `{kind}` {id}")));
                    }
                    children.push(self.node()?);
                }
                self.expect('}')?;
                if children.is_empty() {
                    return Err(self.error(format!("`{kind}` {id} has no children")));
                }
                Ok(BtNode {
                    id,
                    kind: if kind == "sequence" {
                        NodeKind::Sequence(children)
                    } else {
                        NodeKind::Fallback(children)
                    },
                })
            }
            "condition" => {
                let (name, args) = self.call()?;
                let mut values = Vec::new();
                for a in args {
                    if a.contains('=') {
                        return Err(self.error("condition arguments are plain constants"));
                    }
                    values.push(a);
                }
                Ok(BtNode {
                    id,
                    kind: NodeKind::Condition(Literal::new(name, values)),
                })
            }
            "action" => {
                let (name, args) = self.call()?;
                let mut binding = Vec::new();
                for a in args {
                    let (v, c) = a
                        .split_once('=')
                        .map(|(v, c)| (v.trim(), c.trim()))
                        .filter(|(v, c)| is_ident(v) && is_ident(c))
                        .ok_or_else(|| self.error(format!("action argument `{a}` must be `var=value`")))?;
                    binding.push((v.to_string(), c.to_string()));
                }
                Ok(BtNode {
                    id,
                    kind: NodeKind::Action(ActionInstance {
                        name: name.to_string(),
                        binding,
                    }),
                })
            }
            other => {
                self.pos = start;
                self.skip_ws();
                Err(self.error(format!("unknown node kind `{other}`")))
            }
        }
    }

    fn call(&mut self) -> Result<(&'a str, Vec<&'a str>), BtError> {
        let name = self.word()?;
        self.expect('(')?;
        let rest = &self.text[self.pos..];
        let close = rest.find(')').ok_or_else(|| self.error("missing `)`"))?;
        let inner = rest[..close].trim();
        let args: Vec<&str> = if inner.is_empty() {
            Vec::new()
        } else {
            inner.split(',').map(str::trim).collect()
        };
        for a in &args {
            let ok = match a.split_once('=') {
                Some((v, c)) => is_ident(v.trim()) && is_ident(c.trim()),
                None => is_ident(a),
            };
            if !ok {
                return Err(self.error(format!("bad argument `{a}`")));
            }
        }
        self.pos += close + 1;
        Ok((name, args))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lit(s: &str) -> Literal {
        s.parse().unwrap()
    }

    #[test]
    fn single_condition_round_trips() {
        let t = BtNode::condition(7, lit("hand_empty()"));
        assert_eq!(serialize_bt(&t), "condition #7 hand_empty()\n");
        assert_eq!(deserialize_bt(&serialize_bt(&t)).unwrap(), t);
    }

    #[test]
    fn initial_goal_shape_round_trips() {
        let t = BtNode::sequence(
            0,
            vec![
                BtNode::condition(1, lit("holding(red_can)")),
                BtNode::condition(2, lit("object_at(red_can, position_2)")),
            ],
        );
        let text = serialize_bt(&t);
        assert_eq!(
            text,
            "sequence #0 {\n  condition #1 holding(red_can)\n  condition #2 object_at(red_can, position_2)\n}\n"
        );
        assert_eq!(deserialize_bt(&text).unwrap(), t);
        // Layout does not matter.
        let squeezed = "sequence#0{condition #1 holding( red_can ) condition #2 object_at(red_can,position_2)}";
        assert_eq!(deserialize_bt(squeezed).unwrap(), t);
    }

    #[test]
    fn errors_carry_position() {
        let bad = "sequence #0 {\n  condition #1 holding(red_can)\n  widget #2 x()\n}\n";
        assert_eq!(
            deserialize_bt(bad),
            Err(BtError::Parse {
                line: 3,
                column: 3,
                message: "unknown node kind `widget`".into()
            })
        );
        assert!(matches!(deserialize_bt("sequence #0 {\n}"), Err(BtError::Parse { line: 2, .. })));
        assert!(matches!(deserialize_bt("sequence #0 {\n condition #1 a()"), Err(BtError::Parse { .. })));
        assert!(matches!(deserialize_bt("condition #x a()"), Err(BtError::Parse { column: 12, .. })));
        assert!(matches!(deserialize_bt("action #1 pick(red_can)"), Err(BtError::Parse { .. })));
        assert!(matches!(
            deserialize_bt("sequence #0 { condition #1 a() condition #1 b() }"),
            Err(BtError::Structural(_))
        ));
    }

    fn ident() -> impl Strategy<Value = String> {
        "[a-z][a-z0-9_]{0,6}"
    }

    fn arb_tree() -> impl Strategy<Value = BtNode> {
        let leaf = prop_oneof![
            (ident(), proptest::collection::vec(ident(), 0..3)).prop_map(|(p, a)| NodeKind::Condition(Literal::new(p, a))),
            (ident(), proptest::collection::vec((ident(), ident()), 0..3))
                .prop_map(|(name, binding)| NodeKind::Action(ActionInstance { name, binding })),
        ];
        let kind = leaf.prop_recursive(3, 24, 3, |inner| {
            let child = inner.prop_map(|kind| BtNode { id: NodeId(0), kind });
            prop_oneof![
                proptest::collection::vec(child.clone(), 1..=3).prop_map(NodeKind::Sequence),
                proptest::collection::vec(child, 1..=3).prop_map(NodeKind::Fallback),
            ]
        });
        (kind, any::<u16>()).prop_map(|(kind, offset)| {
            let mut t = BtNode { id: NodeId(0), kind };
            let mut next = u32::from(offset);
            renumber(&mut t, &mut next);
            t
        })
    }

    fn renumber(n: &mut BtNode, next: &mut u32) {
        n.id = NodeId(*next);
        *next += 1;
        if let Some(children) = n.children_mut() {
            children.iter_mut().for_each(|c| renumber(c, next));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn random_trees_round_trip(t in arb_tree()) {
            prop_assert_eq!(deserialize_bt(&serialize_bt(&t)).unwrap(), t);
        }
    }
}
