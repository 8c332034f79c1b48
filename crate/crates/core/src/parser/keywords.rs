use super::{canonical, check_bio, GoalSpec, ParseError, Slot, TaggedToken};
use crate::atl::{ArgKind, Library, Literal, PredicateRegistry, Term};
use crate::bt::BtNode;

/// A keyword condition being filled from the parameters of one step.
struct Open {
    predicate: String,
    display: String,
    slots: Vec<(ArgKind, Option<String>)>,
}

impl Open {
    fn fill(&mut self, kind: ArgKind, value: &str) {
        if let Some(slot) = self.slots.iter_mut().find(|(k, v)| *k == kind && v.is_none()) {
            slot.1 = Some(value.to_string());
        }
    }

    fn close(self, step: usize) -> Result<Literal, ParseError> {
        let mut args = Vec::with_capacity(self.slots.len());
        for (kind, value) in self.slots {
            match value {
                Some(v) => args.push(v),
                None => {
                    return Err(ParseError::Arity {
                        step,
                        condition: self.display,
                        kind,
                    })
                }
            }
        }
        Ok(Literal::new(self.predicate, args))
    }
}

/// Reads tagged steps into goal literals. Each action keyword opens the
/// first post-condition of the template it names; the parameters that
/// follow fill that condition's argument slots by kind, in order. "it" and
/// "them" stand for the last target mentioned.
pub fn parse_keywords(
    steps: &[Vec<TaggedToken>],
    library: &Library,
    registry: &PredicateRegistry,
) -> Result<GoalSpec, ParseError> {
    let mut literals: Vec<Literal> = Vec::new();
    let mut last_target: Option<String> = None;

    for (i, tokens) in steps.iter().enumerate() {
        let step = i + 1;
        check_bio(step, tokens)?;
        let mut open: Option<Open> = None;
        let mut pending: Vec<(ArgKind, String)> = Vec::new();
        let mut params: Vec<(Slot, String)> = Vec::new();

        // Group B/I runs into phrases first so a phrase is committed whole.
        let mut items: Vec<Item> = Vec::new();
        for t in tokens {
            match t.label.slot() {
                Some((slot, true)) => items.push(Item::Param(slot, t.text.clone())),
                Some((_, false)) => {
                    if let Some(Item::Param(_, text)) = items.last_mut() {
                        text.push(' ');
                        text.push_str(&t.text);
                    }
                }
                None if t.label == super::Label::BAction => items.push(Item::Action(t.text.clone())),
                None if is_pronoun(&t.text) => items.push(Item::Pronoun),
                None => {}
            }
        }

        for item in items {
            let (kind, value) = match item {
                Item::Action(verb) => {
                    if let Some(o) = open.take() {
                        literals.push(o.close(step)?);
                    }
                    let o = open_condition(&verb, library, registry)?;
                    open = Some(o);
                    for (k, v) in pending.drain(..) {
                        open.as_mut().expect("just opened").fill(k, &v);
                    }
                    continue;
                }
                Item::Param(slot, text) => {
                    let value = canonical(&text);
                    params.push((slot, value.clone()));
                    if slot == Slot::Target {
                        last_target = Some(value.clone());
                    }
                    (slot.kind(), value)
                }
                Item::Pronoun => match &last_target {
                    Some(t) => (ArgKind::Object, t.clone()),
                    None => continue,
                },
            };
            match open.as_mut() {
                Some(o) => o.fill(kind, &value),
                None => pending.push((kind, value)),
            }
        }
        if let Some(o) = open.take() {
            literals.push(o.close(step)?);
        }
    }
    Ok(GoalSpec { literals })
}

enum Item {
    Action(String),
    Param(Slot, String),
    Pronoun,
}

fn is_pronoun(word: &str) -> bool {
    word.eq_ignore_ascii_case("it") || word.eq_ignore_ascii_case("them")
}

fn open_condition(verb: &str, library: &Library, registry: &PredicateRegistry) -> Result<Open, ParseError> {
    let verb = verb.to_lowercase();
    let template = library
        .by_verb(&verb)
        .ok_or_else(|| ParseError::UnknownAction(verb.clone()))?;
    let post = template
        .post
        .first()
        .ok_or_else(|| ParseError::UnknownAction(verb.clone()))?;
    if registry.get(&post.predicate).is_none() {
        return Err(ParseError::UnknownPredicate(post.predicate.clone()));
    }
    let slots = post
        .args
        .iter()
        .map(|t| match t {
            Term::Var(v) => {
                let kind = template.param(v).map(|p| p.kind).unwrap_or(ArgKind::Object);
                (kind, None)
            }
            Term::Const(c) => (ArgKind::Object, Some(c.clone())),
        })
        .collect();
    Ok(Open {
        predicate: post.predicate.clone(),
        display: post.to_string(),
        slots,
    })
}

/// `sequence #0` over one condition per goal literal, numbered from 1.
pub fn build_initial_bt(goal: &GoalSpec) -> Result<BtNode, ParseError> {
    if goal.literals.is_empty() {
        return Err(ParseError::EmptyGoal);
    }
    let children = goal
        .literals
        .iter()
        .zip(1..)
        .map(|(l, id)| BtNode::condition(id, l.clone()))
        .collect();
    Ok(BtNode::sequence(0, children))
}
