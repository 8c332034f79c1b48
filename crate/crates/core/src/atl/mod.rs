//! Action Template Library.
//!
//! An action template pairs the conditions that must hold before an action
//! can run with the conditions its completion makes true. Templates are
//! written over variables; the planner unifies a failed goal literal with a
//! template's post-conditions and grounds the remaining variables against
//! the current world.

mod ground;
mod text;
mod unify;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ground::{ground, GroundingPolicy};
pub use text::load_atl;
pub use unify::{match_templates, TemplateMatch};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AtlError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("template `{template}`: {message}")]
    Validation { template: String, message: String },
    #[error("unregistered predicate `{0}`")]
    UnknownPredicate(String),
    #[error("template `{template}`: no witness for variable `{variable}`")]
    NoWitness { template: String, variable: String },
    #[error("invalid literal `{0}`")]
    BadLiteral(String),
}

/// Kind of constant an argument slot accepts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgKind {
    Object,
    Position,
    Location,
}

impl fmt::Display for ArgKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArgKind::Object => "object",
            ArgKind::Position => "position",
            ArgKind::Location => "location",
        })
    }
}

impl FromStr for ArgKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "object" => Ok(ArgKind::Object),
            "position" => Ok(ArgKind::Position),
            "location" => Ok(ArgKind::Location),
            other => Err(format!("unknown argument kind `{other}`")),
        }
    }
}

/// A ground condition, e.g. `object_at(red_can, position_2)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Literal {
    pub fn new<P: Into<String>, A: Into<String>>(predicate: P, args: impl IntoIterator<Item = A>) -> Self {
        Literal {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.predicate, self.args.join(", "))
    }
}

impl FromStr for Literal {
    type Err = AtlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (predicate, args) = split_call(s).ok_or_else(|| AtlError::BadLiteral(s.to_string()))?;
        if !is_ident(predicate) || !args.iter().all(|a| is_ident(a)) {
            return Err(AtlError::BadLiteral(s.to_string()));
        }
        Ok(Literal::new(predicate, args))
    }
}

impl Serialize for Literal {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Literal {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Splits `name(a, b)` into `("name", ["a", "b"])`.
pub(crate) fn split_call(s: &str) -> Option<(&str, Vec<&str>)> {
    let s = s.trim();
    let open = s.find('(')?;
    if !s.ends_with(')') {
        return None;
    }
    let name = s[..open].trim();
    let inner = s[open + 1..s.len() - 1].trim();
    let args = if inner.is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(str::trim).collect()
    };
    Some((name, args))
}

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphanumeric() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Var(n) | Term::Const(n) => n,
        }
    }
}

/// A condition over variables and constants.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pattern {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Pattern {
    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
    }

    /// Substitutes `binding`; `None` if some variable is unbound.
    pub fn apply(&self, binding: &Binding) -> Option<Literal> {
        let args = self
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => binding.get(v).cloned(),
                Term::Const(c) => Some(c.clone()),
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Literal {
            predicate: self.predicate.clone(),
            args,
        })
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<&str> = self.args.iter().map(Term::name).collect();
        write!(f, "{}({})", self.predicate, args.join(", "))
    }
}

/// Variable → constant substitution.
pub type Binding = BTreeMap<String, String>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EffectOp {
    Add,
    Delete,
}

/// A world mutation applied when an action completes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Effect {
    pub op: EffectOp,
    pub pattern: Pattern,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub kind: ArgKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionTemplate {
    pub name: String,
    pub params: Vec<Param>,
    /// Verbs that name this action in descriptive steps.
    pub verbs: Vec<String>,
    pub pre: Vec<Pattern>,
    pub post: Vec<Pattern>,
    pub effects: Vec<Effect>,
}

impl ActionTemplate {
    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn is_named_by(&self, verb: &str) -> bool {
        self.name.eq_ignore_ascii_case(verb) || self.verbs.iter().any(|v| v.eq_ignore_ascii_case(verb))
    }
}

/// A template with every parameter bound, in parameter order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionInstance {
    pub name: String,
    pub binding: Vec<(String, String)>,
}

impl ActionInstance {
    pub fn binding_map(&self) -> Binding {
        self.binding.iter().cloned().collect()
    }

    pub fn arg(&self, var: &str) -> Option<&str> {
        self.binding.iter().find(|(v, _)| v == var).map(|(_, c)| c.as_str())
    }
}

/// Short form used in traces and golden files: `pick(red_can, position_1)`.
impl fmt::Display for ActionInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<&str> = self.binding.iter().map(|(_, c)| c.as_str()).collect();
        write!(f, "{}({})", self.name, args.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub kinds: Vec<ArgKind>,
    /// Exclusivity tag shared by predicates over one single-capacity resource.
    pub tag: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PredicateRegistry {
    decls: BTreeMap<String, PredicateDecl>,
}

impl PredicateRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, decl: PredicateDecl) -> Result<(), AtlError> {
        if self.decls.contains_key(&decl.name) {
            return Err(AtlError::Validation {
                template: decl.name.clone(),
                message: "predicate declared twice".into(),
            });
        }
        self.decls.insert(decl.name.clone(), decl);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&PredicateDecl> {
        self.decls.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PredicateDecl> {
        self.decls.values()
    }

    /// Exclusivity tag of `predicate`, or `None` for non-exclusive predicates.
    pub fn type_of(&self, predicate: &str) -> Result<Option<&str>, AtlError> {
        self.decls
            .get(predicate)
            .map(|d| d.tag.as_deref())
            .ok_or_else(|| AtlError::UnknownPredicate(predicate.to_string()))
    }

    /// Two literals conflict when their predicates share an exclusivity tag.
    pub fn conflicts(&self, a: &Literal, b: &Literal) -> Result<bool, AtlError> {
        Ok(match (self.type_of(&a.predicate)?, self.type_of(&b.predicate)?) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        })
    }
}

/// Free-function form of [`PredicateRegistry::type_of`].
pub fn type_of<'r>(literal: &Literal, registry: &'r PredicateRegistry) -> Result<Option<&'r str>, AtlError> {
    registry.type_of(&literal.predicate)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Library {
    pub templates: Vec<ActionTemplate>,
}

impl Library {
    pub fn get(&self, name: &str) -> Option<&ActionTemplate> {
        self.templates.iter().find(|t| t.name == name)
    }

    pub fn by_verb(&self, verb: &str) -> Option<&ActionTemplate> {
        self.templates.iter().find(|t| t.is_named_by(verb))
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    /// Ground pre-conditions of an instance.
    pub fn ground_pre(&self, instance: &ActionInstance) -> Option<Vec<Literal>> {
        let template = self.get(&instance.name)?;
        let binding = instance.binding_map();
        template.pre.iter().map(|p| p.apply(&binding)).collect()
    }

    pub fn ground_post(&self, instance: &ActionInstance) -> Option<Vec<Literal>> {
        let template = self.get(&instance.name)?;
        let binding = instance.binding_map();
        template.post.iter().map(|p| p.apply(&binding)).collect()
    }
}
