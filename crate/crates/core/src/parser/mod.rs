//! From reasoning text to a goal tree: filter enumerated steps, tag tokens
//! with BIO labels, read the labels with a small automaton into goal
//! literals, and lay those out as a sequence of condition nodes.

mod filter;
mod keywords;
mod tagger;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atl::{ArgKind, Library, Literal, PredicateRegistry};

pub use filter::filter_steps;
pub use keywords::{build_initial_bt, parse_keywords};
pub use tagger::{tag, tokenize, Lexicon, LexiconTagger, Tagger, DEFAULT_VERBS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("no descriptive steps found")]
    NoSteps,
    #[error("unknown action `{0}`: no template in the library is named by this verb")]
    UnknownAction(String),
    #[error("step {step}: `{condition}` is missing its {kind} argument")]
    Arity { step: usize, condition: String, kind: ArgKind },
    #[error("step {step}: {message}")]
    Bio { step: usize, message: String },
    #[error("goal is empty")]
    EmptyGoal,
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("unregistered predicate `{0}` in keyword condition")]
    UnknownPredicate(String),
}

/// Parameter kinds a keyword can introduce.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Target,
    Destination,
    Location,
}

impl Slot {
    pub fn kind(self) -> ArgKind {
        match self {
            Slot::Target => ArgKind::Object,
            Slot::Destination => ArgKind::Position,
            Slot::Location => ArgKind::Location,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "B-Action")]
    BAction,
    #[serde(rename = "B-Target")]
    BTarget,
    #[serde(rename = "I-Target")]
    ITarget,
    #[serde(rename = "B-Destination")]
    BDestination,
    #[serde(rename = "I-Destination")]
    IDestination,
    #[serde(rename = "B-Location")]
    BLocation,
    #[serde(rename = "I-Location")]
    ILocation,
    O,
}

impl Label {
    pub const ALL: [Label; 8] = [
        Label::BAction,
        Label::BTarget,
        Label::ITarget,
        Label::BDestination,
        Label::IDestination,
        Label::BLocation,
        Label::ILocation,
        Label::O,
    ];

    pub fn begin(slot: Slot) -> Label {
        match slot {
            Slot::Target => Label::BTarget,
            Slot::Destination => Label::BDestination,
            Slot::Location => Label::BLocation,
        }
    }

    pub fn inside(slot: Slot) -> Label {
        match slot {
            Slot::Target => Label::ITarget,
            Slot::Destination => Label::IDestination,
            Slot::Location => Label::ILocation,
        }
    }

    /// Slot of a parameter label and whether it opens the parameter.
    pub fn slot(self) -> Option<(Slot, bool)> {
        match self {
            Label::BTarget => Some((Slot::Target, true)),
            Label::ITarget => Some((Slot::Target, false)),
            Label::BDestination => Some((Slot::Destination, true)),
            Label::IDestination => Some((Slot::Destination, false)),
            Label::BLocation => Some((Slot::Location, true)),
            Label::ILocation => Some((Slot::Location, false)),
            Label::BAction | Label::O => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::BAction => "B-Action",
            Label::BTarget => "B-Target",
            Label::ITarget => "I-Target",
            Label::BDestination => "B-Destination",
            Label::IDestination => "I-Destination",
            Label::BLocation => "B-Location",
            Label::ILocation => "I-Location",
            Label::O => "O",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL
            .into_iter()
            .find(|l| l.to_string() == s)
            .ok_or_else(|| format!("unknown label `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub text: String,
    pub label: Label,
}

impl TaggedToken {
    pub fn new(text: impl Into<String>, label: Label) -> Self {
        TaggedToken {
            text: text.into(),
            label,
        }
    }
}

/// Ordered goal literals; one per action keyword.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub literals: Vec<Literal>,
}

/// An `I-x` label must continue a `B-x`/`I-x` run of the same kind.
pub fn check_bio(step: usize, tokens: &[TaggedToken]) -> Result<(), ParseError> {
    let mut prev = Label::O;
    for (i, t) in tokens.iter().enumerate() {
        if let Some((slot, false)) = t.label.slot() {
            if prev != Label::begin(slot) && prev != Label::inside(slot) {
                return Err(ParseError::Bio {
                    step,
                    message: format!("token {} `{}` is {} after {prev}", i + 1, t.text, t.label),
                });
            }
        }
        prev = t.label;
    }
    Ok(())
}

/// Lower-case, words joined by underscores: "Position 2" → `position_2`.
pub fn canonical(phrase: &str) -> String {
    phrase
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

/// The whole text pipeline for one transcript.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedSteps {
    pub steps: Vec<String>,
    pub tagged: Vec<Vec<TaggedToken>>,
    pub goal: GoalSpec,
}

pub fn parse_transcript(
    raw: &str,
    tagger: &dyn Tagger,
    library: &Library,
    registry: &PredicateRegistry,
) -> Result<ParsedSteps, ParseError> {
    let steps = filter_steps(raw)?;
    let tagged: Vec<Vec<TaggedToken>> = steps.iter().map(|s| tag(&tokenize(s), tagger)).collect();
    let goal = parse_keywords(&tagged, library, registry)?;
    Ok(ParsedSteps { steps, tagged, goal })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip_and_count() {
        for l in Label::ALL {
            assert_eq!(l.to_string().parse::<Label>().unwrap(), l);
        }
        // Seven keyword labels plus O.
        assert_eq!(Label::ALL.iter().filter(|l| **l != Label::O).count(), 7);
    }

    #[test]
    fn bio_rules() {
        let ok = [
            TaggedToken::new("red", Label::BTarget),
            TaggedToken::new("can", Label::ITarget),
        ];
        assert!(check_bio(1, &ok).is_ok());
        let orphan = [TaggedToken::new("can", Label::ITarget)];
        assert!(check_bio(1, &orphan).is_err());
        let mixed = [
            TaggedToken::new("red", Label::BTarget),
            TaggedToken::new("table", Label::IDestination),
        ];
        assert!(check_bio(1, &mixed).is_err());
    }

    #[test]
    fn canonical_names() {
        assert_eq!(canonical("Position  2"), "position_2");
        assert_eq!(canonical("Living Room"), "living_room");
    }
}
