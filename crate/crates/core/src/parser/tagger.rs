use std::collections::BTreeMap;

use super::{Label, ParseError, Slot, TaggedToken};
use crate::map::SemanticMap;

/// Verbs always recognized as action keywords, whether or not the library
/// has a template for them.
pub const DEFAULT_VERBS: &[&str] = &[
    "pick", "grab", "take", "fetch", "place", "put", "bring", "set", "go", "move", "navigate", "walk", "push", "pour",
    "open", "close", "wipe", "cut", "give", "hand", "drop", "stack", "sort", "clean",
];

/// Assigns one label per token.
pub trait Tagger {
    fn tag(&self, tokens: &[String]) -> Vec<Label>;
}

/// Whitespace tokens with surrounding punctuation removed.
pub fn tokenize(step: &str) -> Vec<String> {
    step.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !(c.is_alphanumeric() || c == '_')))
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn tag(tokens: &[String], tagger: &dyn Tagger) -> Vec<TaggedToken> {
    let labels = tagger.tag(tokens);
    assert_eq!(labels.len(), tokens.len(), "tagger must label every token");
    tokens
        .iter()
        .zip(labels)
        .map(|(t, l)| TaggedToken::new(t.clone(), l))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Entry {
    Action,
    Param(Slot),
}

/// Phrase → keyword kind, matched case-insensitively.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lexicon {
    phrases: BTreeMap<Vec<String>, Entry>,
}

impl Lexicon {
    /// Default verbs plus every object, position and location of `map`
    /// under both its display name and its identifier.
    pub fn from_map(map: &SemanticMap) -> Self {
        let mut lex = Lexicon::default();
        for v in DEFAULT_VERBS {
            lex.insert(v, Entry::Action);
        }
        for o in &map.objects {
            lex.insert(&o.id.replace('_', " "), Entry::Param(Slot::Target));
            lex.insert(&o.name, Entry::Param(Slot::Target));
        }
        for p in &map.positions {
            lex.insert(&p.id.replace('_', " "), Entry::Param(Slot::Destination));
        }
        for l in &map.locations {
            lex.insert(&l.id.replace('_', " "), Entry::Param(Slot::Location));
            lex.insert(&l.name, Entry::Param(Slot::Location));
        }
        lex
    }

    fn insert(&mut self, phrase: &str, entry: Entry) {
        let words: Vec<String> = phrase.split_whitespace().map(str::to_lowercase).collect();
        if !words.is_empty() {
            self.phrases.insert(words, entry);
        }
    }

    /// Merges `kind: phrase` lines (`action`, `target`, `destination`,
    /// `location`); later entries win. `#` starts a comment.
    pub fn extend_from_text(&mut self, text: &str) -> Result<(), ParseError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ParseError::Lexicon { line: i + 1, message };
            let (kind, phrase) = line
                .split_once(':')
                .ok_or_else(|| err(format!("expected `kind: phrase`, found `{line}`")))?;
            let entry = match kind.trim().to_lowercase().as_str() {
                "action" => Entry::Action,
                "target" => Entry::Param(Slot::Target),
                "destination" => Entry::Param(Slot::Destination),
                "location" => Entry::Param(Slot::Location),
                other => return Err(err(format!("unknown keyword kind `{other}`"))),
            };
            if phrase.trim().is_empty() {
                return Err(err("empty phrase".into()));
            }
            self.insert(phrase, entry);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    fn longest(&self) -> usize {
        self.phrases.keys().map(Vec::len).max().unwrap_or(0)
    }
}

/// Longest-match dictionary tagger.
#[derive(Clone, Debug)]
pub struct LexiconTagger {
    lexicon: Lexicon,
}

impl LexiconTagger {
    pub fn new(lexicon: Lexicon) -> Self {
        LexiconTagger { lexicon }
    }
}

impl Tagger for LexiconTagger {
    fn tag(&self, tokens: &[String]) -> Vec<Label> {
        let lower: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
        let mut labels = vec![Label::O; tokens.len()];
        let mut i = 0;
        while i < tokens.len() {
            let max = self.lexicon.longest().min(tokens.len() - i);
            let hit = (1..=max)
                .rev()
                .find_map(|n| self.lexicon.phrases.get(&lower[i..i + n]).map(|e| (n, *e)));
            match hit {
                Some((n, Entry::Action)) => {
                    labels[i] = Label::BAction;
                    i += n;
                }
                Some((n, Entry::Param(slot))) => {
                    labels[i] = Label::begin(slot);
                    for l in &mut labels[i + 1..i + n] {
                        *l = Label::inside(slot);
                    }
                    i += n;
                }
                None => i += 1,
            }
        }
        labels
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::parse_map;
    use crate::testutil::{DEMO_MAP, HOUSEHOLD_MAP};

    fn labels(tagger: &LexiconTagger, step: &str) -> Vec<Label> {
        tag(&tokenize(step), tagger).into_iter().map(|t| t.label).collect()
    }

    fn demo() -> LexiconTagger {
        LexiconTagger::new(Lexicon::from_map(&parse_map(DEMO_MAP).unwrap()))
    }

    #[test]
    fn tokenize_trims_punctuation() {
        assert_eq!(tokenize("Place it at position 2."), ["Place", "it", "at", "position", "2"]);
        assert_eq!(tokenize("  \"Go\" -- now! "), ["Go", "now"]);
    }

    #[test]
    fn demo_steps() {
        use Label::*;
        let t = demo();
        assert_eq!(labels(&t, "Pick the red can"), [BAction, O, BTarget, ITarget]);
        assert_eq!(labels(&t, "Place it at position 2"), [BAction, O, O, BDestination, IDestination]);
        assert_eq!(labels(&t, "the weather is nice"), [O, O, O, O]);
        assert_eq!(labels(&t, "PICK THE BLUE CAN"), [BAction, O, BTarget, ITarget]);
    }

    #[test]
    fn locations_and_longest_match() {
        use Label::*;
        let mut lex = Lexicon::from_map(&parse_map(HOUSEHOLD_MAP).unwrap());
        let t = LexiconTagger::new(lex.clone());
        assert_eq!(labels(&t, "Go to the living room"), [BAction, O, O, BLocation, ILocation]);
        assert_eq!(labels(&t, "Bring the milk to the sofa table"), [BAction, O, BTarget, O, O, BDestination, IDestination]);
        lex.extend_from_text("# fridge items\ntarget: milk carton\naction: deliver\n").unwrap();
        let t = LexiconTagger::new(lex);
        assert_eq!(labels(&t, "Deliver the milk carton"), [BAction, O, BTarget, ITarget]);
    }

    #[test]
    fn lexicon_file_errors() {
        let mut lex = Lexicon::default();
        assert_eq!(
            lex.extend_from_text("target: cup\nthing: x\n"),
            Err(ParseError::Lexicon {
                line: 2,
                message: "unknown keyword kind `thing`".into()
            })
        );
        assert!(lex.extend_from_text("no colon").is_err());
    }
}
