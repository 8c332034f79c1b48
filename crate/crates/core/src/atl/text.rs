//! ATL file grammar.
//!
//! ```text
//! # comment
//! predicate object_at(object, position)
//! predicate holding(object) tag gripper
//!
//! action pick(?x: object, ?p: position)
//!   verbs: pick, grab
//!   pre: hand_empty(), object_at(?x, ?p)
//!   post: holding(?x), clear(?p)
//!   effects: -object_at(?x, ?p), +holding(?x)
//! end
//! ```
//!
//! Variables carry a leading `?`; any other argument is a constant.

use super::{
    is_ident, split_call, ActionTemplate, ArgKind, AtlError, Effect, EffectOp, Library, Param, Pattern,
    PredicateDecl, PredicateRegistry, Term,
};

pub fn load_atl(text: &str) -> Result<(Library, PredicateRegistry), AtlError> {
    let mut registry = PredicateRegistry::new();
    let mut library = Library::default();
    let mut current: Option<(usize, Draft)> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |message: String| AtlError::Syntax { line: line_no, message };

        if let Some((_, draft)) = current.as_mut() {
            if line == "end" {
                let (_, draft) = current.take().unwrap();
                library.templates.push(draft.finish());
                continue;
            }
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| syntax(format!("expected `pre:`, `post:`, `effects:`, `verbs:` or `end`, found `{line}`")))?;
            match key.trim() {
                "verbs" => {
                    for verb in rest.split(',').map(str::trim).filter(|v| !v.is_empty()) {
                        draft.verbs.push(verb.to_ascii_lowercase());
                    }
                }
                "pre" => draft.pre.extend(parse_patterns(rest).map_err(syntax)?),
                "post" => draft.post.extend(parse_patterns(rest).map_err(syntax)?),
                "effects" => {
                    for item in split_top_level(rest) {
                        let (op, body) = match item.chars().next() {
                            Some('+') => (EffectOp::Add, &item[1..]),
                            Some('-') => (EffectOp::Delete, &item[1..]),
                            _ => return Err(syntax(format!("effect `{item}` must start with `+` or `-`"))),
                        };
                        draft.effects.push(Effect {
                            op,
                            pattern: parse_pattern(body).map_err(syntax)?,
                        });
                    }
                }
                other => return Err(syntax(format!("unknown section `{other}`"))),
            }
            continue;
        }

        if let Some(rest) = line.strip_prefix("predicate ") {
            let (call, tag) = match rest.split_once(" tag ") {
                Some((call, tag)) => (call, Some(tag.trim().to_string())),
                None => (rest, None),
            };
            let (name, kinds) = split_call(call).ok_or_else(|| syntax(format!("malformed predicate `{rest}`")))?;
            if !is_ident(name) {
                return Err(syntax(format!("bad predicate name `{name}`")));
            }
            let kinds = kinds
                .iter()
                .map(|k| k.parse::<ArgKind>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(syntax)?;
            registry
                .declare(PredicateDecl {
                    name: name.to_string(),
                    kinds,
                    tag,
                })
                .map_err(|_| syntax(format!("predicate `{name}` declared twice")))?;
        } else if let Some(rest) = line.strip_prefix("action ") {
            let (name, params) = split_call(rest).ok_or_else(|| syntax(format!("malformed action header `{rest}`")))?;
            if !is_ident(name) {
                return Err(syntax(format!("bad action name `{name}`")));
            }
            let mut draft = Draft {
                name: name.to_string(),
                ..Draft::default()
            };
            for p in params {
                let (var, kind) = p
                    .split_once(':')
                    .ok_or_else(|| syntax(format!("parameter `{p}` needs a kind")))?;
                let var = var
                    .trim()
                    .strip_prefix('?')
                    .filter(|v| is_ident(v))
                    .ok_or_else(|| syntax(format!("parameter `{p}` must be a `?variable`")))?;
                draft.params.push(Param {
                    name: var.to_string(),
                    kind: kind.trim().parse().map_err(syntax)?,
                });
            }
            current = Some((line_no, draft));
        } else {
            return Err(syntax(format!("expected `predicate` or `action`, found `{line}`")));
        }
    }

    if let Some((line, draft)) = current {
        return Err(AtlError::Syntax {
            line,
            message: format!("action `{}` is missing `end`", draft.name),
        });
    }
    for template in &library.templates {
        validate(template, &registry)?;
    }
    let mut seen = std::collections::BTreeSet::new();
    for t in &library.templates {
        if !seen.insert(t.name.as_str()) {
            return Err(AtlError::Validation {
                template: t.name.clone(),
                message: "duplicate template name".into(),
            });
        }
    }
    Ok((library, registry))
}

#[derive(Default)]
struct Draft {
    name: String,
    params: Vec<Param>,
    verbs: Vec<String>,
    pre: Vec<Pattern>,
    post: Vec<Pattern>,
    effects: Vec<Effect>,
}

impl Draft {
    fn finish(self) -> ActionTemplate {
        ActionTemplate {
            name: self.name,
            params: self.params,
            verbs: self.verbs,
            pre: self.pre,
            post: self.post,
            effects: self.effects,
        }
    }
}

fn validate(t: &ActionTemplate, registry: &PredicateRegistry) -> Result<(), AtlError> {
    let fail = |message: String| AtlError::Validation {
        template: t.name.clone(),
        message,
    };
    for (i, p) in t.params.iter().enumerate() {
        if t.params[..i].iter().any(|q| q.name == p.name) {
            return Err(fail(format!("parameter `?{}` declared twice", p.name)));
        }
    }
    if t.post.is_empty() {
        return Err(fail("post-condition list is empty".into()));
    }
    let sections = t
        .pre
        .iter()
        .map(|p| ("pre", p))
        .chain(t.post.iter().map(|p| ("post", p)))
        .chain(t.effects.iter().map(|e| ("effects", &e.pattern)));
    for (section, pattern) in sections {
        let decl = registry
            .get(&pattern.predicate)
            .ok_or_else(|| fail(format!("{section}: unknown predicate `{}`", pattern.predicate)))?;
        if decl.kinds.len() != pattern.args.len() {
            return Err(fail(format!(
                "{section}: `{}` takes {} argument(s), found {}",
                pattern.predicate,
                decl.kinds.len(),
                pattern.args.len()
            )));
        }
        for (term, kind) in pattern.args.iter().zip(&decl.kinds) {
            if let Term::Var(v) = term {
                let param = t
                    .param(v)
                    .ok_or_else(|| fail(format!("{section}: variable `?{v}` is not a parameter")))?;
                if param.kind != *kind {
                    return Err(fail(format!(
                        "{section}: `?{v}` is a {} but `{}` expects a {kind}",
                        param.kind, pattern.predicate
                    )));
                }
            }
        }
    }
    Ok(())
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out.retain(|x| !x.is_empty());
    out
}

fn parse_patterns(s: &str) -> Result<Vec<Pattern>, String> {
    split_top_level(s).into_iter().map(parse_pattern).collect()
}

fn parse_pattern(s: &str) -> Result<Pattern, String> {
    let (name, args) = split_call(s).ok_or_else(|| format!("malformed condition `{}`", s.trim()))?;
    if !is_ident(name) {
        return Err(format!("bad predicate name `{name}`"));
    }
    let args = args
        .into_iter()
        .map(|a| match a.strip_prefix('?') {
            Some(v) if is_ident(v) => Ok(Term::Var(v.to_string())),
            None if is_ident(a) => Ok(Term::Const(a.to_string())),
            _ => Err(format!("bad argument `{a}` in `{}`", s.trim())),
        })
        .collect::<Result<_, _>>()?;
    Ok(Pattern {
        predicate: name.to_string(),
        args,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::DEMO_ATL;

    #[test]
    fn demo_library_loads() {
        let (lib, reg) = load_atl(DEMO_ATL).unwrap();
        let names: Vec<&str> = lib.templates.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, ["pick", "place", "move_to"]);
        assert_eq!(reg.iter().count(), 5);
        let pick = lib.get("pick").unwrap();
        assert_eq!(pick.pre.len(), 2);
        assert_eq!(pick.post[0].to_string(), "holding(x)");
        assert!(pick.is_named_by("Grab"));
    }

    #[test]
    fn empty_library_is_valid() {
        let (lib, reg) = load_atl("# nothing here\n\npredicate clear(position)\n").unwrap();
        assert!(lib.is_empty());
        assert_eq!(reg.iter().count(), 1);
        let (lib, _) = load_atl("").unwrap();
        assert!(lib.is_empty());
    }

    #[test]
    fn post_variable_outside_params_is_rejected() {
        let text = "predicate holding(object)\n\
                    action pick(?x: object)\n  post: holding(?y)\nend\n";
        match load_atl(text) {
            Err(AtlError::Validation { template, message }) => {
                assert_eq!(template, "pick");
                assert!(message.contains("?y"), "{message}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_predicate_and_arity_are_rejected() {
        let unknown = "action a(?x: object)\n  post: held(?x)\nend\n";
        assert!(matches!(load_atl(unknown), Err(AtlError::Validation { .. })));
        let arity = "predicate holding(object)\naction a(?x: object)\n  post: holding(?x, ?x)\nend\n";
        assert!(matches!(load_atl(arity), Err(AtlError::Validation { .. })));
        let kind = "predicate holding(object)\naction a(?p: position)\n  post: holding(?p)\nend\n";
        assert!(matches!(load_atl(kind), Err(AtlError::Validation { .. })));
        let empty_post = "predicate holding(object)\naction a(?x: object)\n  pre: holding(?x)\nend\n";
        assert!(matches!(load_atl(empty_post), Err(AtlError::Validation { .. })));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = "predicate holding(object)\n\naction a(?x: object)\n  post holding(?x)\nend\n";
        assert!(matches!(load_atl(text), Err(AtlError::Syntax { line: 4, .. })));
        let unterminated = "predicate holding(object)\naction a(?x: object)\n  post: holding(?x)\n";
        assert!(matches!(load_atl(unterminated), Err(AtlError::Syntax { line: 2, .. })));
    }
}
