use super::{ActionTemplate, Binding, Library, Literal, Pattern, Term};

/// A template whose post-condition `post_index` unifies with a literal.
#[derive(Clone, Debug, PartialEq)]
pub struct TemplateMatch<'a> {
    pub template: &'a ActionTemplate,
    pub post_index: usize,
    pub binding: Binding,
}

/// Every (template, post-condition) pair that unifies with `literal`, in library order.
pub fn match_templates<'a>(literal: &Literal, library: &'a Library) -> Vec<TemplateMatch<'a>> {
    let mut out = Vec::new();
    for template in &library.templates {
        for (post_index, pattern) in template.post.iter().enumerate() {
            if let Some(binding) = unify(pattern, literal) {
                out.push(TemplateMatch {
                    template,
                    post_index,
                    binding,
                });
            }
        }
    }
    out
}

pub(crate) fn unify(pattern: &Pattern, literal: &Literal) -> Option<Binding> {
    if pattern.predicate != literal.predicate || pattern.args.len() != literal.args.len() {
        return None;
    }
    let mut binding = Binding::new();
    for (term, value) in pattern.args.iter().zip(&literal.args) {
        match term {
            Term::Const(c) if c != value => return None,
            Term::Const(_) => {}
            Term::Var(v) => match binding.get(v) {
                Some(bound) if bound != value => return None,
                Some(_) => {}
                None => {
                    binding.insert(v.clone(), value.clone());
                }
            },
        }
    }
    Some(binding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atl::load_atl;
    use crate::testutil::DEMO_ATL;

    fn binding(pairs: &[(&str, &str)]) -> Binding {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn holding_matches_pick() {
        let (lib, _) = load_atl(DEMO_ATL).unwrap();
        let m = match_templates(&"holding(blue_can)".parse().unwrap(), &lib);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].template.name, "pick");
        assert_eq!(m[0].binding, binding(&[("x", "blue_can")]));
    }

    #[test]
    fn object_at_matches_place() {
        let (lib, _) = load_atl(DEMO_ATL).unwrap();
        let m = match_templates(&"object_at(red_can, position_2)".parse().unwrap(), &lib);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].template.name, "place");
        assert_eq!(m[0].binding, binding(&[("x", "red_can"), ("p", "position_2")]));
    }

    #[test]
    fn unmatched_predicate_gives_nothing() {
        let (lib, _) = load_atl(DEMO_ATL).unwrap();
        assert!(match_templates(&"opened(fridge)".parse().unwrap(), &lib).is_empty());
        // Arity mismatch never unifies.
        assert!(match_templates(&"holding(a, b)".parse().unwrap(), &lib).is_empty());
    }

    #[test]
    fn repeated_variables_and_constants_constrain() {
        let p = Pattern {
            predicate: "on".into(),
            args: vec![Term::Var("x".into()), Term::Var("x".into())],
        };
        assert!(unify(&p, &"on(a, a)".parse().unwrap()).is_some());
        assert!(unify(&p, &"on(a, b)".parse().unwrap()).is_none());
        let q = Pattern {
            predicate: "robot_at".into(),
            args: vec![Term::Const("home".into())],
        };
        assert!(unify(&q, &"robot_at(home)".parse().unwrap()).unwrap().is_empty());
        assert!(unify(&q, &"robot_at(kitchen)".parse().unwrap()).is_none());
    }
}
