use std::collections::BTreeSet;

use super::{ActionInstance, ActionTemplate, ArgKind, AtlError, Binding, Literal};
use crate::map::{natural_cmp, WorldState};
use crate::sim::eval_condition;

/// World-independent constraints on grounding.
#[derive(Clone, Debug, Default)]
pub struct GroundingPolicy {
    /// Positions never chosen as a buffer (goal destinations).
    pub reserved: BTreeSet<String>,
}

/// Resolves every variable `partial` leaves unbound and returns the ground
/// instance with its ground pre-conditions.
///
/// Object and position variables take the lowest-identifier constant that
/// satisfies the pre-conditions mentioning them once their other variables
/// are bound. Relational pre-conditions take precedence: `object_at(?x, ?p)`
/// with `?x` bound fixes `?p` even if `accessible(?p)` is currently false.
/// A position chosen among several candidates is a buffer:
/// reserved positions are skipped and, for a located robot, positions in its
/// current location are preferred. Location variables take the location
/// containing a bound position (or a bound object's position).
pub fn ground(
    template: &ActionTemplate,
    partial: &Binding,
    world: &WorldState,
    policy: &GroundingPolicy,
) -> Result<(ActionInstance, Vec<Literal>), AtlError> {
    for var in partial.keys() {
        if template.param(var).is_none() {
            return Err(AtlError::Validation {
                template: template.name.clone(),
                message: format!("binding names unknown variable `?{var}`"),
            });
        }
    }
    let mut binding = partial.clone();
    loop {
        let mut progress = false;
        for param in &template.params {
            if binding.contains_key(&param.name) {
                continue;
            }
            let value = match param.kind {
                ArgKind::Location => location_witness(template, &binding, world),
                _ => value_witness(template, &param.name, param.kind, &binding, world, policy)?,
            };
            if let Some(value) = value {
                binding.insert(param.name.clone(), value);
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }
    if let Some(missing) = template.params.iter().find(|p| !binding.contains_key(&p.name)) {
        return Err(AtlError::NoWitness {
            template: template.name.clone(),
            variable: missing.name.clone(),
        });
    }
    let instance = ActionInstance {
        name: template.name.clone(),
        binding: template
            .params
            .iter()
            .map(|p| (p.name.clone(), binding[&p.name].clone()))
            .collect(),
    };
    let pre = template
        .pre
        .iter()
        .map(|p| p.apply(&binding).expect("all parameters bound"))
        .collect();
    Ok((instance, pre))
}

fn location_witness(template: &ActionTemplate, binding: &Binding, world: &WorldState) -> Option<String> {
    let bound = |kind: ArgKind| {
        template
            .params
            .iter()
            .filter(move |p| p.kind == kind)
            .filter_map(|p| binding.get(&p.name))
    };
    bound(ArgKind::Position)
        .find_map(|p| world.location_of(p))
        .or_else(|| bound(ArgKind::Object).find_map(|o| world.position_of(o).and_then(|p| world.location_of(p))))
        .map(str::to_string)
}

fn value_witness(
    template: &ActionTemplate,
    var: &str,
    kind: ArgKind,
    binding: &Binding,
    world: &WorldState,
    policy: &GroundingPolicy,
) -> Result<Option<String>, AtlError> {
    let mut witnesses: Vec<_> = template
        .pre
        .iter()
        .filter(|p| p.vars().any(|v| v == var))
        .filter(|p| p.vars().all(|v| v == var || binding.contains_key(v)))
        .collect();
    if witnesses.is_empty() {
        return Ok(None);
    }
    // A relation to something already bound pins the value down; one-place
    // properties such as clear(?p) only narrow the choice when nothing else does.
    if witnesses.iter().any(|p| p.args.len() > 1) {
        witnesses.retain(|p| p.args.len() > 1);
    }
    let mut candidates: Vec<&str> = match kind {
        ArgKind::Object => world.objects(),
        ArgKind::Position => world.positions().collect(),
        ArgKind::Location => unreachable!("locations resolve by containment"),
    };
    candidates.sort_by(|a, b| natural_cmp(a, b));

    let mut satisfying = Vec::new();
    for candidate in candidates {
        let mut trial = binding.clone();
        trial.insert(var.to_string(), candidate.to_string());
        let mut ok = true;
        for pattern in &witnesses {
            let literal = pattern.apply(&trial).expect("witness variables bound");
            let holds = eval_condition(world, &literal).map_err(|e| AtlError::Validation {
                template: template.name.clone(),
                message: e.to_string(),
            })?;
            if !holds {
                ok = false;
                break;
            }
        }
        if ok {
            satisfying.push(candidate);
        }
    }

    let chosen = if kind == ArgKind::Position && satisfying.len() > 1 {
        let unreserved: Vec<&str> = satisfying
            .iter()
            .copied()
            .filter(|p| !policy.reserved.contains(*p))
            .collect();
        let local: Vec<&str> = match world.robot_location() {
            Some(here) => unreserved
                .iter()
                .copied()
                .filter(|p| world.location_of(p) == Some(here))
                .collect(),
            None => Vec::new(),
        };
        local.first().or(unreserved.first()).copied()
    } else {
        satisfying.first().copied()
    };
    match chosen {
        Some(c) => Ok(Some(c.to_string())),
        None => Err(AtlError::NoWitness {
            template: template.name.clone(),
            variable: var.to_string(),
        }),
    }
}
