//! Scenario files and the end-to-end pipeline: map → steps → goal tree →
//! planner loop in the simulator → artifacts and a golden verdict.
//!
//! ```toml
//! name = "intro-obstacle"
//! map = "../maps/cargo.xml"        # paths are relative to the scenario file
//! steps = "../steps/intro.txt"
//! atl = "../atl/demo.atl"
//! golden = "../golden/intro.actions"
//! expect = "succeeded"             # or unsolvable_condition, budget_exhausted, parse_error
//!
//! [planner]
//! max_expansions = 16
//!
//! [[disturbance]]
//! when_action_running = "place"    # or at_tick = 5
//! effect = "drop_held"             # drop_held | spawn_obstacle | move_object
//! to = "source"
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::atl::{load_atl, AtlError, Library, PredicateRegistry};
use crate::bt::{serialize_bt, BtNode};
use crate::map::{parse_map, serialize_map, MapError, SemanticMap, WorldState};
use crate::parser::{build_initial_bt, parse_transcript, Lexicon, LexiconTagger, ParseError, ParsedSteps};
use crate::planner::{reservation_policy, run, OutcomeStatus, PlanError, PlannerConfig, PlannerOutcome};
use crate::sim::{DisturbanceEffect, DisturbanceEvent, DropTarget, Trigger};
use crate::trace::{write_trace, EventKind};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario {path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{0}")]
    Map(#[from] MapError),
    #[error("{0}")]
    Atl(#[from] AtlError),
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Plan(#[from] PlanError),
    #[error("disturbance {index}: {message}")]
    Disturbance { index: usize, message: String },
}

impl ScenarioError {
    /// Module the error came from.
    pub fn module(&self) -> &'static str {
        match self {
            ScenarioError::Io { .. } | ScenarioError::Format { .. } => "scenario",
            ScenarioError::Map(_) => "map",
            ScenarioError::Atl(_) => "atl",
            ScenarioError::Parse(_) => "parser",
            ScenarioError::Plan(_) => "planner",
            ScenarioError::Disturbance { .. } => "sim",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    map: PathBuf,
    steps: PathBuf,
    atl: PathBuf,
    golden: Option<PathBuf>,
    lexicon: Option<PathBuf>,
    expect: Option<Expectation>,
    #[serde(default)]
    planner: PlannerConfig,
    #[serde(default)]
    disturbance: Vec<RawDisturbance>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDisturbance {
    at_tick: Option<u64>,
    when_action_running: Option<String>,
    effect: String,
    to: Option<String>,
    object: Option<String>,
    at: Option<String>,
}

/// What a scenario is supposed to end in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    #[default]
    Succeeded,
    UnsolvableCondition,
    BudgetExhausted,
    ParseError,
}

impl Expectation {
    pub fn name(self) -> &'static str {
        match self {
            Expectation::Succeeded => "succeeded",
            Expectation::UnsolvableCondition => "unsolvable_condition",
            Expectation::BudgetExhausted => "budget_exhausted",
            Expectation::ParseError => "parse_error",
        }
    }
}

/// A loaded scenario with every referenced file read and validated.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub path: PathBuf,
    pub map: SemanticMap,
    pub world: WorldState,
    pub library: Library,
    pub registry: PredicateRegistry,
    pub steps_text: String,
    pub lexicon: Lexicon,
    pub golden: Option<Vec<String>>,
    pub expect: Expectation,
    pub planner: PlannerConfig,
    pub disturbances: Vec<DisturbanceEvent>,
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Golden action file: one completed action per line, `#` comments.
pub fn read_golden(path: &Path) -> Result<Vec<String>, ScenarioError> {
    Ok(read(path)?
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let raw: RawScenario = toml::from_str(&read(path)?).map_err(|e| ScenarioError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let map = parse_map(&read(&dir.join(&raw.map))?)?;
        let world = WorldState::from_map(&map)?;
        let (library, registry) = load_atl(&read(&dir.join(&raw.atl))?)?;
        let steps_text = read(&dir.join(&raw.steps))?;
        let mut lexicon = Lexicon::from_map(&map);
        if let Some(l) = &raw.lexicon {
            lexicon.extend_from_text(&read(&dir.join(l))?)?;
        }
        let golden = raw.golden.as_ref().map(|g| read_golden(&dir.join(g))).transpose()?;
        raw.planner.validate()?;
        let disturbances = raw
            .disturbance
            .into_iter()
            .enumerate()
            .map(|(i, d)| convert_disturbance(i + 1, d, &world, &library))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Scenario {
            name: raw.name,
            path: path.to_path_buf(),
            map,
            world,
            library,
            registry,
            steps_text,
            lexicon,
            golden,
            expect: raw.expect.unwrap_or_default(),
            planner: raw.planner,
            disturbances,
        })
    }

    /// Steps → goal literals → initial tree.
    pub fn parse(&self) -> Result<(ParsedSteps, BtNode), ScenarioError> {
        let tagger = LexiconTagger::new(self.lexicon.clone());
        let parsed = parse_transcript(&self.steps_text, &tagger, &self.library, &self.registry)?;
        let bt = build_initial_bt(&parsed.goal)?;
        Ok((parsed, bt))
    }

    pub fn execute(&self, options: &RunOptions) -> Result<Report, ScenarioError> {
        let (parsed, initial) = self.parse()?;
        let mut config = self.planner.clone();
        if let Some(n) = options.max_expansions {
            config.max_expansions = n;
        }
        if let Some(n) = options.max_ticks {
            config.max_ticks = n;
        }
        let policy = reservation_policy(&initial, &self.world);
        let mut disturbances = self.disturbances.clone();
        if let Some(seed) = options.seed {
            let reserved: Vec<&str> = policy.reserved.iter().map(String::as_str).collect();
            disturbances.extend(random_schedule(seed, &self.world, &reserved));
        }
        let mut outcome = run(
            initial.clone(),
            self.world.clone(),
            &self.library,
            &self.registry,
            &config,
            &disturbances,
            &policy,
        )?;
        if let Some(EventKind::Schedule { seed, .. }) = outcome.trace.first_mut().map(|e| &mut e.kind) {
            *seed = options.seed;
        }
        let golden = match &options.golden {
            Some(p) => Some(read_golden(p)?),
            None => self.golden.clone(),
        };
        let golden = golden.map(|expected| GoldenCheck::new(expected, outcome.completed_actions()));
        Ok(Report {
            name: self.name.clone(),
            parsed,
            initial,
            outcome,
            golden,
            map: self.map.clone(),
        })
    }
}

fn convert_disturbance(
    index: usize,
    raw: RawDisturbance,
    world: &WorldState,
    library: &Library,
) -> Result<DisturbanceEvent, ScenarioError> {
    let err = |message: String| ScenarioError::Disturbance { index, message };
    let trigger = match (raw.at_tick, raw.when_action_running) {
        (Some(t), None) => Trigger::AtTick(t),
        (None, Some(a)) => {
            if library.get(&a).is_none() {
                return Err(err(format!("no action named `{a}`")));
            }
            Trigger::WhenActionRunning(a)
        }
        _ => return Err(err("exactly one of at_tick and when_action_running is required".into())),
    };
    let position = |p: Option<String>, field: &str| -> Result<String, ScenarioError> {
        let p = p.ok_or_else(|| err(format!("`{field}` is required")))?;
        if !world.has_position(&p) {
            return Err(err(format!("unknown position `{p}`")));
        }
        Ok(p)
    };
    let effect = match raw.effect.as_str() {
        "drop_held" => DisturbanceEffect::DropHeld {
            to: match raw.to.as_deref() {
                None | Some("source") => DropTarget::Source,
                Some(_) => DropTarget::Position(position(raw.to, "to")?),
            },
        },
        "spawn_obstacle" => {
            let object = raw.object.clone().ok_or_else(|| err("`object` is required".into()))?;
            if world.contains_object(&object) {
                return Err(err(format!("`{object}` already exists")));
            }
            DisturbanceEffect::SpawnObstacle {
                object,
                at: position(raw.at, "at")?,
            }
        }
        "move_object" => {
            let object = raw.object.clone().ok_or_else(|| err("`object` is required".into()))?;
            if !world.contains_object(&object) {
                return Err(err(format!("unknown object `{object}`")));
            }
            DisturbanceEffect::MoveObject {
                object,
                to: position(raw.to, "to")?,
            }
        }
        other => return Err(err(format!("unknown effect `{other}`"))),
    };
    Ok(DisturbanceEvent { trigger, effect })
}

/// One or two disturbances drawn from `seed`: a drop while placing, or an
/// object shifted onto a free position at some early tick. Positions in
/// `reserved` are never used as targets.
pub fn random_schedule(seed: u64, world: &WorldState, reserved: &[&str]) -> Vec<DisturbanceEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free: Vec<&str> = world
        .free_positions()
        .into_iter()
        .filter(|p| !reserved.contains(p))
        .collect();
    let objects = world.objects();
    let n = rng.gen_range(1..=2);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let effect = match (rng.gen_bool(0.5), objects.choose(&mut rng), free.choose(&mut rng)) {
            (false, Some(o), Some(p)) => DisturbanceEffect::MoveObject {
                object: o.to_string(),
                to: p.to_string(),
            },
            _ => DisturbanceEffect::DropHeld { to: DropTarget::Source },
        };
        let trigger = match effect {
            DisturbanceEffect::DropHeld { .. } => Trigger::WhenActionRunning("place".into()),
            _ => Trigger::AtTick(rng.gen_range(1..=12)),
        };
        out.push(DisturbanceEvent { trigger, effect });
    }
    out
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub max_expansions: Option<usize>,
    pub max_ticks: Option<u64>,
    pub seed: Option<u64>,
    /// Overrides the scenario's golden file.
    pub golden: Option<PathBuf>,
}

/// Completed actions against the expected sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldenCheck {
    pub expected: Vec<String>,
    pub actual: Vec<String>,
}

impl GoldenCheck {
    pub fn new(expected: Vec<String>, actual: Vec<String>) -> Self {
        GoldenCheck { expected, actual }
    }

    pub fn matches(&self) -> bool {
        self.expected == self.actual
    }

    /// Line diff of the two sequences (`-` expected only, `+` actual only).
    pub fn diff(&self) -> String {
        let (a, b) = (&self.expected, &self.actual);
        let mut lcs = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for i in (0..a.len()).rev() {
            for j in (0..b.len()).rev() {
                lcs[i][j] = if a[i] == b[j] {
                    lcs[i + 1][j + 1] + 1
                } else {
                    lcs[i + 1][j].max(lcs[i][j + 1])
                };
            }
        }
        let mut out = String::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if i < a.len() && j < b.len() && a[i] == b[j] {
                let _ = writeln!(out, "  {}", a[i]);
                i += 1;
                j += 1;
            } else if j < b.len() && (i == a.len() || lcs[i][j + 1] >= lcs[i + 1][j]) {
                let _ = writeln!(out, "+ {}", b[j]);
                j += 1;
            } else {
                let _ = writeln!(out, "- {}", a[i]);
                i += 1;
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub name: String,
    pub parsed: ParsedSteps,
    pub initial: BtNode,
    pub outcome: PlannerOutcome,
    pub golden: Option<GoldenCheck>,
    map: SemanticMap,
}

impl Report {
    /// Succeeded, and matched the golden sequence if there is one.
    pub fn passed(&self) -> bool {
        self.outcome.status == OutcomeStatus::Succeeded && self.golden.as_ref().is_none_or(GoldenCheck::matches)
    }

    pub fn trace_text(&self) -> String {
        write_trace(&self.outcome.trace)
    }

    /// Writes `trace.jsonl`, `actions.txt` and `final_world.xml` into `dir`;
    /// with `dump_bt`, also `bt_000.txt` (the initial tree) and one
    /// `bt_NNN.txt` per insertion.
    pub fn write_artifacts(&self, dir: &Path, dump_bt: bool) -> Result<Vec<PathBuf>, ScenarioError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| ScenarioError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut files: Vec<(PathBuf, String)> = vec![
            (dir.join("trace.jsonl"), self.trace_text()),
            (dir.join("actions.txt"), self.outcome.completed_actions().iter().map(|a| format!("{a}\n")).collect()),
            (
                dir.join("final_world.xml"),
                serialize_map(&self.map.with_world(&self.outcome.world)),
            ),
        ];
        if dump_bt {
            files.push((dir.join("bt_000.txt"), serialize_bt(&self.initial)));
            for e in &self.outcome.trace {
                if let EventKind::Insertion { index, tree, .. } = &e.kind {
                    files.push((dir.join(format!("bt_{index:03}.txt")), tree.clone()));
                }
            }
        }
        for (path, text) in &files {
            fs::write(path, text).map_err(io(path))?;
        }
        Ok(files.into_iter().map(|(p, _)| p).collect())
    }
}
