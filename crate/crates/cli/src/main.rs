//! `btplan`: run planning scenarios, parse step transcripts, audit traces.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use btplan::bt::serialize_bt;
use btplan::scenario::{read_golden, Expectation, GoldenCheck, Report, RunOptions, Scenario, ScenarioError};
use btplan::trace::{audit, read_trace};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "btplan", version, args_conflicts_with_subcommands = true, about = "Behavior-tree planning scenarios in a pick-and-place simulator")]
struct Cli {
    /// Run every `*.toml` scenario in a directory and check its expected outcome.
    #[arg(long, value_name = "DIR")]
    all: Option<PathBuf>,
    /// Artifact directory; each scenario writes to `<out>/<name>/`.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario end to end.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Print the initial behavior tree parsed from a scenario's steps.
    Parse { scenario: PathBuf },
    /// Check a trace for insertion priority and object conservation.
    Audit { trace: PathBuf },
    /// Compare two action files.
    Diff { expected: PathBuf, actual: PathBuf },
}

#[derive(Args, Clone, Default)]
struct RunFlags {
    /// Write the initial tree and the tree after every insertion.
    #[arg(long)]
    dump_bt: bool,
    /// Golden action file; overrides the scenario's.
    #[arg(long, value_name = "PATH")]
    golden: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    max_expansions: Option<usize>,
    #[arg(long, value_name = "N")]
    max_ticks: Option<u64>,
    /// Add disturbances drawn from this seed.
    #[arg(long, value_name = "SEED")]
    seed_schedule: Option<u64>,
}

impl RunFlags {
    fn options(&self) -> RunOptions {
        RunOptions {
            max_expansions: self.max_expansions,
            max_ticks: self.max_ticks,
            seed: self.seed_schedule,
            golden: self.golden.clone(),
        }
    }
}

const EXIT_FAILED: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match (&cli.all, cli.command) {
        (Some(dir), _) => run_all(dir, &cli.out),
        (None, Some(Command::Run { scenario, flags })) => run_one(&scenario, &flags, &cli.out),
        (None, Some(Command::Parse { scenario })) => parse_only(&scenario),
        (None, Some(Command::Audit { trace })) => audit_trace(&trace),
        (None, Some(Command::Diff { expected, actual })) => diff(&expected, &actual),
        (None, None) => {
            eprintln!("nothing to do: give a subcommand or --all <dir> (see --help)");
            Ok(EXIT_ERROR)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn report_error(e: &ScenarioError) -> u8 {
    eprintln!("error [{}]: {e}", e.module());
    EXIT_ERROR
}

fn execute(path: &Path, flags: &RunFlags, out: &Path) -> Result<(Scenario, Report, Vec<PathBuf>), ScenarioError> {
    let scenario = Scenario::load(path)?;
    let report = scenario.execute(&flags.options())?;
    let files = report.write_artifacts(&out.join(&scenario.name), flags.dump_bt)?;
    Ok((scenario, report, files))
}

fn run_one(path: &Path, flags: &RunFlags, out: &Path) -> anyhow::Result<u8> {
    let (_, report, files) = match execute(path, flags, out) {
        Ok(r) => r,
        Err(e) => return Ok(report_error(&e)),
    };
    let o = &report.outcome;
    for a in o.completed_actions() {
        println!("{a}");
    }
    print!("outcome: {}", o.status.name());
    if let btplan::planner::OutcomeStatus::UnsolvableCondition(l) = &o.status {
        print!(" ({l})");
    }
    println!(" after {} ticks, {} expansions", o.ticks, o.expansions);
    for f in files {
        println!("wrote {}", f.display());
    }
    if let Some(g) = &report.golden {
        if g.matches() {
            println!("golden: match");
        } else {
            println!("golden: MISMATCH\n{}", g.diff());
        }
    }
    Ok(if report.passed() { 0 } else { EXIT_FAILED })
}

fn parse_only(path: &Path) -> anyhow::Result<u8> {
    let parsed = Scenario::load(path).and_then(|s| s.parse());
    match parsed {
        Ok((_, bt)) => {
            print!("{}", serialize_bt(&bt));
            Ok(0)
        }
        Err(e) => Ok(report_error(&e)),
    }
}

fn audit_trace(path: &Path) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let events = read_trace(&text).map_err(anyhow::Error::msg)?;
    match audit(&events) {
        Ok(r) => {
            println!(
                "ok: {} insertions ({} add_before), {} snapshots",
                r.insertions_checked, r.add_before_checked, r.snapshots_checked
            );
            Ok(0)
        }
        Err(problems) => {
            for p in problems {
                println!("violation: {p}");
            }
            Ok(EXIT_FAILED)
        }
    }
}

fn diff(expected: &Path, actual: &Path) -> anyhow::Result<u8> {
    let check = GoldenCheck::new(read_golden(expected)?, read_golden(actual)?);
    print!("{}", check.diff());
    Ok(if check.matches() { 0 } else { EXIT_FAILED })
}

fn run_all(dir: &Path, out: &Path) -> anyhow::Result<u8> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    let flags = RunFlags::default();
    let lines: Vec<(bool, String)> = paths
        .par_iter()
        .map(|p| {
            let label = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let expect = Scenario::load(p).map(|s| s.expect);
            let (ok, got) = match execute(p, &flags, out) {
                Ok((s, r, _)) => {
                    let status_ok = r.outcome.status.name() == s.expect.name();
                    let golden_ok = r.golden.as_ref().is_none_or(GoldenCheck::matches);
                    let got = if golden_ok {
                        r.outcome.status.name().to_string()
                    } else {
                        format!("{} (golden mismatch)", r.outcome.status.name())
                    };
                    (status_ok && golden_ok, got)
                }
                Err(e @ ScenarioError::Parse(_)) => (
                    matches!(expect, Ok(Expectation::ParseError)),
                    format!("parse_error: {e}"),
                ),
                Err(e) => (false, format!("error [{}]: {e}", e.module())),
            };
            (ok, format!("{} {label}: {got}", if ok { "PASS" } else { "FAIL" }))
        })
        .collect();
    for (_, l) in &lines {
        println!("{l}");
    }
    let failed = lines.iter().filter(|(ok, _)| !ok).count();
    println!("{} scenarios, {} failed", lines.len(), failed);
    Ok(if failed == 0 { 0 } else { EXIT_FAILED })
}
