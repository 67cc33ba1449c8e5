//! Command-line front end: `synth`, `simulate`, `validate`, `eval`, `dataset`.
//!
//! Exit codes: 0 success, 1 findings or failures, 2 usage or I/O errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value as Json;

use crate::bt::{validate_structure, BehaviorTree};
use crate::format::{parse_bt_xml, read_record, serialize_bt_xml, write_record, DatasetRecord, NodeImpl, NodeMeta};
use crate::library::{load_library, NodeLibrary};
use crate::metrics::{evaluate_generator, sample_correct, Synthesizer};
use crate::sim::{load_scenario, run_episode_with, EpisodeOptions, Scenario};
use crate::synth::{synthesize, validate_state, PolicyKind, SearchConfig, SynthError, Task};

#[derive(Debug, Parser)]
#[command(name = "btgen", version, about = "Behavior-tree synthesis, simulation and evaluation")]
pub struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a tree for a scenario.
    Synth(SynthArgs),
    /// Run one episode of a tree in a scenario.
    Simulate(SimulateArgs),
    /// Check a tree's structure against a library.
    Validate(ValidateArgs),
    /// pass@k and accuracy over a set of scenarios.
    Eval(EvalArgs),
    /// Build a JSON Lines corpus from a scenario directory.
    Dataset(DatasetArgs),
}

/// Search overrides; each one beats the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct SearchArgs {
    /// JSON file with search settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub policy: Option<PolicyKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub c_uct: Option<f64>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub max_nodes: Option<usize>,
    /// Episodes per full-simulation check.
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub library: PathBuf,
    /// Tree XML output; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report output; defaults to `<out stem>.report.json` next to `--out`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub library: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Episode result JSON; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the leaf trace as JSON Lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Include full world states in the trace.
    #[arg(long)]
    pub dump_states: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long)]
    pub library: PathBuf,
    /// Also run the simulation levels in this scenario.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Scenario files or directories of `*.scenario.json`.
    #[arg(long, num_args = 1.., required = true)]
    pub scenarios: Vec<PathBuf>,
    /// Samples per scenario.
    #[arg(long, default_value_t = 10)]
    pub n: u64,
    /// Comma-separated k values.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub k_values: Vec<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Directory of `<name>.scenario.json` + `<name>.library.json` pairs.
    #[arg(long)]
    pub scenarios: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    fn failed(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }
}

type CliResult = Result<(), CliError>;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn read_scenario(path: &Path) -> Result<Scenario, CliError> {
    load_scenario(&read(path)?).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn read_library(path: &Path) -> Result<NodeLibrary, CliError> {
    load_library(&read(path)?).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn read_tree(path: &Path) -> Result<BehaviorTree, CliError> {
    parse_bt_xml(&read(path)?).map_err(|e| CliError::usage(format!("{}:{}:{}: {}", path.display(), e.line, e.column, e.message)))
}

impl SearchArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<SearchConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => {
                let text = read(path)?;
                let value: Json = serde_json::from_str(&text)
                    .map_err(|e| CliError::usage(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))?;
                serde_json::from_value(value).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
            }
            None => SearchConfig::default(),
        };
        if let Some(v) = self.policy {
            config.policy = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.budget {
            config.budget = v;
        }
        if let Some(v) = self.c_uct {
            config.c_uct = v;
        }
        if let Some(v) = self.max_depth {
            config.max_depth = v;
        }
        if let Some(v) = self.max_nodes {
            config.max_nodes = v;
        }
        if let Some(v) = self.episodes {
            config.rollout_episodes = v;
        }
        if let Some(v) = self.k {
            config.k = v;
        }
        config.validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(config)
    }
}

fn default_report_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "tree".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.report.json"))
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult {
    let scenario = read_scenario(&args.scenario)?;
    let library = read_library(&args.library)?;
    let config = args.search.resolve()?;
    let report_path = args.report.clone().or_else(|| args.out.as_deref().map(default_report_path));
    let (tree, report, failure) = match synthesize(&Task::from_scenario(&scenario), &scenario, &library, &config) {
        Ok((tree, report)) => (tree, report, None),
        Err(SynthError::BudgetExhausted { best, report }) => {
            let msg = format!("{}: budget of {} expansions exhausted", args.scenario.display(), config.budget);
            (*best, *report, Some(msg))
        }
        Err(e) => return Err(CliError::failed(format!("{}: {e}", args.scenario.display()))),
    };
    emit(args.out.as_deref(), &serialize_bt_xml(&tree))?;
    if let Some(p) = report_path {
        write(&p, &report.to_json())?;
    }
    failure.map_or(Ok(()), |m| Err(CliError::failed(m)))
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult {
    let tree = read_tree(&args.tree)?;
    let scenario = read_scenario(&args.scenario)?;
    let library = read_library(&args.library)?;
    let options = EpisodeOptions { record_states: args.dump_states, ..Default::default() };
    let result = run_episode_with(&tree, &scenario, &library, args.seed, options)
        .map_err(|e| CliError::failed(format!("{}: {e}", args.tree.display())))?;
    if let Some(p) = &args.trace {
        write(p, &result.trace_jsonl())?;
    }
    let json = serde_json::to_string_pretty(&result).expect("episode serializes") + "\n";
    emit(args.out.as_deref(), &json)?;
    if result.success {
        Ok(())
    } else {
        Err(CliError::failed(format!(
            "{}: goal not reached in {} ticks (goal fraction {})",
            args.tree.display(),
            result.ticks_used,
            result.final_goal_fraction
        )))
    }
}

pub fn cmd_validate(args: &ValidateArgs) -> CliResult {
    let tree = read_tree(&args.tree)?;
    let library = read_library(&args.library)?;
    let report = validate_structure(&tree, &library);
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    for f in &report.findings {
        eprintln!("{}: {f}", args.tree.display());
    }
    if !report.ok {
        return Err(CliError::failed(format!(
            "{}: {} finding(s), {} open node(s)",
            args.tree.display(),
            report.findings.len(),
            report.open_nodes.len()
        )));
    }
    if let Some(path) = &args.scenario {
        let scenario = read_scenario(path)?;
        let fb = validate_state(&tree, &scenario, &library, &SearchConfig::default());
        println!(
            "{}",
            serde_json::json!({"verdict": fb.verdict, "level": fb.level, "reward": fb.reward,
                "unmet_goals": fb.unmet_goals.iter().map(ToString::to_string).collect::<Vec<_>>()})
        );
        if !fb.accepted() {
            return Err(CliError::failed(format!("{}: rejected in {}: {}", args.tree.display(), path.display(), fb.detail)));
        }
    }
    Ok(())
}

/// `(name, scenario path, library path)` for every pair in `dir`, by name.
pub fn scan_scenarios(dir: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()).and_then(|n| n.strip_suffix(".scenario.json"))
        else {
            continue;
        };
        let library = dir.join(format!("{name}.library.json"));
        if !library.exists() {
            return Err(CliError::usage(format!("{}: no matching {}", path.display(), library.display())));
        }
        out.push((name.to_string(), path.clone(), library));
    }
    out.sort();
    Ok(out)
}

fn load_problems(paths: &[PathBuf]) -> Result<Vec<(Scenario, NodeLibrary)>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            for (_, s, l) in scan_scenarios(p)? {
                out.push((read_scenario(&s)?, read_library(&l)?));
            }
        } else {
            let name = p.to_string_lossy();
            let stem = name.strip_suffix(".scenario.json").ok_or_else(|| {
                CliError::usage(format!("{}: expected a *.scenario.json file or a directory", p.display()))
            })?;
            out.push((read_scenario(p)?, read_library(Path::new(&format!("{stem}.library.json")))?));
        }
    }
    Ok(out)
}

pub fn cmd_eval(args: &EvalArgs) -> CliResult {
    let problems = load_problems(&args.scenarios)?;
    let config = args.search.resolve()?;
    let report = evaluate_generator(&Synthesizer, &problems, args.n, &args.k_values, &config)
        .map_err(|e| CliError::usage(e.to_string()))?;
    if let Some(p) = &args.out {
        write(p, &report.to_json())?;
    }
    print!("{}", report.table());
    Ok(())
}

/// A dataset record for a synthesized tree, with metadata from the library.
pub fn make_record(scenario: &Scenario, library: &NodeLibrary, tree: &BehaviorTree) -> DatasetRecord {
    let mut nodes = Vec::new();
    let mut implementations = Vec::new();
    for binding in tree.bindings() {
        if let Some(def) = library.get(binding) {
            nodes.push(NodeMeta { name: def.name.clone(), description: def.description.clone() });
            implementations.push(NodeImpl { name: def.name.clone(), implementation: def.implementation.clone() });
        }
    }
    DatasetRecord {
        name: scenario.name.clone(),
        description: scenario.description.clone(),
        xml: serialize_bt_xml(tree),
        nodes,
        implementations,
    }
}

pub fn cmd_dataset(args: &DatasetArgs) -> CliResult {
    let config = args.search.resolve()?;
    let mut corpus = String::new();
    let mut skipped = 0;
    for (name, s, l) in scan_scenarios(&args.scenarios)? {
        let scenario = read_scenario(&s)?;
        let library = read_library(&l)?;
        let tree = match synthesize(&Task::from_scenario(&scenario), &scenario, &library, &config) {
            Ok((tree, _)) => tree,
            Err(e) => {
                log::warn!("{}: skipped: {e}", s.display());
                skipped += 1;
                continue;
            }
        };
        if !sample_correct(&tree, &scenario, &library, &config) {
            log::warn!("{}: skipped: tree fails full simulation", s.display());
            skipped += 1;
            continue;
        }
        let line = write_record(&make_record(&scenario, &library, &tree));
        read_record(&line).map_err(|e| CliError::failed(format!("{name}: generated record is invalid: {e}")))?;
        corpus += &line;
        corpus.push('\n');
    }
    write(&args.out, &corpus)?;
    if skipped > 0 {
        log::warn!("{skipped} scenario(s) skipped");
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Dataset(a) => cmd_dataset(a),
    }
}

/// Parses `std::env::args`, runs, and maps the outcome to an exit code.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        fs::write(&cfg, r#"{"budget": 50, "seed": 9, "policy": "mcts-oracle"}"#).unwrap();
        let args = SearchArgs { config: Some(cfg), seed: Some(3), ..Default::default() };
        let c = args.resolve().unwrap();
        assert_eq!((c.budget, c.seed, c.policy), (50, 3, PolicyKind::MctsOracle));
        let bad = SearchArgs { budget: Some(0), ..Default::default() };
        assert_eq!(bad.resolve().unwrap_err().code, 2);
    }

    #[test]
    fn config_errors_name_the_file_and_position() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        fs::write(&cfg, "{\n  \"budget\": ,\n}").unwrap();
        let err = SearchArgs { config: Some(cfg), ..Default::default() }.resolve().unwrap_err();
        assert!(err.message.contains("c.json:2:"), "{}", err.message);
    }

    #[test]
    fn report_path_sits_next_to_the_tree() {
        assert_eq!(default_report_path(Path::new("out/tree.xml")), Path::new("out/tree.report.json"));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
