//! `awarekit run` and `awarekit compare`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use awarekit_core::attention::to_polar;
use awarekit_core::optimizer::{AggregationMode, RuleSet};
use awarekit_core::pipeline::{run_scenario, Clock, RunMode, RunOutput, SimConfig};
use awarekit_core::registry::Registry;
use awarekit_core::situation::ActivationTable;
use awarekit_core::world::{MapModel, Scenario};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info, warn};

use crate::formats::{load_activation, load_catalog, load_map, load_rules, load_scenario};
use crate::output::{
    cycles_jsonl, grid_csv, polar_csv, summary_table, timing_jsonl, ComparisonDoc, MetricsDoc,
};

#[derive(Debug, Parser)]
#[command(name = "awarekit", version, about = "Situation-aware perception module allocation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario in one mode.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Aware)]
        mode: ModeArg,
    },
    /// Run aware and naive mode on the same inputs and compare costs.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    /// Module catalog; defaults to the bundled reference catalog.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AggregationArg::Capped)]
    pub aggregation: AggregationArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Write the attention grid and polar map of every aware cycle.
    #[arg(long)]
    pub dump_grids: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Location to layer activation table.
    #[arg(long)]
    pub activation: Option<PathBuf>,
    /// Situation-dependent constraint rules.
    #[arg(long)]
    pub rules: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Aware,
    Naive,
}

impl From<ModeArg> for RunMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Aware => RunMode::Aware,
            ModeArg::Naive => RunMode::Naive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregationArg {
    Capped,
    Plain,
}

impl From<AggregationArg> for AggregationMode {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::Capped => AggregationMode::SourceCapped,
            AggregationArg::Plain => AggregationMode::PlainAdditive,
        }
    }
}

/// Fully resolved run settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub map: PathBuf,
    pub scenario: PathBuf,
    pub catalog: Option<PathBuf>,
    pub mode: RunMode,
    pub aggregation: AggregationMode,
    pub out: PathBuf,
    pub dump_grids: bool,
    pub seed: u64,
    pub activation: Option<PathBuf>,
    pub rules: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(common: CommonArgs, mode: RunMode) -> Self {
        Self {
            map: common.map,
            scenario: common.scenario,
            catalog: common.catalog,
            mode,
            aggregation: common.aggregation.into(),
            out: common.out,
            dump_grids: common.dump_grids,
            seed: common.seed,
            activation: common.activation,
            rules: common.rules,
        }
    }
}

pub struct Inputs {
    pub map: MapModel,
    pub scenario: Scenario,
    pub registry: Registry,
    pub activation: ActivationTable,
    pub rules: RuleSet,
}

fn require_file(kind: &str, path: &Path) -> Result<()> {
    if !path.is_file() {
        bail!("{kind} file not found: {}", path.display());
    }
    Ok(())
}

impl Inputs {
    pub fn load(config: &RunConfig) -> Result<Self> {
        require_file("map", &config.map)?;
        require_file("scenario", &config.scenario)?;
        let map = load_map(&config.map)?;
        let scenario = load_scenario(&config.scenario)?;
        let registry = match &config.catalog {
            Some(p) => {
                require_file("catalog", p)?;
                load_catalog(p)?
            }
            None => Registry::reference(),
        };
        let activation = match &config.activation {
            Some(p) => {
                require_file("activation", p)?;
                load_activation(p)?
            }
            None => ActivationTable::default(),
        };
        let rules = match &config.rules {
            Some(p) => {
                require_file("rules", p)?;
                load_rules(p)?
            }
            None => RuleSet::default(),
        };
        info!(
            "loaded {} lanes, {} zones, {} frames, {} modules",
            map.lanes().len(),
            map.zones().len(),
            scenario.frames().len(),
            registry.len()
        );
        Ok(Self {
            map,
            scenario,
            registry,
            activation,
            rules,
        })
    }
}

struct WallClock(Instant);

impl Clock for WallClock {
    fn now_ms(&mut self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

/// Runs the scenario once; with `grid_dir` set, aware cycles dump their maps there.
pub fn simulate(inputs: &Inputs, config: &RunConfig, mode: RunMode, grid_dir: Option<&Path>) -> Result<RunOutput> {
    let sim = SimConfig {
        mode,
        aggregation: config.aggregation,
        seed: config.seed,
        activation: inputs.activation.clone(),
        rules: inputs.rules.clone(),
        ..SimConfig::default()
    };
    if let Some(dir) = grid_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut io_error: Option<anyhow::Error> = None;
    let mut previous: Vec<String> = Vec::new();
    let mut clock = WallClock(Instant::now());
    let output = run_scenario(
        &inputs.map,
        &inputs.registry,
        &inputs.scenario,
        sim,
        &mut clock,
        &mut |cycle, grid| {
            let ids: Vec<String> = cycle.modules.iter().map(|m| m.0.clone()).collect();
            if ids != previous {
                debug!("cycle {} t={:.2}: {:?} -> {:?}", cycle.cycle, cycle.timestamp, previous, ids);
                previous = ids;
            }
            if cycle.degraded {
                warn!("cycle {}: no feasible configuration, keeping the previous one", cycle.cycle);
            }
            if let (Some(dir), Some(grid), None) = (grid_dir, grid, io_error.as_ref()) {
                let n = cycle.cycle;
                let polar = cycle.requirement.clone().unwrap_or_else(|| to_polar(grid));
                let res = fs::write(dir.join(format!("frame_{n}.csv")), grid_csv(grid))
                    .and_then(|_| fs::write(dir.join(format!("polar_{n}.csv")), polar_csv(&polar)));
                if let Err(e) = res {
                    io_error = Some(anyhow::Error::new(e).context(format!("writing grids to {}", dir.display())));
                }
            }
        },
    )?;
    if let Some(e) = io_error {
        return Err(e);
    }
    Ok(output)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_run(dir: &Path, output: &RunOutput, doc: &MetricsDoc) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write(&dir.join("cycles.jsonl"), &cycles_jsonl(&output.cycles))?;
    write(&dir.join("timing.jsonl"), &timing_jsonl(&output.cycles))?;
    write(&dir.join("metrics.json"), &serde_json::to_string_pretty(doc)?)?;
    Ok(())
}

fn aggregation_name(config: &RunConfig) -> &'static str {
    config.aggregation.as_str()
}

/// Single run. An aware run also simulates the naive baseline for the cost ratio.
pub fn cmd_run(config: &RunConfig) -> Result<MetricsDoc> {
    let inputs = Inputs::load(config)?;
    let grid_dir = (config.dump_grids && config.mode == RunMode::Aware).then(|| config.out.join("grids"));
    if config.dump_grids && config.mode == RunMode::Naive {
        info!("naive mode has no attention map, no grids written");
    }
    let output = simulate(&inputs, config, config.mode, grid_dir.as_deref())?;
    let naive_cost = match config.mode {
        RunMode::Naive => output.metrics.accumulated_cost,
        RunMode::Aware => simulate(&inputs, config, RunMode::Naive, None)?.metrics.accumulated_cost,
    };
    let doc = MetricsDoc::new(&output.metrics, aggregation_name(config), config.seed, naive_cost);
    write_run(&config.out, &output, &doc)?;
    print!("{}", summary_table(&doc));
    Ok(doc)
}

/// Both modes on the same inputs; writes `comparison.json` plus one directory per mode.
pub fn cmd_compare(config: &RunConfig) -> Result<ComparisonDoc> {
    let inputs = Inputs::load(config)?;
    let grid_dir = config.dump_grids.then(|| config.out.join("aware").join("grids"));
    let aware = simulate(&inputs, config, RunMode::Aware, grid_dir.as_deref())?;
    let naive = simulate(&inputs, config, RunMode::Naive, None)?;
    let naive_cost = naive.metrics.accumulated_cost;
    let agg = aggregation_name(config);
    let aware_doc = MetricsDoc::new(&aware.metrics, agg, config.seed, naive_cost);
    let naive_doc = MetricsDoc::new(&naive.metrics, agg, config.seed, naive_cost);
    write_run(&config.out.join("aware"), &aware, &aware_doc)?;
    write_run(&config.out.join("naive"), &naive, &naive_doc)?;
    let cmp = ComparisonDoc::new(&aware.metrics, &naive.metrics, agg, config.seed);
    write(&config.out.join("comparison.json"), &serde_json::to_string_pretty(&cmp)?)?;
    print!("{}", summary_table(&aware_doc));
    println!("reduction {:.2}%", cmp.reduction_percent);
    Ok(cmp)
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("AWAREKIT_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, mode } => cmd_run(&RunConfig::new(common, mode.into())).map(|_| ()),
        Command::Compare { common } => cmd_compare(&RunConfig::new(common, RunMode::Aware)).map(|_| ()),
    }
}
