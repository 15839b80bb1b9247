//! `meio` command line: benchmark levels, training, evaluation, policy maps
//! and the experiment grid. Results go to CSV; failures print one JSON
//! record on stderr and exit nonzero.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use meio::distributions::{EmpiricalData, SeriesTable};
use meio::experiment::{self, GridOptions, Prepared, RandomPolicy, TrialResult};
use meio::learning::{self, Checkpoint, ModelKind, PolicyBundle, TrainConfig};
use meio::network::SCENARIO_IDS;
use meio::simulator::{evaluate_batched, write_trajectory_csv, BatchPolicy, PerRow};

#[derive(Parser)]
#[command(name = "meio", version, about = "Multi-echelon inventory benchmarks and policy learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decomposition-aggregation base-stock levels and their simulated cost.
    Heuristic {
        #[command(flatten)]
        common: Common,
        /// Output file (.csv) or directory; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a model on one or more seeds.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "marl")]
        model: String,
        #[arg(long, default_value = "0")]
        seeds: String,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate heuristic, random or a checkpoint under the standard protocol.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// heuristic, random, or a checkpoint file.
        #[arg(long, default_value = "heuristic")]
        model: String,
        #[arg(long, default_value = "0")]
        seeds: String,
        /// Directory for evaluation.csv and trajectory.csv; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Record (IP, order) pairs of a deterministic policy over a long run.
    PolicyMap {
        #[command(flatten)]
        common: Common,
        /// heuristic or a checkpoint file.
        #[arg(long, default_value = "heuristic")]
        model: String,
        #[arg(long, default_value_t = experiment::POLICY_MAP_PERIODS)]
        periods: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run scenarios x models x seeds and write the report tree.
    Grid {
        /// Comma-separated scenario ids or files; `all` for the named grid.
        #[arg(long, default_value = "all")]
        scenario: String,
        #[arg(long, default_value = "heuristic,random,sarl,marl,imarl")]
        model: String,
        #[arg(long, default_value = "0..10")]
        seeds: String,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        lead_data: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        master_seed: u64,
        #[arg(long, default_value_t = experiment::POLICY_MAP_PERIODS)]
        policy_map_periods: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Named scenario (A1..D1) or a network TOML file.
    #[arg(long)]
    scenario: String,
    /// Training/evaluation settings (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Empirical demand series, one column per stock point.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Empirical lead-time series, one column per receiving stock point.
    #[arg(long)]
    lead_data: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
}

fn load_data(demand: &Option<PathBuf>, lead: &Option<PathBuf>) -> Result<Option<EmpiricalData>> {
    if demand.is_none() && lead.is_none() {
        return Ok(None);
    }
    let read = |p: &Option<PathBuf>| -> Result<Option<SeriesTable>> {
        p.as_ref()
            .map(|p| SeriesTable::from_path(p).with_context(|| format!("reading {}", p.display())))
            .transpose()
    };
    Ok(Some(EmpiricalData {
        demand: read(demand)?,
        lead: read(lead)?,
    }))
}

fn load_config(path: &Option<PathBuf>) -> Result<TrainConfig> {
    let cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).map_err(meio::Error::from)?
        }
        None => TrainConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// `3`, `0,2,5` or `0..10`.
fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    let bad = || meio::Error::InvalidParameter(format!("cannot parse seeds '{s}'"));
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        (a..b).collect()
    } else {
        s.split(',')
            .map(|x| x.trim().parse().map_err(|_| bad()))
            .collect::<std::result::Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(bad().into());
    }
    Ok(seeds)
}

fn parse_list(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

fn prepare(common: &Common, cfg: &TrainConfig) -> Result<Prepared> {
    let data = load_data(&common.data, &common.lead_data)?;
    Ok(experiment::prepare(&common.scenario, data.as_ref(), cfg.eval_seed)?)
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Box::new(std::io::BufWriter::new(
                fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
            ))
        }
        None => Box::new(std::io::stdout().lock()),
    })
}

/// A deterministic decision rule named on the command line.
fn load_bundle(model: &str, p: &Prepared) -> Result<PolicyBundle> {
    match model {
        "heuristic" => Ok(PolicyBundle {
            nets: Vec::new(),
            base_bsl: Some(p.heuristic.bsl().to_vec()),
        }),
        path => {
            let text = fs::read_to_string(path).with_context(|| format!("reading checkpoint {path}"))?;
            let ck = Checkpoint::from_json(&text)?;
            ck.check(&p.scenario)?;
            Ok(ck.bundle)
        }
    }
}

fn cmd_heuristic(common: &Common, out: &Option<PathBuf>) -> Result<()> {
    let cfg = load_config(&common.config)?;
    let p = prepare(common, &cfg)?;
    let path = out.as_ref().map(|o| {
        if o.extension().is_some_and(|e| e == "csv") {
            o.clone()
        } else {
            o.join("bsl.csv")
        }
    });
    let mut w = csv::Writer::from_writer(writer(path.as_deref())?);
    w.write_record([
        "stock_point",
        "echelon_level",
        "installation_level",
        "expected_backorders",
        "benchmark_cost",
    ])?;
    let lv = &p.heuristic.levels;
    for (q, name) in p.scenario.topology.names().iter().enumerate() {
        w.write_record([
            name.clone(),
            lv.echelon[q].to_string(),
            lv.installation[q].to_string(),
            lv.expected_backorders[q].to_string(),
            p.heuristic.benchmark.mean_cost.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_train(common: &Common, model: &str, seeds: &str, episodes: Option<usize>, out: &Path) -> Result<()> {
    let mut cfg = load_config(&common.config)?;
    if episodes.is_some() {
        cfg.episodes = episodes;
    }
    let kind: ModelKind = model.parse()?;
    if !kind.learns() {
        bail!(meio::Error::InvalidParameter(format!("model {kind} is not trained; use evaluate")));
    }
    let seeds = parse_seeds(seeds)?;
    let p = prepare(common, &cfg)?;
    fs::create_dir_all(out.join("curves"))?;
    let mut trials: Vec<TrialResult> = Vec::new();
    for seed in seeds {
        let t = experiment::run_trial(&p, kind, seed, common.master_seed, &cfg)?;
        let ck = Checkpoint::new(&p.scenario, kind, &cfg, t.bundle.clone().expect("trained bundle"));
        fs::write(out.join(format!("checkpoint_{}_{}_{seed}.json", p.scenario.id, kind)), ck.to_json()?)?;
        let curve = writer(Some(&out.join("curves").join(format!("{}_{}_{seed}.csv", p.scenario.id, kind))))?;
        learning::write_curve_csv(&t.result.curve, curve)?;
        log::info!(
            "{} {} seed {seed}: best {:.1} vs benchmark {:.1}",
            p.scenario.id,
            kind,
            t.result.best_cost,
            t.result.benchmark_cost
        );
        trials.push(t.result);
    }
    experiment::write_trials_csv(&trials, writer(Some(&out.join("trials.csv")))?)?;
    Ok(())
}

fn cmd_evaluate(common: &Common, model: &str, seeds: &str, out: &Option<PathBuf>) -> Result<()> {
    let cfg = load_config(&common.config)?;
    let p = prepare(common, &cfg)?;
    let s = &p.scenario;
    let seeds = parse_seeds(seeds)?;
    let mut rows = Vec::new();
    let mut traj = None;
    if model == "random" {
        for &seed in &seeds {
            let tseed = experiment::trial_seed(common.master_seed, &s.id, ModelKind::Random, seed);
            let mut pol = PerRow(RandomPolicy::new(tseed));
            rows.push((seed, evaluate_batched(&mut pol, s, s.eval, cfg.eval_seed)?));
            if traj.is_none() {
                let mut pol = PerRow(RandomPolicy::new(tseed));
                traj = Some(experiment::trajectory(s, &mut pol, s.eval.steps, cfg.eval_seed)?);
            }
        }
    } else {
        let bundle = load_bundle(model, &p)?;
        let e = bundle.evaluate(s, s.eval, cfg.eval_seed)?;
        rows.push((seeds[0], e));
        let mut pol = bundle.ensemble(s);
        traj = Some(experiment::trajectory(s, &mut pol as &mut dyn BatchPolicy, s.eval.steps, cfg.eval_seed)?);
    }
    let label = if model == "heuristic" || model == "random" {
        model.to_string()
    } else {
        Path::new(model)
            .file_stem()
            .map(|x| x.to_string_lossy().into_owned())
            .unwrap_or_else(|| model.to_string())
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_writer(writer(out.as_ref().map(|d| d.join("evaluation.csv")).as_deref())?);
    w.write_record(["scenario", "model", "seed", "mean_cost", "std_cost", "benchmark_cost", "savings"])?;
    let bench = p.heuristic.benchmark.mean_cost;
    for (seed, e) in &rows {
        w.write_record([
            s.id.clone(),
            label.clone(),
            seed.to_string(),
            e.mean_cost.to_string(),
            e.std_cost.to_string(),
            bench.to_string(),
            ((bench - e.mean_cost) / bench).to_string(),
        ])?;
    }
    w.flush()?;
    if let (Some(dir), Some(t)) = (out, traj) {
        write_trajectory_csv(&t, writer(Some(&dir.join("trajectory.csv")))?)?;
    }
    Ok(())
}

fn cmd_policy_map(common: &Common, model: &str, periods: usize, out: &Option<PathBuf>) -> Result<()> {
    let cfg = load_config(&common.config)?;
    let p = prepare(common, &cfg)?;
    let bundle = load_bundle(model, &p)?;
    let seed = meio::rng::derive_seed(common.master_seed, &[meio::rng::label("policy-map"), meio::rng::label(&p.scenario.id)]);
    let map = experiment::policy_map(&p.scenario, &mut bundle.ensemble(&p.scenario), periods, seed)?;
    let path = out.as_ref().map(|o| {
        if o.extension().is_some_and(|e| e == "csv") {
            o.clone()
        } else {
            o.join("policy_map.csv")
        }
    });
    map.write_csv(writer(path.as_deref())?)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_grid(
    scenario: &str,
    model: &str,
    seeds: &str,
    episodes: Option<usize>,
    config: &Option<PathBuf>,
    data: &Option<PathBuf>,
    lead_data: &Option<PathBuf>,
    master_seed: u64,
    policy_map_periods: usize,
    out: &Path,
) -> Result<()> {
    let mut cfg = load_config(config)?;
    if episodes.is_some() {
        cfg.episodes = episodes;
    }
    let scenarios = if scenario == "all" {
        SCENARIO_IDS.iter().map(|s| s.to_string()).collect()
    } else {
        parse_list(scenario)
    };
    let models = parse_list(model)
        .iter()
        .map(|m| m.parse::<ModelKind>())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let seeds = parse_seeds(seeds)?;
    let data = load_data(data, lead_data)?;
    let opts = GridOptions {
        master_seed,
        train: cfg,
        policy_map_periods,
    };
    let report = experiment::grid_to_dir(&scenarios, &models, &seeds, data.as_ref(), &opts, out)?;
    let failed = report.trials.iter().filter(|t| !t.ok()).count();
    if failed > 0 {
        log::warn!("{failed} of {} trials failed; see trials.csv", report.trials.len());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Heuristic { common, out } => cmd_heuristic(common, out),
        Command::Train {
            common,
            model,
            seeds,
            episodes,
            out,
        } => cmd_train(common, model, seeds, *episodes, out),
        Command::Evaluate {
            common,
            model,
            seeds,
            out,
        } => cmd_evaluate(common, model, seeds, out),
        Command::PolicyMap {
            common,
            model,
            periods,
            out,
        } => cmd_policy_map(common, model, *periods, out),
        Command::Grid {
            scenario,
            model,
            seeds,
            episodes,
            config,
            data,
            lead_data,
            master_seed,
            policy_map_periods,
            out,
        } => cmd_grid(
            scenario,
            model,
            seeds,
            *episodes,
            config,
            data,
            lead_data,
            *master_seed,
            *policy_map_periods,
            out,
        ),
    }
}

fn error_record(kind: &str, message: &str) -> String {
    serde_json::json!({ "status": "error", "kind": kind, "message": message }).to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_record("usage", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e
                .chain()
                .find_map(|c| c.downcast_ref::<meio::Error>())
                .map(|m| m.kind())
                .unwrap_or("io");
            eprintln!("{}", error_record(kind, &format!("{e:#}")));
            ExitCode::FAILURE
        }
    }
}
