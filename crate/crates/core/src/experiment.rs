//! Trials, the scenario grid, aggregation against the benchmark, policy
//! maps and CSV reporting.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::EmpiricalData;
use crate::error::{Error, Result};
use crate::heuristic::{da_heuristic, BaseStockPolicy, HeuristicResult};
use crate::learning::{self, CurvePoint, ModelKind, PolicyBundle, TrainConfig};
use crate::network::{resolve_scenario, ScenarioConfig};
use crate::rng::{derive_seed, label};
use crate::simulator::{
    decode_action, episode_seed, evaluate_policy, trajectory_rows, BatchPolicy, Observation, PerRow, Policy,
    Simulator, TrajectoryRow,
};

pub const DEFAULT_SEEDS: std::ops::Range<u64> = 0..10;
pub const POLICY_MAP_PERIODS: usize = 100_000;

/// Uniform actions on [-1, 1] from its own stream.
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _: &Observation, out: &mut [f64]) {
        out.iter_mut().for_each(|a| *a = self.rng.gen_range(-1.0..=1.0));
    }
}

/// A scenario with its benchmark levels and cost.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Arc<ScenarioConfig>,
    pub heuristic: HeuristicResult,
}

pub fn prepare(id_or_path: &str, data: Option<&EmpiricalData>, eval_seed: u64) -> Result<Prepared> {
    let s = resolve_scenario(id_or_path, data)?;
    let (scenario, heuristic) = da_heuristic(&s, eval_seed)?;
    Ok(Prepared { scenario, heuristic })
}

/// Seed a trial trains with, derived from the master seed.
pub fn trial_seed(master: u64, scenario: &str, model: ModelKind, seed: u64) -> u64 {
    derive_seed(master, &[label(scenario), label(model.as_str()), seed])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub scenario: String,
    pub model: ModelKind,
    pub seed: u64,
    /// Lowest evaluation cost on the curve.
    pub best_cost: f64,
    /// Evaluation cost of the returned decision rule.
    pub final_cost: f64,
    pub benchmark_cost: f64,
    pub episodes: usize,
    pub converged: bool,
    /// Set when training stopped on non-finite values.
    pub diverged: Option<String>,
    /// Set when the trial failed outright.
    pub error: Option<String>,
    #[serde(skip)]
    pub curve: Vec<CurvePoint>,
    #[serde(skip)]
    pub wall_clock_s: f64,
}

impl TrialResult {
    pub fn ok(&self) -> bool {
        self.error.is_none() && self.best_cost.is_finite()
    }

    pub fn failed(scenario: &str, model: ModelKind, seed: u64, benchmark: f64, e: &Error) -> Self {
        TrialResult {
            scenario: scenario.to_string(),
            model,
            seed,
            best_cost: f64::NAN,
            final_cost: f64::NAN,
            benchmark_cost: benchmark,
            episodes: 0,
            converged: false,
            diverged: None,
            error: Some(e.to_string()),
            curve: Vec::new(),
            wall_clock_s: 0.0,
        }
    }
}

/// A trial plus the decision rule it produced (none for the random model).
#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub result: TrialResult,
    pub bundle: Option<PolicyBundle>,
}

/// Trains (or just evaluates, for the heuristic and random models) one
/// model on one seed.
pub fn run_trial(p: &Prepared, model: ModelKind, seed: u64, master: u64, cfg: &TrainConfig) -> Result<TrialOutput> {
    let start = Instant::now();
    let s = &p.scenario;
    let bench = p.heuristic.benchmark.mean_cost;
    let point = |e: &crate::simulator::EvalResult| CurvePoint {
        episode: 0,
        eval_mean_cost: e.mean_cost,
        eval_std: e.std_cost,
    };
    let tseed = trial_seed(master, &s.id, model, seed);
    let (curve, final_cost, episodes, converged, diverged, bundle) = match model {
        ModelKind::Heuristic => {
            let mut pol = BaseStockPolicy::for_scenario(s, p.heuristic.bsl().to_vec());
            let e = evaluate_policy(&mut pol, s, s.eval, cfg.eval_seed)?;
            let b = PolicyBundle {
                nets: Vec::new(),
                base_bsl: Some(p.heuristic.bsl().to_vec()),
            };
            (vec![point(&e)], e.mean_cost, 0, true, None, Some(b))
        }
        ModelKind::Random => {
            let mut pol = RandomPolicy::new(tseed);
            let e = evaluate_policy(&mut pol, s, s.eval, cfg.eval_seed)?;
            (vec![point(&e)], e.mean_cost, 0, true, None, None)
        }
        _ => {
            let r = learning::train(s, model, cfg, tseed)?;
            (r.curve, r.best_eval.mean_cost, r.episodes, r.converged, r.diverged, Some(r.bundle))
        }
    };
    let best_cost = curve.iter().map(|c| c.eval_mean_cost).fold(f64::INFINITY, f64::min);
    Ok(TrialOutput {
        result: TrialResult {
            scenario: s.id.clone(),
            model,
            seed,
            best_cost,
            final_cost,
            benchmark_cost: bench,
            episodes,
            converged,
            diverged,
            error: None,
            curve,
            wall_clock_s: start.elapsed().as_secs_f64(),
        },
        bundle,
    })
}

/// Best and mean over seeds for one (scenario, model) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub scenario: String,
    pub model: ModelKind,
    pub benchmark_cost: f64,
    pub best_cost: f64,
    pub mean_cost: f64,
    /// (benchmark - best) / benchmark
    pub best_savings: f64,
    /// (benchmark - mean) / benchmark
    pub mean_savings: f64,
    pub trials_ok: usize,
    pub trials_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    /// Scenario order as requested.
    pub scenarios: Vec<String>,
    pub models: Vec<ModelKind>,
    pub cells: Vec<ReportCell>,
    pub trials: Vec<TrialResult>,
}

impl EvalReport {
    /// Pure aggregation of trial results.
    pub fn aggregate(scenarios: &[String], models: &[ModelKind], trials: Vec<TrialResult>) -> Self {
        let mut cells = Vec::new();
        for sc in scenarios {
            for &m in models {
                let group: Vec<&TrialResult> = trials.iter().filter(|t| &t.scenario == sc && t.model == m).collect();
                if group.is_empty() {
                    continue;
                }
                let ok: Vec<f64> = group.iter().filter(|t| t.ok()).map(|t| t.best_cost).collect();
                let bench = group.iter().map(|t| t.benchmark_cost).find(|b| b.is_finite()).unwrap_or(f64::NAN);
                let (best, mean) = if ok.is_empty() {
                    (f64::NAN, f64::NAN)
                } else {
                    (
                        ok.iter().cloned().fold(f64::INFINITY, f64::min),
                        ok.iter().sum::<f64>() / ok.len() as f64,
                    )
                };
                cells.push(ReportCell {
                    scenario: sc.clone(),
                    model: m,
                    benchmark_cost: bench,
                    best_cost: best,
                    mean_cost: mean,
                    best_savings: (bench - best) / bench,
                    mean_savings: (bench - mean) / bench,
                    trials_ok: ok.len(),
                    trials_failed: group.len() - ok.len(),
                });
            }
        }
        EvalReport {
            scenarios: scenarios.to_vec(),
            models: models.to_vec(),
            cells,
            trials,
        }
    }

    pub fn cell(&self, scenario: &str, model: ModelKind) -> Option<&ReportCell> {
        self.cells.iter().find(|c| c.scenario == scenario && c.model == model)
    }
}

/// Grid run output: the report plus the decision rule of each cell's best
/// seed (for policy maps).
pub struct GridOutput {
    pub report: EvalReport,
    pub best_bundles: Vec<(String, ModelKind, u64, PolicyBundle, Arc<ScenarioConfig>)>,
}

#[derive(Debug, Clone)]
pub struct GridOptions {
    pub master_seed: u64,
    pub train: TrainConfig,
    pub policy_map_periods: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            master_seed: 0,
            train: TrainConfig::default(),
            policy_map_periods: POLICY_MAP_PERIODS,
        }
    }
}

/// Runs every (scenario, model, seed) trial. A failing scenario or trial is
/// recorded and the grid continues.
pub fn run_grid(
    scenarios: &[String],
    models: &[ModelKind],
    seeds: &[u64],
    data: Option<&EmpiricalData>,
    opts: &GridOptions,
) -> GridOutput {
    let prepared: Vec<(String, Result<Prepared>)> = scenarios
        .iter()
        .map(|s| (s.clone(), prepare(s, data, opts.train.eval_seed)))
        .collect();
    let mut jobs = Vec::new();
    for (i, (_, p)) in prepared.iter().enumerate() {
        for &m in models {
            let seeds_for: &[u64] = if m.learns() || m == ModelKind::Random { seeds } else { &seeds[..seeds.len().min(1)] };
            for &seed in seeds_for {
                jobs.push((i, m, seed, p.is_ok()));
            }
        }
    }
    let run = |&(i, m, seed, _): &(usize, ModelKind, u64, bool)| -> (usize, TrialOutput) {
        let (name, p) = &prepared[i];
        let out = match p {
            Ok(p) => run_trial(p, m, seed, opts.master_seed, &opts.train).unwrap_or_else(|e| TrialOutput {
                result: TrialResult::failed(&p.scenario.id, m, seed, p.heuristic.benchmark.mean_cost, &e),
                bundle: None,
            }),
            Err(e) => TrialOutput {
                result: TrialResult::failed(name, m, seed, f64::NAN, e),
                bundle: None,
            },
        };
        (i, out)
    };
    #[cfg(feature = "parallel")]
    let outputs: Vec<(usize, TrialOutput)> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outputs: Vec<(usize, TrialOutput)> = jobs.iter().map(run).collect();

    // scenario ids as the trials name them
    let ids: Vec<String> = prepared
        .iter()
        .map(|(n, p)| p.as_ref().map(|p| p.scenario.id.clone()).unwrap_or_else(|_| n.clone()))
        .collect();
    let mut best: BTreeMap<(usize, ModelKind), (f64, u64, Option<PolicyBundle>)> = BTreeMap::new();
    let mut trials = Vec::with_capacity(outputs.len());
    for (i, out) in outputs {
        let r = &out.result;
        if r.ok() {
            let e = best.entry((i, r.model)).or_insert((f64::INFINITY, r.seed, None));
            if r.final_cost < e.0 {
                *e = (r.final_cost, r.seed, out.bundle.clone());
            }
        }
        trials.push(out.result);
    }
    let mut best_bundles = Vec::new();
    for ((i, m), (_, seed, b)) in best {
        if let (Some(b), Ok(p)) = (b, &prepared[i].1) {
            best_bundles.push((ids[i].clone(), m, seed, b, Arc::clone(&p.scenario)));
        }
    }
    GridOutput {
        report: EvalReport::aggregate(&ids, models, trials),
        best_bundles,
    }
}

/// (IP, raw order) per stock point per period of one long run.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyMap {
    pub stock_points: Vec<String>,
    /// Row-major `periods x stock points`.
    pub ip: Vec<i64>,
    pub order: Vec<i64>,
}

impl PolicyMap {
    pub fn periods(&self) -> usize {
        self.ip.len() / self.stock_points.len().max(1)
    }

    /// Pairs visited by stock point `p`.
    pub fn points(&self, p: usize) -> impl Iterator<Item = (i64, i64)> + '_ {
        let n = self.stock_points.len();
        (0..self.periods()).map(move |t| (self.ip[t * n + p], self.order[t * n + p]))
    }

    /// Mean order in `bins` equal-width IP bins spanning the central
    /// `fraction` of the visited IP range of `p`. Empty bins are `None`.
    pub fn binned_means(&self, p: usize, bins: usize, fraction: f64) -> Vec<Option<f64>> {
        let (lo, hi) = self
            .points(p)
            .fold((i64::MAX, i64::MIN), |(a, b), (ip, _)| (a.min(ip), b.max(ip)));
        if lo > hi || bins == 0 {
            return Vec::new();
        }
        let span = (hi - lo) as f64;
        let a = lo as f64 + span * (1.0 - fraction) / 2.0;
        let b = hi as f64 - span * (1.0 - fraction) / 2.0;
        let width = ((b - a) / bins as f64).max(f64::MIN_POSITIVE);
        let mut sum = vec![0.0; bins];
        let mut count = vec![0usize; bins];
        for (ip, q) in self.points(p) {
            let x = ip as f64;
            if x < a || x > b {
                continue;
            }
            let k = (((x - a) / width) as usize).min(bins - 1);
            sum[k] += q as f64;
            count[k] += 1;
        }
        sum.iter()
            .zip(&count)
            .map(|(s, &c)| (c > 0).then(|| s / c as f64))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(["period", "stock_point", "ip", "order"])?;
        let n = self.stock_points.len();
        for t in 0..self.periods() {
            for p in 0..n {
                w.write_record([
                    t.to_string(),
                    self.stock_points[p].clone(),
                    self.ip[t * n + p].to_string(),
                    self.order[t * n + p].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// One continuous simulation of `periods` periods under a deterministic
/// policy, recording each stock point's IP and the order it placed.
pub fn policy_map(s: &Arc<ScenarioConfig>, policy: &mut dyn BatchPolicy, periods: usize, seed: u64) -> Result<PolicyMap> {
    let n = s.topology.len();
    let mut sim = Simulator::new(Arc::clone(s), seed)?;
    let mut obs = vec![sim.reset()];
    let mut action = vec![0.0; n];
    let mut ip = Vec::with_capacity(periods * n);
    let mut order = Vec::with_capacity(periods * n);
    for _ in 0..periods {
        policy.act_batch(&obs, &mut action);
        ip.extend_from_slice(&obs[0].ip);
        order.extend(action.iter().zip(&s.params).map(|(a, sp)| decode_action(*a, sp.o_max).0));
        obs[0] = sim.step(&action).observation;
    }
    Ok(PolicyMap {
        stock_points: s.topology.names().to_vec(),
        ip,
        order,
    })
}

/// Policy map of the benchmark order-up-to rule.
pub fn benchmark_policy_map(p: &Prepared, periods: usize, seed: u64) -> Result<PolicyMap> {
    let pol = BaseStockPolicy::for_scenario(&p.scenario, p.heuristic.bsl().to_vec());
    policy_map(&p.scenario, &mut PerRow(pol), periods, seed)
}

/// Per-period, per-stock-point records of evaluation episode 0 under
/// `policy` (same randomness as the first evaluation episode).
pub fn trajectory(
    s: &Arc<ScenarioConfig>,
    policy: &mut dyn BatchPolicy,
    steps: usize,
    eval_seed: u64,
) -> Result<Vec<TrajectoryRow>> {
    let n = s.topology.len();
    let mut sim = Simulator::new(Arc::clone(s), episode_seed(eval_seed, 0))?;
    let mut obs = vec![sim.reset()];
    let mut action = vec![0.0; n];
    let mut rows = Vec::with_capacity(steps * n);
    for _ in 0..steps {
        policy.act_batch(&obs, &mut action);
        let out = sim.step(&action);
        rows.extend(trajectory_rows(&sim, &out.info));
        obs[0] = out.observation;
    }
    Ok(rows)
}

const TRIAL_COLUMNS: [&str; 10] = [
    "scenario",
    "model",
    "seed",
    "best_cost",
    "final_cost",
    "benchmark_cost",
    "episodes",
    "converged",
    "diverged",
    "error",
];

fn curve_file(t: &TrialResult) -> String {
    format!("{}_{}_{}.csv", t.scenario, t.model, t.seed)
}

pub fn write_trials_csv<W: Write>(trials: &[TrialResult], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TRIAL_COLUMNS)?;
    for t in trials {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `trials.csv`; curves are attached from `curves_dir` when given.
pub fn read_trials(path: &Path, curves_dir: Option<&Path>) -> Result<Vec<TrialResult>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let mut t: TrialResult = row?;
        if let Some(dir) = curves_dir {
            let f = dir.join(curve_file(&t));
            if f.exists() {
                let mut cr = csv::Reader::from_path(f)?;
                t.curve = cr.deserialize().collect::<std::result::Result<_, _>>()?;
            }
        }
        out.push(t);
    }
    Ok(out)
}

fn write_grid_pivot<W: Write>(report: &EvalReport, out: W, pick: impl Fn(&ReportCell) -> f64) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let mut header = vec!["model".to_string()];
    header.extend(report.scenarios.iter().cloned());
    w.write_record(&header)?;
    for &m in &report.models {
        let mut row = vec![m.to_string()];
        for sc in &report.scenarios {
            row.push(report.cell(sc, m).map(|c| fmt_f64(pick(c))).unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        String::new()
    }
}

pub fn write_summary_csv<W: Write>(report: &EvalReport, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record([
        "scenario",
        "model",
        "benchmark_cost",
        "best_cost",
        "mean_cost",
        "best_savings",
        "mean_savings",
        "trials_ok",
        "trials_failed",
    ])?;
    for c in &report.cells {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}

const REPORT_README: &str = "# Experiment report

All costs are unscaled mean evaluation costs: 100 episodes of 75 periods,
summing the network cost over the last 50 periods of each episode. Every
model is evaluated on the same episode seeds.

## grid_best.csv / grid_mean.csv

One row per model, one column per scenario.

- `model`: heuristic, random, sarl, marl or imarl
- `<scenario>`: best-of-seeds (grid_best) or mean-of-seeds (grid_mean)
  evaluation cost; empty when every trial of the cell failed

## summary.csv

- `scenario`, `model`
- `benchmark_cost`: evaluation cost of the heuristic base-stock levels
- `best_cost`, `mean_cost`: best and mean over successful seeds
- `best_savings`, `mean_savings`: (benchmark_cost - cost) / benchmark_cost
- `trials_ok`, `trials_failed`: trial counts

## trials.csv

- `scenario`, `model`, `seed`
- `best_cost`: lowest evaluation cost on the learning curve
- `final_cost`: evaluation cost of the decision rule the trial returned
- `benchmark_cost`: heuristic evaluation cost for the scenario
- `episodes`: training episodes run (all iterations for imarl)
- `converged`: false when imarl hit its per-agent iteration cap
- `diverged`: message when training stopped on non-finite values
- `error`: message when the trial failed

## curves/<scenario>_<model>_<seed>.csv

- `episode`: training episodes completed when the evaluation ran
- `eval_mean_cost`, `eval_std`: mean and standard deviation over the
  evaluation episodes

## policy_maps/<scenario>_<model>_<seed>.csv

One long deterministic run of the best seed's decision rule.

- `period`, `stock_point`
- `ip`: inventory position before the decision
- `order`: units ordered
";

/// Writes the report tree under `dir`.
pub fn export_report(report: &EvalReport, maps: &[(String, PolicyMap)], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("curves"))?;
    fs::create_dir_all(dir.join("policy_maps"))?;
    let file = |name: &str| -> Result<std::io::BufWriter<fs::File>> {
        Ok(std::io::BufWriter::new(fs::File::create(dir.join(name))?))
    };
    write_grid_pivot(report, file("grid_best.csv")?, |c| c.best_cost)?;
    write_grid_pivot(report, file("grid_mean.csv")?, |c| c.mean_cost)?;
    write_summary_csv(report, file("summary.csv")?)?;
    write_trials_csv(&report.trials, file("trials.csv")?)?;
    for t in &report.trials {
        let f = std::io::BufWriter::new(fs::File::create(dir.join("curves").join(curve_file(t)))?);
        learning::write_curve_csv(&t.curve, f)?;
    }
    for (name, m) in maps {
        let f = std::io::BufWriter::new(fs::File::create(dir.join("policy_maps").join(format!("{name}.csv")))?);
        m.write_csv(f)?;
    }
    fs::write(dir.join("README.md"), REPORT_README)?;
    Ok(())
}

/// Runs the grid and writes the report with policy maps of each cell's
/// best seed.
pub fn grid_to_dir(
    scenarios: &[String],
    models: &[ModelKind],
    seeds: &[u64],
    data: Option<&EmpiricalData>,
    opts: &GridOptions,
    dir: &Path,
) -> Result<EvalReport> {
    let out = run_grid(scenarios, models, seeds, data, opts);
    let mut maps = Vec::new();
    for (sc, m, seed, bundle, scenario) in &out.best_bundles {
        let map_seed = derive_seed(opts.master_seed, &[label("policy-map"), label(sc)]);
        let map = policy_map(scenario, &mut bundle.ensemble(scenario), opts.policy_map_periods, map_seed)?;
        maps.push((format!("{sc}_{m}_{seed}"), map));
    }
    export_report(&out.report, &maps, dir)?;
    Ok(out.report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(sc: &str, m: ModelKind, seed: u64, best: f64, bench: f64) -> TrialResult {
        TrialResult {
            scenario: sc.into(),
            model: m,
            seed,
            best_cost: best,
            final_cost: best,
            benchmark_cost: bench,
            episodes: 100,
            converged: true,
            diverged: None,
            error: None,
            curve: vec![CurvePoint { episode: 0, eval_mean_cost: best, eval_std: 1.0 }],
            wall_clock_s: 0.0,
        }
    }

    #[test]
    fn aggregation_best_mean_savings() {
        let ts = vec![
            trial("A1", ModelKind::Marl, 0, 90.0, 100.0),
            trial("A1", ModelKind::Marl, 1, 110.0, 100.0),
            trial("A1", ModelKind::Heuristic, 0, 100.0, 100.0),
            TrialResult::failed("A1", ModelKind::Marl, 2, 100.0, &Error::Training("x".into())),
        ];
        let r = EvalReport::aggregate(&["A1".into()], &[ModelKind::Heuristic, ModelKind::Marl], ts);
        let c = r.cell("A1", ModelKind::Marl).unwrap();
        assert_eq!((c.best_cost, c.mean_cost), (90.0, 100.0));
        assert!((c.best_savings - 0.1).abs() < 1e-12);
        assert_eq!((c.trials_ok, c.trials_failed), (2, 1));
        assert_eq!(r.cell("A1", ModelKind::Heuristic).unwrap().best_savings, 0.0);
    }

    #[test]
    fn empty_report_has_headers() {
        let dir = tempfile::tempdir().unwrap();
        export_report(&EvalReport::default(), &[], dir.path()).unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("grid_best.csv")).unwrap(), "model\n");
        assert!(fs::read_to_string(dir.path().join("trials.csv")).unwrap().starts_with("scenario,model,seed,"));
        assert!(fs::read_to_string(dir.path().join("README.md")).unwrap().contains("eval_mean_cost"));
    }

    #[test]
    fn trials_round_trip() {
        let mut t = trial("A1", ModelKind::Sarl, 3, 2401.123456789, 2387.9);
        t.curve.push(CurvePoint { episode: 100, eval_mean_cost: 1.0 / 3.0, eval_std: 0.1 });
        let mut f = TrialResult::failed("B1", ModelKind::Imarl, 1, 5.5, &Error::Training("nan, \"quoted\"".into()));
        f.curve.clear();
        let ts = vec![t, f];
        let report = EvalReport::aggregate(&["A1".into(), "B1".into()], &[ModelKind::Sarl, ModelKind::Imarl], ts.clone());
        let dir = tempfile::tempdir().unwrap();
        export_report(&report, &[], dir.path()).unwrap();
        let back = read_trials(&dir.path().join("trials.csv"), Some(&dir.path().join("curves"))).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], ts[0]);
        assert_eq!(back[1].error, ts[1].error);
        assert!(back[1].best_cost.is_nan());
        let again = EvalReport::aggregate(&report.scenarios, &report.models, back);
        assert_eq!(again.cells[0], report.cells[0]);
    }

    #[test]
    fn benchmark_map_is_order_up_to() {
        let p = prepare("A1", None, 7).unwrap();
        let m = benchmark_policy_map(&p, 2_000, 1).unwrap();
        assert_eq!(m.ip.len(), 2_000 * 4);
        for q in 0..4 {
            let bsl = p.heuristic.bsl()[q];
            let o_max = p.scenario.params[q].o_max;
            assert!(m.points(q).all(|(ip, o)| o == (bsl - ip).clamp(0, o_max)));
        }
    }

    #[test]
    fn heuristic_trial_is_flat_at_benchmark() {
        let p = prepare("A1", None, 7).unwrap();
        let cfg = TrainConfig::default();
        let t = run_trial(&p, ModelKind::Heuristic, 4, 0, &cfg).unwrap().result;
        assert_eq!(t.best_cost, p.heuristic.benchmark.mean_cost);
        assert!(t.curve.iter().all(|c| c.eval_mean_cost == t.best_cost));
    }
}
