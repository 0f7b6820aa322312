//! Declarative experiment sweeps: seeded (cell, trial) grids over graph
//! families, consensus-time statistics, scaling fits, and drift audits.
//!
//! A plan is a cross product of graph sizes and betrayal kernels. Every
//! unit of work derives its seed from `(master seed, cell index, trial
//! index)` through the SplitMix64 mixer, so any trial can be replayed in
//! isolation and the whole sweep is bit-reproducible regardless of how the
//! trials are scheduled.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::VertexSet;
use crate::dynamics::{run, Configuration, Terminal, Trajectory};
use crate::generate::{generate, GenerateError, GeneratorSpec, GraphFamily};
use crate::graph::Graph;
use crate::kernels::{BetrayalKind, BetrayalSpec, KernelError, UpdatingProfile};
use crate::numeric::{median_sorted, quantile_sorted};
use crate::seed::{mix_seed, GRAPH_STREAM};
use crate::spectral::{expansion, SpectralError, DEFAULT_MAX_ITER};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("need at least {needed} usable cells, found {found}")]
    InsufficientCells { needed: usize, found: usize },
    #[error("scaling model needs a neighbour sample count k >= 2 in every cell")]
    MissingSampleCount,
    #[error("no eligible growth-window transitions in the corpus")]
    NoPhaseIISteps,
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Graph family of a plan; the per-cell parameter comes from [`ParamRule`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyRule {
    Gnp,
    RandomRegular,
    CompleteSelfLoop,
}

/// Power-law parameter rule `param(n, s) = coeff · n^n_exp · (s + s_off)^s_exp`,
/// where `s` is the cell kernel's neighbour sample count (1 when absent).
/// Covers fixed parameters (`n_exp = s_exp = 0`), density rules like
/// `3·n^{-1/2}`, and sample-coupled rules: best-of-(2k+1) with
/// `coeff = 2, s_exp = 1, s_off = -1` gives `2(s-1)/√n = 4k/√n`.
/// Densities clamp to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRule {
    pub coeff: f64,
    #[serde(default)]
    pub n_exp: f64,
    #[serde(default)]
    pub s_exp: f64,
    #[serde(default)]
    pub s_off: f64,
}

impl ParamRule {
    pub fn fixed(coeff: f64) -> Self {
        Self {
            coeff,
            n_exp: 0.0,
            s_exp: 0.0,
            s_off: 0.0,
        }
    }

    pub fn value(&self, n: usize, sample_count: u32) -> f64 {
        self.coeff
            * (n as f64).powf(self.n_exp)
            * (sample_count as f64 + self.s_off).powf(self.s_exp)
    }
}

/// Deterministic initial opinion assignment for a cell. All variants build
/// the same set for every trial; trials differ only in their update draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitRule {
    /// Greedy volume split targeting `π(A) = 1/2`.
    Balanced,
    /// Greedy volume split targeting a given `π(A)`.
    Fraction { pi_a: f64 },
    /// The `⌊n/2⌋` highest-degree vertices (worst-case proxy).
    HighestDegreeHalf,
    /// Breadth-first ball around vertex 0 holding half the vertices
    /// (clustered worst-case proxy).
    BfsBall,
    /// Vertex indices listed one per line (`#` comments allowed).
    FromFile { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaxStepsRule {
    /// `mult · ⌈log₂ n⌉`.
    LogMultiple { mult: u32 },
    Fixed { steps: u32 },
}

impl Default for MaxStepsRule {
    fn default() -> Self {
        MaxStepsRule::LogMultiple { mult: 50 }
    }
}

/// Expander-hypothesis gate for a cell: `λ ≤ c1·n^{-1/4}`,
/// `‖π‖₂ ≤ c1/√n` and `‖π‖₃ ≤ c1·n^{-1/2}·n^{-1/8}` (a concrete vanishing
/// rate standing in for the `o(1/√n)` requirement). Cells that miss it are
/// flagged, never silently included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisRule {
    pub c1: f64,
}

fn default_spectral_tol() -> f64 {
    1e-6
}

fn default_retry_budget() -> usize {
    crate::generate::DEFAULT_RETRY_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub plan_id: String,
    pub family: FamilyRule,
    pub param: ParamRule,
    pub ns: Vec<usize>,
    pub kernels: Vec<BetrayalKind>,
    pub init: InitRule,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub max_steps: MaxStepsRule,
    #[serde(default = "default_spectral_tol")]
    pub spectral_tol: f64,
    #[serde(default = "default_retry_budget")]
    pub retry_budget: usize,
    #[serde(default)]
    pub hypothesis: Option<HypothesisRule>,
}

/// One point of the plan grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSpec {
    pub index: usize,
    pub n: usize,
    pub kernel: BetrayalKind,
    pub param: f64,
}

impl ExperimentPlan {
    /// Cell enumeration: sizes outer, kernels inner; fully determined by
    /// the plan.
    pub fn cells(&self) -> Vec<CellSpec> {
        let mut cells = Vec::new();
        for &n in &self.ns {
            for kernel in &self.kernels {
                let k = kernel.sample_count().unwrap_or(1);
                let raw = self.param.value(n, k);
                let param = match self.family {
                    FamilyRule::Gnp => raw.min(1.0),
                    _ => raw,
                };
                cells.push(CellSpec {
                    index: cells.len(),
                    n,
                    kernel: kernel.clone(),
                    param,
                });
            }
        }
        cells
    }

    pub fn max_steps_for(&self, n: usize) -> u32 {
        match self.max_steps {
            MaxStepsRule::LogMultiple { mult } => {
                mult * (n.max(2) as f64).log2().ceil() as u32
            }
            MaxStepsRule::Fixed { steps } => steps,
        }
    }

    fn generator_spec(&self, cell: &CellSpec) -> Result<GeneratorSpec, ExperimentError> {
        let family = match self.family {
            FamilyRule::Gnp => GraphFamily::Gnp { p: cell.param },
            FamilyRule::RandomRegular => {
                let d = cell.param.round();
                if d < 3.0 || !d.is_finite() {
                    return Err(ExperimentError::InvalidPlan(format!(
                        "degree rule gave {d} at n = {}",
                        cell.n
                    )));
                }
                GraphFamily::RandomRegular { d: d as usize }
            }
            FamilyRule::CompleteSelfLoop => GraphFamily::CompleteSelfLoop,
        };
        let mut spec = GeneratorSpec::new(family, cell.n, mix_seed(self.master_seed, cell.index as u64, GRAPH_STREAM));
        spec.retry_budget = self.retry_budget;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if self.ns.is_empty() || self.kernels.is_empty() {
            return Err(ExperimentError::InvalidPlan(
                "plan needs at least one size and one kernel".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub cell: usize,
    pub trial: usize,
    pub seed: u64,
    pub t_cons: Option<u32>,
    pub terminal: Terminal,
}

/// Aggregates for one cell. Quantiles treat timeouts as censored at
/// `max_steps + 1`.
#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub cell: usize,
    pub n: usize,
    pub kernel: BetrayalKind,
    pub param: f64,
    pub max_steps: u32,
    pub lambda: f64,
    pub norm2: f64,
    pub norm3: f64,
    pub init_delta: f64,
    pub consensus_rate: f64,
    pub median_t: f64,
    pub p05_t: f64,
    pub p95_t: f64,
    pub mean_t: f64,
    /// Consensus rate reached at least `1 - 5/√n` (reported, not asserted).
    pub whp_ok: bool,
    pub hypothesis_ok: Option<bool>,
    pub aborted: Option<String>,
    pub trials: Vec<TrialRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub plan: ExperimentPlan,
    pub cells: Vec<CellResult>,
}

/// Runs every (cell, trial) of the plan. Cells whose graph generation or
/// eigensolve fails are recorded as aborted; everything else proceeds.
pub fn run_plan(plan: &ExperimentPlan) -> Result<ExperimentResult, ExperimentError> {
    plan.validate()?;
    let cells = plan
        .cells()
        .iter()
        .map(|c| run_cell(plan, c))
        .collect::<Vec<_>>();
    Ok(ExperimentResult {
        plan: plan.clone(),
        cells,
    })
}

fn aborted_cell(cell: &CellSpec, max_steps: u32, reason: String) -> CellResult {
    CellResult {
        cell: cell.index,
        n: cell.n,
        kernel: cell.kernel.clone(),
        param: cell.param,
        max_steps,
        lambda: 0.0,
        norm2: 0.0,
        norm3: 0.0,
        init_delta: 0.0,
        consensus_rate: 0.0,
        median_t: 0.0,
        p05_t: 0.0,
        p95_t: 0.0,
        mean_t: 0.0,
        whp_ok: false,
        hypothesis_ok: None,
        aborted: Some(reason),
        trials: Vec::new(),
    }
}

/// Runs one cell in isolation (the replay path uses exactly this).
pub fn run_cell(plan: &ExperimentPlan, cell: &CellSpec) -> CellResult {
    let max_steps = plan.max_steps_for(cell.n);
    let gen_spec = match plan.generator_spec(cell) {
        Ok(s) => s,
        Err(e) => return aborted_cell(cell, max_steps, e.to_string()),
    };
    let g = match generate(&gen_spec) {
        Ok(g) => g,
        Err(e) => return aborted_cell(cell, max_steps, e.to_string()),
    };
    let dd = g.degree_distribution();
    let summary = match expansion(&g, plan.spectral_tol, DEFAULT_MAX_ITER) {
        Ok(s) => s,
        Err(e) => return aborted_cell(cell, max_steps, e.to_string()),
    };
    let spec = match BetrayalSpec::new(cell.kernel.clone()) {
        Ok(s) => s,
        Err(e) => return aborted_cell(cell, max_steps, e.to_string()),
    };
    let init = match build_init(&g, &plan.init) {
        Ok(i) => i,
        Err(e) => return aborted_cell(cell, max_steps, e.to_string()),
    };

    let trials: Vec<TrialRecord> = (0..plan.trials)
        .into_par_iter()
        .map(|t| {
            let seed = mix_seed(plan.master_seed, cell.index as u64, t as u64);
            let traj = run(&g, &spec, &init, max_steps, seed, None);
            TrialRecord {
                cell: cell.index,
                trial: t,
                seed,
                t_cons: traj.t_cons,
                terminal: traj.terminal,
            }
        })
        .collect();

    let stats = TrialStats::from_records(&trials, max_steps);
    let hypothesis_ok = plan.hypothesis.map(|h| {
        let n = cell.n as f64;
        summary.lambda <= h.c1 * n.powf(-0.25)
            && dd.norm2() <= h.c1 / n.sqrt()
            && dd.norm3() <= h.c1 * n.powf(-0.5 - 0.125)
    });
    CellResult {
        cell: cell.index,
        n: cell.n,
        kernel: cell.kernel.clone(),
        param: cell.param,
        max_steps,
        lambda: summary.lambda,
        norm2: dd.norm2(),
        norm3: dd.norm3(),
        init_delta: init.delta(),
        consensus_rate: stats.consensus_rate,
        median_t: stats.median,
        p05_t: stats.p05,
        p95_t: stats.p95,
        mean_t: stats.mean,
        whp_ok: stats.consensus_rate >= 1.0 - 5.0 / (cell.n as f64).sqrt(),
        hypothesis_ok,
        aborted: None,
        trials,
    }
}

/// Replays a single (cell, trial) with full trajectory recording;
/// bit-identical to what the sweep executed.
pub fn replay_trial(
    plan: &ExperimentPlan,
    cell_index: usize,
    trial: usize,
) -> Result<Trajectory, ExperimentError> {
    let cells = plan.cells();
    let cell = cells
        .get(cell_index)
        .ok_or_else(|| ExperimentError::InvalidPlan(format!("no cell {cell_index}")))?;
    let g = generate(&plan.generator_spec(cell)?)?;
    let spec = BetrayalSpec::new(cell.kernel.clone())?;
    let init = build_init(&g, &plan.init)?;
    let seed = mix_seed(plan.master_seed, cell.index as u64, trial as u64);
    Ok(run(
        &g,
        &spec,
        &init,
        plan.max_steps_for(cell.n),
        seed,
        None,
    ))
}

struct TrialStats {
    consensus_rate: f64,
    median: f64,
    p05: f64,
    p95: f64,
    mean: f64,
}

impl TrialStats {
    fn from_records(trials: &[TrialRecord], max_steps: u32) -> Self {
        if trials.is_empty() {
            return Self {
                consensus_rate: 0.0,
                median: 0.0,
                p05: 0.0,
                p95: 0.0,
                mean: 0.0,
            };
        }
        let mut ts: Vec<f64> = trials
            .iter()
            .map(|t| t.t_cons.map_or((max_steps + 1) as f64, |v| v as f64))
            .collect();
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let done = trials.iter().filter(|t| t.t_cons.is_some()).count();
        Self {
            consensus_rate: done as f64 / trials.len() as f64,
            median: median_sorted(&ts),
            p05: quantile_sorted(&ts, 0.05),
            p95: quantile_sorted(&ts, 0.95),
            mean: ts.iter().sum::<f64>() / ts.len() as f64,
        }
    }
}

/// Builds the deterministic initial configuration for a rule.
pub fn build_init(g: &Graph, rule: &InitRule) -> Result<Configuration, ExperimentError> {
    let set = match rule {
        InitRule::Balanced => volume_fraction_set(g, 0.5),
        InitRule::Fraction { pi_a } => {
            if !(0.0..=1.0).contains(pi_a) {
                return Err(ExperimentError::InvalidPlan(format!(
                    "fraction must lie in [0,1], got {pi_a}"
                )));
            }
            volume_fraction_set(g, *pi_a)
        }
        InitRule::HighestDegreeHalf => {
            let mut order: Vec<usize> = (0..g.n()).collect();
            order.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
            VertexSet::from_indices(g.n(), &order[..g.n() / 2])
        }
        InitRule::BfsBall => bfs_ball(g, g.n() / 2),
        InitRule::FromFile { path } => read_vertex_set(g, path)?,
    };
    Ok(Configuration::new(g, set))
}

/// Greedy split in ascending vertex order: add `v` while the volume stays
/// at or below `target · D`.
fn volume_fraction_set(g: &Graph, target: f64) -> VertexSet {
    let budget = (target * g.degree_total() as f64).round() as u64;
    let mut set = VertexSet::empty(g.n());
    let mut vol = 0u64;
    for v in 0..g.n() {
        let d = g.degree(v) as u64;
        if vol + d <= budget {
            vol += d;
            set.insert(v);
        }
    }
    set
}

fn bfs_ball(g: &Graph, want: usize) -> VertexSet {
    let mut set = VertexSet::empty(g.n());
    let mut queue = std::collections::VecDeque::from([0usize]);
    set.insert(0);
    while set.cardinality() < want {
        let Some(v) = queue.pop_front() else { break };
        for &w in g.neighbors(v) {
            if set.cardinality() >= want {
                break;
            }
            if set.insert(w as usize) {
                queue.push_back(w as usize);
            }
        }
    }
    set
}

fn read_vertex_set(g: &Graph, path: &Path) -> Result<VertexSet, ExperimentError> {
    let text = std::fs::read_to_string(path)?;
    let mut set = VertexSet::empty(g.n());
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let v: usize = body.parse().map_err(|_| {
            ExperimentError::InvalidPlan(format!("bad vertex at line {}", lineno + 1))
        })?;
        if v >= g.n() {
            return Err(ExperimentError::InvalidPlan(format!(
                "vertex {v} out of range for n = {}",
                g.n()
            )));
        }
        set.insert(v);
    }
    Ok(set)
}

// ---------------------------------------------------------------------------
// output files

impl ExperimentResult {
    /// Raw per-trial rows:
    /// `plan_id,cell,trial,seed,n,param,lambda,pi2,pi3,t_cons,terminal`.
    pub fn write_raw_csv(&self, w: impl Write) -> Result<(), ExperimentError> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "plan_id", "cell", "trial", "seed", "n", "param", "lambda", "pi2", "pi3", "t_cons",
            "terminal",
        ])?;
        for cell in &self.cells {
            for t in &cell.trials {
                wtr.write_record([
                    self.plan.plan_id.as_str(),
                    &cell.cell.to_string(),
                    &t.trial.to_string(),
                    &t.seed.to_string(),
                    &cell.n.to_string(),
                    &format!("{:.12e}", cell.param),
                    &format!("{:.12e}", cell.lambda),
                    &format!("{:.12e}", cell.norm2),
                    &format!("{:.12e}", cell.norm3),
                    &t.t_cons.map_or(String::new(), |v| v.to_string()),
                    &t.terminal.to_string(),
                ])?;
            }
        }
        wtr.flush().map_err(std::io::Error::from)?;
        Ok(())
    }

    pub fn raw_csv_string(&self) -> Result<String, ExperimentError> {
        let mut buf = Vec::new();
        self.write_raw_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }

    /// Per-cell aggregates plus the plan, without the raw trial rows.
    pub fn write_summary_json(&self, w: impl Write) -> Result<(), ExperimentError> {
        #[derive(Serialize)]
        struct CellView<'a> {
            cell: usize,
            n: usize,
            kernel: &'a BetrayalKind,
            param: f64,
            max_steps: u32,
            lambda: f64,
            norm2: f64,
            norm3: f64,
            init_delta: f64,
            consensus_rate: f64,
            median_t: f64,
            p05_t: f64,
            p95_t: f64,
            mean_t: f64,
            whp_ok: bool,
            hypothesis_ok: Option<bool>,
            aborted: &'a Option<String>,
        }
        #[derive(Serialize)]
        struct View<'a> {
            plan: &'a ExperimentPlan,
            cells: Vec<CellView<'a>>,
        }
        let view = View {
            plan: &self.plan,
            cells: self
                .cells
                .iter()
                .map(|c| CellView {
                    cell: c.cell,
                    n: c.n,
                    kernel: &c.kernel,
                    param: c.param,
                    max_steps: c.max_steps,
                    lambda: c.lambda,
                    norm2: c.norm2,
                    norm3: c.norm3,
                    init_delta: c.init_delta,
                    consensus_rate: c.consensus_rate,
                    median_t: c.median_t,
                    p05_t: c.p05_t,
                    p95_t: c.p95_t,
                    mean_t: c.mean_t,
                    whp_ok: c.whp_ok,
                    hypothesis_ok: c.hypothesis_ok,
                    aborted: &c.aborted,
                })
                .collect(),
        };
        serde_json::to_writer_pretty(w, &view).map_err(std::io::Error::from)?;
        Ok(())
    }

    /// Writes `raw.csv` and `summary.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), ExperimentError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.write_raw_csv(std::fs::File::create(dir.join("raw.csv"))?)?;
        self.write_summary_json(std::fs::File::create(dir.join("summary.json"))?)?;
        Ok(())
    }
}

/// Per-cell medians and rates recomputed from a raw CSV, keyed by cell
/// index; lets tests confirm the stored summary is reproducible from the
/// raw rows alone.
pub fn stats_from_raw_csv(
    text: &str,
    max_steps_of_cell: impl Fn(usize) -> u32,
) -> Result<Vec<(usize, f64, f64)>, ExperimentError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut per_cell: std::collections::BTreeMap<usize, Vec<Option<u32>>> =
        std::collections::BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let cell: usize = rec[1].parse().expect("cell index");
        let t_cons: Option<u32> = if rec[9].is_empty() {
            None
        } else {
            Some(rec[9].parse().expect("t_cons"))
        };
        per_cell.entry(cell).or_default().push(t_cons);
    }
    Ok(per_cell
        .into_iter()
        .map(|(cell, ts)| {
            let max = max_steps_of_cell(cell);
            let mut v: Vec<f64> = ts
                .iter()
                .map(|t| t.map_or((max + 1) as f64, |x| x as f64))
                .collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let rate = ts.iter().filter(|t| t.is_some()).count() as f64 / ts.len() as f64;
            (cell, median_sorted(&v), rate)
        })
        .collect())
}

// ---------------------------------------------------------------------------
// scaling fits

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingModel {
    /// Median consensus time against `ln n`.
    LogN,
    /// Against `ln n / ln k`.
    LogNOverLogK,
    /// Intercept-only fit.
    Const,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Ordinary least squares of `y` on `x`. `r2 = 1 - RSS/TSS`, with the
/// convention `r2 = 1` for exactly fit constant data.
pub fn ols(points: &[(f64, f64)]) -> Fit {
    let n = points.len() as f64;
    assert!(points.len() >= 2);
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = points
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let tss: f64 = points.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let r2 = if tss > 0.0 {
        1.0 - rss / tss
    } else if rss <= 1e-18 {
        1.0
    } else {
        0.0
    };
    Fit {
        slope,
        intercept,
        r2,
        points: points.len(),
    }
}

/// Fits the per-cell median consensus times of a sweep against the model
/// regressor. Aborted cells are skipped; at least 3 usable cells required.
pub fn fit_scaling(result: &ExperimentResult, model: ScalingModel) -> Result<Fit, ExperimentError> {
    let mut points = Vec::new();
    for cell in &result.cells {
        if cell.aborted.is_some() {
            continue;
        }
        let x = match model {
            ScalingModel::LogN => (cell.n as f64).ln(),
            ScalingModel::LogNOverLogK => {
                let k = cell
                    .kernel
                    .sample_count()
                    .ok_or(ExperimentError::MissingSampleCount)?;
                if k < 2 {
                    return Err(ExperimentError::MissingSampleCount);
                }
                (cell.n as f64).ln() / (k as f64).ln()
            }
            ScalingModel::Const => 0.0,
        };
        points.push((x, cell.median_t));
    }
    if points.len() < 3 {
        return Err(ExperimentError::InsufficientCells {
            needed: 3,
            found: points.len(),
        });
    }
    if model == ScalingModel::Const {
        let my = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
        return Ok(Fit {
            slope: 0.0,
            intercept: my,
            r2: 0.0,
            points: points.len(),
        });
    }
    Ok(ols(&points))
}

// ---------------------------------------------------------------------------
// drift audits

/// Bias window and growth factor for a drift audit, together with the
/// pointwise tail bound for the "bad" (insufficient growth) event.
#[derive(Debug, Clone, Copy)]
pub struct DriftWindow {
    pub lo: f64,
    pub hi: f64,
    /// Bad event: `|δ'| ≤ growth · |δ|`.
    pub growth: f64,
    bound: BoundForm,
}

#[derive(Debug, Clone, Copy)]
enum BoundForm {
    /// `2 exp(-eps_h² δ² / (128 ‖π‖₂²))`.
    Exponential { eps_h: f64 },
    /// `2 exp(-(0.025 √k δ)² / (2 ‖π‖₂²))`, the Hoeffding tail behind the
    /// √k growth step.
    SqrtK { k: f64 },
}

impl DriftWindow {
    /// Fixed-kernel growth window `[(2K/eps_h)·λ², eps_h/K]` with factor
    /// `1 + eps_h/8`. Note the window can be empty when λ is too large for
    /// the kernel's drift constants; the audit then reports no eligible
    /// steps.
    pub fn exponential_growth(profile: &UpdatingProfile, lambda: f64) -> Self {
        Self {
            lo: 2.0 * profile.k_f / profile.eps_h * lambda * lambda,
            hi: profile.eps_h / profile.k_f,
            growth: 1.0 + profile.eps_h / 8.0,
            bound: BoundForm::Exponential {
                eps_h: profile.eps_h,
            },
        }
    }

    /// Growing-k window `[20/√(nk), 1.25/√k]` with factor `0.025·√k` for
    /// best-of-(2k+1). The lower edge constant 20 instantiates the
    /// "sufficiently large h" of the analysis.
    pub fn sqrt_k_growth(k: u32, n: usize) -> Self {
        let kf = k as f64;
        Self {
            lo: 20.0 / (n as f64 * kf).sqrt(),
            hi: 1.25 / kf.sqrt(),
            growth: 0.025 * kf.sqrt(),
            bound: BoundForm::SqrtK { k: kf },
        }
    }

    fn tail_bound(&self, delta: f64, norm2: f64) -> f64 {
        match self.bound {
            BoundForm::Exponential { eps_h } => {
                2.0 * (-(eps_h * eps_h * delta * delta) / (128.0 * norm2 * norm2)).exp()
            }
            BoundForm::SqrtK { k } => {
                let kappa = 0.025 * k.sqrt() * delta;
                2.0 * (-(kappa * kappa) / (2.0 * norm2 * norm2)).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DriftAudit {
    pub eligible: usize,
    pub bad: usize,
    pub empirical: f64,
    /// Mean of the pointwise tail bounds over eligible steps (may exceed 1
    /// where the theory is vacuous at this scale).
    pub bound_mean: f64,
    /// `min(bound_mean, 1) + 3 binomial standard errors`.
    pub threshold: f64,
    pub pass: bool,
}

/// Audits the one-step bias growth over all in-window transitions of a
/// corpus sharing one (graph, kernel): the empirical frequency of
/// `|δ_{t+1}| ≤ growth·|δ_t|` must not exceed the aggregated tail bound by
/// more than 3 binomial standard errors.
pub fn drift_audit(
    trajectories: &[Trajectory],
    window: &DriftWindow,
    norm2: f64,
) -> Result<DriftAudit, ExperimentError> {
    let mut eligible = 0usize;
    let mut bad = 0usize;
    let mut bound_sum = 0.0f64;
    for traj in trajectories {
        for pair in traj.steps.windows(2) {
            let d0 = pair[0].delta.abs();
            let d1 = pair[1].delta.abs();
            if d0 >= window.lo && d0 <= window.hi {
                eligible += 1;
                bound_sum += window.tail_bound(d0, norm2);
                if d1 <= window.growth * d0 {
                    bad += 1;
                }
            }
        }
    }
    if eligible == 0 {
        return Err(ExperimentError::NoPhaseIISteps);
    }
    let empirical = bad as f64 / eligible as f64;
    let bound_mean = bound_sum / eligible as f64;
    let capped = bound_mean.min(1.0);
    let se = (capped * (1.0 - capped) / eligible as f64).sqrt();
    let threshold = capped + 3.0 * se;
    Ok(DriftAudit {
        eligible,
        bad,
        empirical,
        bound_mean,
        threshold,
        pass: empirical <= threshold,
    })
}

/// Seeded corpus of full trajectories on one shared (graph, kernel, init);
/// run `i` uses seed `mix_seed(master_seed, i, 0)`.
pub fn run_corpus(
    g: &Graph,
    spec: &BetrayalSpec,
    init: &Configuration,
    runs: usize,
    master_seed: u64,
    max_steps: u32,
) -> Vec<Trajectory> {
    (0..runs)
        .into_par_iter()
        .map(|i| {
            let seed = mix_seed(master_seed, i as u64, 0);
            run(g, spec, init, max_steps, seed, None)
        })
        .collect()
}
