//! `fvote`: generate graphs, measure expansion, verify betrayal functions,
//! simulate voting runs, check the spectral inequalities, and execute
//! experiment sweeps.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fvote_core::checks::{run_suite, Suite, TolerancePolicy};
use fvote_core::dynamics::{default_max_steps, run, PhaseContext};
use fvote_core::experiments::{build_init, run_plan, ExperimentPlan, InitRule};
use fvote_core::generate::{generate, GeneratorSpec, GraphFamily, DEFAULT_RETRY_BUDGET};
use fvote_core::graph::{read_edge_list, write_edge_list, Graph};
use fvote_core::kernels::{BetrayalKind, BetrayalSpec};
use fvote_core::spectral::{expansion, DEFAULT_MAX_ITER, DEFAULT_TOL};

#[derive(Parser)]
#[command(name = "fvote", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph and write it as an edge list.
    Generate(GenerateArgs),
    /// Expansion parameter and degree-distribution norms of a graph.
    Spectral(SpectralArgs),
    /// Quasi-majority report for a betrayal function.
    Verify(KernelArgs),
    /// Run one voting process and optionally trace it to CSV.
    Simulate(SimulateArgs),
    /// Run an inequality check suite; one CSV row per check.
    Check(CheckArgs),
    /// Execute an experiment plan from JSON.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// gnp | random-regular | complete-self-loop
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
    /// Edge probability (gnp).
    #[arg(long)]
    p: Option<f64>,
    /// Degree (random-regular).
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_RETRY_BUDGET)]
    retry_budget: usize,
    /// Output edge-list path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SpectralArgs {
    /// Input edge-list path.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
}

#[derive(Args, Clone)]
struct KernelArgs {
    /// pull | best-of-k | k-careful | majority
    #[arg(long = "f")]
    kind: String,
    /// Sample count for best-of-k / k-careful.
    #[arg(long)]
    k: Option<u32>,
    /// Wrap in a lazy variant running the process with probability rho.
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Input edge-list path.
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    /// balanced | fraction:X (target pi(A)) | file:PATH
    #[arg(long, default_value = "balanced")]
    init: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to 50*ceil(log2 n).
    #[arg(long)]
    max_steps: Option<u32>,
    /// Write the per-step trace (t, pi_a, delta, phase) as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Skip the eigensolve; phases are then labelled "other".
    #[arg(long, default_value_t = false)]
    no_phases: bool,
}

#[derive(Args)]
struct CheckArgs {
    /// mixing | q_h | r_h | moments | all
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = 50)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    /// Plan JSON path.
    #[arg(long)]
    plan: PathBuf,
    /// Output directory for raw.csv and summary.json.
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate(a) => generate_cmd(a),
        Command::Spectral(a) => spectral_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Check(a) => check_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
    }
}

fn parse_kernel(args: &KernelArgs) -> Result<BetrayalKind> {
    let base = match args.kind.as_str() {
        "pull" => BetrayalKind::Pull,
        "best-of-k" => BetrayalKind::BestOfK(args.k.context("--f best-of-k requires --k")?),
        "k-careful" => BetrayalKind::KCareful(args.k.context("--f k-careful requires --k")?),
        "majority" => BetrayalKind::Majority,
        other => bail!("unknown betrayal function {other:?}"),
    };
    Ok(match args.rho {
        Some(rho) => BetrayalKind::Lazy {
            rho,
            inner: Box::new(base),
        },
        None => base,
    })
}

fn parse_init(text: &str) -> Result<InitRule> {
    if text == "balanced" {
        return Ok(InitRule::Balanced);
    }
    if let Some(frac) = text.strip_prefix("fraction:") {
        return Ok(InitRule::Fraction {
            pi_a: frac.parse().context("fraction:X needs a number")?,
        });
    }
    if let Some(path) = text.strip_prefix("file:") {
        return Ok(InitRule::FromFile { path: path.into() });
    }
    bail!("unknown init rule {text:?} (balanced | fraction:X | file:PATH)")
}

fn load_graph(path: &PathBuf) -> Result<Graph> {
    read_edge_list(path).with_context(|| format!("loading {}", path.display()))
}

fn generate_cmd(a: GenerateArgs) -> Result<()> {
    let family = match a.family.as_str() {
        "gnp" => GraphFamily::Gnp {
            p: a.p.context("--family gnp requires --p")?,
        },
        "random-regular" => GraphFamily::RandomRegular {
            d: a.d.context("--family random-regular requires --d")?,
        },
        "complete-self-loop" => GraphFamily::CompleteSelfLoop,
        other => bail!("unknown family {other:?}"),
    };
    let mut spec = GeneratorSpec::new(family, a.n, a.seed);
    spec.retry_budget = a.retry_budget;
    let g = generate(&spec)?;
    let file = std::fs::File::create(&a.out)
        .with_context(|| format!("creating {}", a.out.display()))?;
    write_edge_list(&g, std::io::BufWriter::new(file))?;
    eprintln!(
        "wrote {} ({} vertices, {} edges, seed {})",
        a.out.display(),
        g.n(),
        g.edge_count(),
        a.seed
    );
    Ok(())
}

fn spectral_cmd(a: SpectralArgs) -> Result<()> {
    let g = load_graph(&a.input)?;
    let dd = g.degree_distribution();
    let summary = expansion(&g, a.tol, a.max_iter)?;
    let out = serde_json::json!({
        "n": g.n(),
        "edges": g.edge_count(),
        "lambda": summary.lambda,
        "lambda2": summary.lambda2,
        "lambda_n": summary.lambda_n,
        "pi_norm2": dd.norm2(),
        "pi_norm3": dd.norm3(),
        "method": summary.method,
        "tol": summary.tol,
        "iterations": summary.iterations,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn verify_cmd(a: KernelArgs) -> Result<()> {
    let spec = BetrayalSpec::new(parse_kernel(&a)?)?;
    let report = spec.quasi_majority_check();
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let g = load_graph(&a.input)?;
    let spec = BetrayalSpec::new(parse_kernel(&a.kernel)?)?;
    let init = build_init(&g, &parse_init(&a.init)?)?;
    let max_steps = a.max_steps.unwrap_or_else(|| default_max_steps(g.n()));
    let ctx = if a.no_phases {
        None
    } else {
        match spec.derive_profile() {
            Ok(profile) => {
                let summary = expansion(&g, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
                let dd = g.degree_distribution();
                Some(PhaseContext::new(profile, &summary, &dd, g.n()))
            }
            Err(_) => None, // not C²: phases stay unlabelled
        }
    };
    let traj = run(&g, &spec, &init, max_steps, a.seed, ctx.as_ref());
    if let Some(path) = &a.trace {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "t,pi_a,delta,phase")?;
        for s in &traj.steps {
            writeln!(w, "{},{:.17e},{:.17e},{}", s.t, s.pi_a, s.delta, s.phase)?;
        }
    }
    let out = serde_json::json!({
        "seed": traj.seed,
        "terminal": traj.terminal,
        "t_cons": traj.t_cons,
        "steps_recorded": traj.steps.len(),
        "final_pi_a": traj.final_step().pi_a,
        "init_delta": init.delta(),
        "max_steps": max_steps,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn check_cmd(a: CheckArgs) -> Result<()> {
    let suite: Suite = a.suite.parse().map_err(anyhow::Error::msg)?;
    let results = run_suite(suite, a.instances, a.seed, &TolerancePolicy::default());
    let mut out = std::io::stdout().lock();
    writeln!(out, "name,instance,lhs,bound,slack,pass")?;
    let mut failures = 0usize;
    for r in &results {
        if !r.pass {
            failures += 1;
        }
        writeln!(
            out,
            "{},{},{:.12e},{:.12e},{:.12e},{}",
            r.name, r.instance, r.lhs, r.bound, r.slack, r.pass
        )?;
    }
    if failures > 0 {
        bail!("{failures} of {} checks failed", results.len());
    }
    Ok(())
}

fn sweep_cmd(a: SweepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.plan)
        .with_context(|| format!("reading {}", a.plan.display()))?;
    let plan: ExperimentPlan = serde_json::from_str(&text).context("parsing plan JSON")?;
    let result = run_plan(&plan)?;
    result.save(&a.out_dir)?;
    for cell in &result.cells {
        match &cell.aborted {
            Some(reason) => eprintln!("cell {} (n={}): aborted: {reason}", cell.cell, cell.n),
            None => eprintln!(
                "cell {} (n={}, {}): consensus {:.0}%, median t={}, lambda={:.4}",
                cell.cell,
                cell.n,
                cell.kernel,
                100.0 * cell.consensus_rate,
                cell.median_t,
                cell.lambda
            ),
        }
    }
    eprintln!("wrote {}/raw.csv and summary.json", a.out_dir.display());
    Ok(())
}
