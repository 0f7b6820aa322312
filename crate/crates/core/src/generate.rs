//! Seeded random graph generators for the families the experiments target.

use std::path::PathBuf;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{read_edge_list, Graph, GraphError};
use crate::seed::{mix_seed, rng_from};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphFamily {
    /// Erdős–Rényi: every unordered vertex pair is an edge independently
    /// with probability `p`.
    Gnp { p: f64 },
    /// Uniform-ish random `d`-regular graph via the pairing model with whole
    /// matching rejection. Fine for small `d`; the rejection rate grows
    /// quickly with `d`.
    RandomRegular { d: usize },
    /// Complete graph plus a self-loop at every vertex, so `deg(v) = n` and
    /// `P(v, S) = |S|/n` exactly.
    CompleteSelfLoop,
    /// Load a previously written edge list.
    FromFile { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: GraphFamily,
    pub n: usize,
    pub seed: u64,
    /// Attempts before giving up on a connected (and, for regular graphs,
    /// simple) sample.
    pub retry_budget: usize,
}

pub const DEFAULT_RETRY_BUDGET: usize = 1000;

impl GeneratorSpec {
    pub fn new(family: GraphFamily, n: usize, seed: u64) -> Self {
        Self {
            family,
            n,
            seed,
            retry_budget: DEFAULT_RETRY_BUDGET,
        }
    }
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("invalid generator parameter: {0}")]
    InvalidParam(String),
    #[error("no valid sample in {attempts} attempts (last failure: {last})")]
    RetryExhausted { attempts: usize, last: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("edge list: {0}")]
    EdgeList(#[from] crate::graph::EdgeListError),
}

/// Draws a graph for the spec. Deterministic given the seed: attempt `i`
/// uses an RNG seeded by `mix_seed(seed, i, 0)`.
pub fn generate(spec: &GeneratorSpec) -> Result<Graph, GenerateError> {
    validate(spec)?;
    match &spec.family {
        GraphFamily::CompleteSelfLoop => Ok(complete_self_loop(spec.n)),
        GraphFamily::FromFile { path } => Ok(read_edge_list(path)?),
        GraphFamily::Gnp { p } => retry(spec, |rng| {
            let adj = gnp_adjacency(spec.n, *p, rng);
            Graph::from_adjacency(adj).map_err(|e| e.to_string())
        }),
        GraphFamily::RandomRegular { d } => retry(spec, |rng| {
            let adj = pairing_model(spec.n, *d, rng)?;
            Graph::from_adjacency(adj).map_err(|e| e.to_string())
        }),
    }
}

fn validate(spec: &GeneratorSpec) -> Result<(), GenerateError> {
    if spec.n == 0 {
        return Err(GenerateError::InvalidParam("n must be positive".into()));
    }
    match &spec.family {
        GraphFamily::Gnp { p } => {
            if !(*p > 0.0 && *p <= 1.0) {
                return Err(GenerateError::InvalidParam(format!(
                    "gnp requires 0 < p <= 1, got {p}"
                )));
            }
        }
        GraphFamily::RandomRegular { d } => {
            if *d < 3 || *d > spec.n / 2 {
                return Err(GenerateError::InvalidParam(format!(
                    "random-regular requires 3 <= d <= n/2, got d={d}, n={}",
                    spec.n
                )));
            }
            if (spec.n * d) % 2 != 0 {
                return Err(GenerateError::InvalidParam(format!(
                    "random-regular requires n*d even, got n={}, d={d}",
                    spec.n
                )));
            }
        }
        GraphFamily::CompleteSelfLoop | GraphFamily::FromFile { .. } => {}
    }
    Ok(())
}

fn retry(
    spec: &GeneratorSpec,
    mut attempt: impl FnMut(&mut rand_chacha::ChaCha8Rng) -> Result<Graph, String>,
) -> Result<Graph, GenerateError> {
    let budget = spec.retry_budget.max(1);
    let mut last = String::new();
    for i in 0..budget {
        let mut rng = rng_from(mix_seed(spec.seed, i as u64, 0));
        match attempt(&mut rng) {
            Ok(g) => return Ok(g),
            Err(e) => last = e,
        }
    }
    Err(GenerateError::RetryExhausted {
        attempts: budget,
        last,
    })
}

fn complete_self_loop(n: usize) -> Graph {
    let adj: Vec<Vec<u32>> = (0..n).map(|_| (0..n as u32).collect()).collect();
    Graph::from_adjacency(adj).expect("complete graph with loops is connected")
}

/// Samples each of the C(n, 2) pairs independently. Implemented by skipping
/// geometrically many pairs between successive edges, which realises exactly
/// the product-Bernoulli distribution in O(|E|) draws; `p = 1` short-circuits
/// to the complete graph.
fn gnp_adjacency(n: usize, p: f64, rng: &mut impl Rng) -> Vec<Vec<u32>> {
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    if p >= 1.0 {
        for v in 0..n {
            let mut list: Vec<u32> = (0..n as u32).collect();
            list.remove(v);
            adj[v] = list;
        }
        return adj;
    }
    let total = n as u64 * (n as u64 - 1) / 2;
    let skip = Geometric::new(p).expect("validated p");
    let mut cursor: u64 = 0;
    loop {
        let jump: u64 = skip.sample(rng);
        cursor = match cursor.checked_add(jump) {
            Some(c) => c,
            None => break,
        };
        if cursor >= total {
            break;
        }
        let (u, v) = pair_from_rank(cursor);
        adj[u as usize].push(v);
        adj[v as usize].push(u);
        cursor += 1;
    }
    adj
}

/// Inverse of the row-major enumeration of pairs (u, v), u < v.
fn pair_from_rank(rank: u64) -> (u32, u32) {
    // rank = v*(v-1)/2 + u with u < v
    let v = ((1.0 + (1.0 + 8.0 * rank as f64).sqrt()) / 2.0).floor() as u64;
    let v = if v * (v - 1) / 2 > rank { v - 1 } else { v };
    let v = if (v + 1) * v / 2 <= rank { v + 1 } else { v };
    let u = rank - v * (v - 1) / 2;
    (u as u32, v as u32)
}

/// One pairing-model attempt: shuffle the n*d half-edges and match the two
/// halves; fail on any self-loop or repeated pair.
fn pairing_model(n: usize, d: usize, rng: &mut impl Rng) -> Result<Vec<Vec<u32>>, String> {
    let half = n * d / 2;
    let mut points: Vec<u32> = (0..n as u32).flat_map(|v| std::iter::repeat(v).take(d)).collect();
    // Fisher-Yates
    for i in (1..points.len()).rev() {
        let j = rng.gen_range(0..=i);
        points.swap(i, j);
    }
    let mut adj: Vec<Vec<u32>> = vec![Vec::with_capacity(d); n];
    for i in 0..half {
        let u = points[i];
        let v = points[i + half];
        if u == v {
            return Err("self-loop in matching".into());
        }
        if adj[u as usize].contains(&v) {
            return Err("multi-edge in matching".into());
        }
        adj[u as usize].push(v);
        adj[v as usize].push(u);
    }
    Ok(adj)
}
