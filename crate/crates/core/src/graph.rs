//! Immutable undirected graphs and exact computation of the random-walk
//! measure quantities the voting analysis is built on.
//!
//! For a connected graph let `deg` be the vertex degrees, `D = Σ_v deg(v)`
//! the degree total, and `π(v) = deg(v)/D` the stationary distribution of the
//! simple random walk `P(u, v) = 1/deg(u)` for neighbours. The walk is
//! reversible: `π(u)P(u, v) = 1/D` is symmetric. On top of `π` and
//! `P(v, S) = |N(v) ∩ S| / deg(v)` this module computes, with fixed
//! summation order and compensated accumulation:
//!
//! * the edge measure `Q(S, T) = Σ_{v∈S} π(v) P(v, T)`,
//! * its kernel-weighted generalisation `Q_h(S, T) = Σ_{v∈S} π(v) h(P(v, T))`,
//! * the squared-weight variant `R_h(S, T) = Σ_{v∈S} π(v)² h(P(v, T))`.
//!
//! Self-loops are permitted; a self-loop contributes one to its endpoint's
//! degree and puts `v ∈ N(v)`, so on the complete graph with a loop at every
//! vertex `P(v, S) = |S|/n` exactly. Loops count once in the degree total,
//! keeping `π` the stationary distribution of the loop-aware walk.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use crate::bits::VertexSet;
use crate::numeric::NeumaierSum;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("edge ({0}, {1}) out of range for {2} vertices")]
    EdgeOutOfRange(u32, u32, usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(u32, u32),
    #[error("vertex {0} has degree zero")]
    IsolatedVertex(usize),
    #[error("graph is disconnected")]
    Disconnected,
}

/// Immutable undirected graph with sorted adjacency lists.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<u32>>,
    deg: Vec<u32>,
    degree_total: u64,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph from an undirected edge list. `(u, u)` denotes a
    /// self-loop. Rejects duplicate edges, isolated vertices and
    /// disconnected graphs.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(GraphError::EdgeOutOfRange(u, v, n));
            }
            adj[u as usize].push(v);
            if u != v {
                adj[v as usize].push(u);
            }
        }
        Self::from_adjacency(adj)
    }

    /// Builds a graph from prepared neighbour lists (one entry per incident
    /// edge; a self-loop appears once in its own list). Used by generators
    /// that construct adjacency directly.
    pub(crate) fn from_adjacency(mut adj: Vec<Vec<u32>>) -> Result<Self, GraphError> {
        let n = adj.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        for (v, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::DuplicateEdge(v as u32, w[0]));
            }
            if list.is_empty() {
                return Err(GraphError::IsolatedVertex(v));
            }
        }
        let deg: Vec<u32> = adj.iter().map(|l| l.len() as u32).collect();
        let degree_total: u64 = deg.iter().map(|&d| d as u64).sum();
        let loops: usize = (0..n).filter(|&v| adj[v].binary_search(&(v as u32)).is_ok()).count();
        let edge_count = (degree_total as usize - loops) / 2 + loops;
        let g = Self {
            n,
            adj,
            deg,
            degree_total,
            edge_count,
        };
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of edges, counting each self-loop once.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// `Σ_v deg(v)`; equals `2|E|` for loop-free graphs.
    pub fn degree_total(&self) -> u64 {
        self.degree_total
    }

    pub fn degree(&self, v: usize) -> u32 {
        self.deg[v]
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&(v as u32)).is_ok()
    }

    /// `|N(v) ∩ S|`.
    pub fn degree_in(&self, v: usize, s: &VertexSet) -> u32 {
        self.adj[v].iter().filter(|&&w| s.contains(w as usize)).count() as u32
    }

    /// One-step probability `P(v, S) = |N(v) ∩ S| / deg(v)`, one integer
    /// division in floating point.
    pub fn transition_probability(&self, v: usize, s: &VertexSet) -> f64 {
        self.degree_in(v, s) as f64 / self.deg[v] as f64
    }

    /// `π(v) = deg(v) / D`.
    pub fn pi(&self, v: usize) -> f64 {
        self.deg[v] as f64 / self.degree_total as f64
    }

    /// Integer volume `Σ_{v∈S} deg(v)`.
    pub fn volume(&self, s: &VertexSet) -> u64 {
        s.iter().map(|v| self.deg[v] as u64).sum()
    }

    /// `π(S)` computed as an exact integer volume ratio.
    pub fn pi_of_set(&self, s: &VertexSet) -> f64 {
        self.volume(s) as f64 / self.degree_total as f64
    }

    /// Edge measure `Q(S, T) = Σ_{v∈S} π(v) P(v, T)`. Symmetric in `S, T` by
    /// reversibility, and `Q(V, T) = π(T)`.
    pub fn edge_measure_q(&self, s: &VertexSet, t: &VertexSet) -> f64 {
        self.q_h(s, t, |x| x)
    }

    /// `Q_h(S, T) = Σ_{v∈S} π(v) h(P(v, T))`, summed in ascending vertex
    /// order with compensated accumulation.
    pub fn q_h(&self, s: &VertexSet, t: &VertexSet, h: impl Fn(f64) -> f64) -> f64 {
        let d = self.degree_total as f64;
        let mut sum = NeumaierSum::new();
        for v in s.iter() {
            let pi_v = self.deg[v] as f64 / d;
            sum.add(pi_v * h(self.transition_probability(v, t)));
        }
        sum.value()
    }

    /// `R_h(S, T) = Σ_{v∈S} π(v)² h(P(v, T))`.
    pub fn r_h(&self, s: &VertexSet, t: &VertexSet, h: impl Fn(f64) -> f64) -> f64 {
        let d = self.degree_total as f64;
        let mut sum = NeumaierSum::new();
        for v in s.iter() {
            let pi_v = self.deg[v] as f64 / d;
            sum.add(pi_v * pi_v * h(self.transition_probability(v, t)));
        }
        sum.value()
    }

    pub fn degree_distribution(&self) -> DegreeDistribution {
        DegreeDistribution::new(self)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adj[v as usize] {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }
}

/// The stationary distribution `π` of the simple random walk together with
/// the norms entering the concentration bounds.
#[derive(Debug, Clone)]
pub struct DegreeDistribution {
    pi: Vec<f64>,
    norm2: f64,
    norm3: f64,
    pi2_total: f64,
}

impl DegreeDistribution {
    pub fn new(g: &Graph) -> Self {
        let d = g.degree_total as f64;
        let pi: Vec<f64> = g.deg.iter().map(|&dv| dv as f64 / d).collect();
        let mut s2 = NeumaierSum::new();
        let mut s3 = NeumaierSum::new();
        for &p in &pi {
            s2.add(p * p);
            s3.add(p * p * p);
        }
        let pi2_total = s2.value();
        Self {
            pi,
            norm2: pi2_total.sqrt(),
            norm3: s3.value().cbrt(),
            pi2_total,
        }
    }

    pub fn pi(&self, v: usize) -> f64 {
        self.pi[v]
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// `‖π‖₂`.
    pub fn norm2(&self) -> f64 {
        self.norm2
    }

    /// `‖π‖₃`.
    pub fn norm3(&self) -> f64 {
        self.norm3
    }

    /// `π₂(V) = Σ_v π(v)² = ‖π‖₂²`.
    pub fn pi2_total(&self) -> f64 {
        self.pi2_total
    }

    /// `π₂(S) = Σ_{v∈S} π(v)²`.
    pub fn pi2_of_set(&self, s: &VertexSet) -> f64 {
        let mut sum = NeumaierSum::new();
        for v in s.iter() {
            sum.add(self.pi[v] * self.pi[v]);
        }
        sum.value()
    }
}

#[derive(Debug, Error)]
pub enum EdgeListError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {0}: expected `u v`, got {1:?}")]
    Malformed(usize, String),
    #[error("edge list needs an explicit or inferable vertex count")]
    NoVertices,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Reads the text edge-list format: one `u v` pair per line, 0-indexed,
/// `u u` for a self-loop, `#` starts a comment. The vertex count is
/// `max index + 1`. Connectivity is validated by construction.
pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Graph, EdgeListError> {
    let file = std::fs::File::open(path)?;
    parse_edge_list(BufReader::new(file))
}

pub fn parse_edge_list(reader: impl BufRead) -> Result<Graph, EdgeListError> {
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut max_v: Option<u32> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut parts = body.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<u32, EdgeListError> {
            tok.and_then(|t| t.parse().ok())
                .ok_or_else(|| EdgeListError::Malformed(lineno + 1, line.clone()))
        };
        let u = parse(parts.next())?;
        let v = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(EdgeListError::Malformed(lineno + 1, line.clone()));
        }
        max_v = Some(max_v.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v));
    }
    let n = max_v.ok_or(EdgeListError::NoVertices)? as usize + 1;
    Ok(Graph::from_edges(n, &edges)?)
}

/// Writes the edge-list format read by [`read_edge_list`].
pub fn write_edge_list(g: &Graph, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "# {} vertices, {} edges", g.n(), g.edge_count())?;
    for v in 0..g.n() {
        for &u in g.neighbors(v) {
            if u as usize >= v {
                writeln!(w, "{} {}", v, u)?;
            }
        }
    }
    Ok(())
}
