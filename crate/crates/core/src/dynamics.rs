//! The synchronous voting dynamics: seeded steps, exact one-step moments,
//! full runs with consensus detection, and trajectory phase labels.
//!
//! One step draws one uniform variate per vertex, in ascending vertex order,
//! and flips vertex `v` out of its current side with probability
//! `f(P(v, other side))`; all vertices update simultaneously from the old
//! configuration (double-buffered). The fixed draw order makes runs
//! bit-reproducible given a seed and couples a run with the run started from
//! the complemented configuration.

use rand::Rng;
use serde::Serialize;

use crate::bits::VertexSet;
use crate::graph::{DegreeDistribution, Graph};
use crate::kernels::{BetrayalSpec, UpdatingProfile};
use crate::numeric::NeumaierSum;
use crate::seed::rng_from;
use crate::spectral::SpectralSummary;

/// Steps between full recounts of the incrementally maintained per-vertex
/// neighbour tallies.
const AUDIT_EVERY: u32 = 64;

/// An opinion configuration: the opinion-0 vertex set `A` with its exact
/// volume fraction `π(A)` and bias `δ(A) = 2π(A) - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    a: VertexSet,
    volume_a: u64,
    pi_a: f64,
    delta: f64,
}

impl Configuration {
    pub fn new(g: &Graph, a: VertexSet) -> Self {
        assert_eq!(a.universe(), g.n(), "set universe must match the graph");
        let volume_a = g.volume(&a);
        Self::from_volume(g, a, volume_a)
    }

    fn from_volume(g: &Graph, a: VertexSet, volume_a: u64) -> Self {
        let pi_a = volume_a as f64 / g.degree_total() as f64;
        Self {
            a,
            volume_a,
            pi_a,
            delta: 2.0 * pi_a - 1.0,
        }
    }

    pub fn empty(g: &Graph) -> Self {
        Self::new(g, VertexSet::empty(g.n()))
    }

    pub fn full(g: &Graph) -> Self {
        Self::new(g, VertexSet::full(g.n()))
    }

    /// The opinion-0 holders.
    pub fn opinion_zero(&self) -> &VertexSet {
        &self.a
    }

    pub fn pi_a(&self) -> f64 {
        self.pi_a
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn volume(&self) -> u64 {
        self.volume_a
    }

    pub fn is_consensus(&self) -> bool {
        self.a.is_empty() || self.a.is_full()
    }
}

/// Mutable simulation state: current membership, per-vertex count of
/// neighbours holding opinion 0, and the integer volume of `A`. The tallies
/// are maintained incrementally on flips and recounted every
/// [`AUDIT_EVERY`] steps.
struct Engine<'a> {
    g: &'a Graph,
    spec: &'a BetrayalSpec,
    members: VertexSet,
    next: VertexSet,
    deg_a: Vec<u32>,
    volume_a: u64,
    flips: Vec<u32>,
    steps_since_audit: u32,
}

impl<'a> Engine<'a> {
    fn new(g: &'a Graph, spec: &'a BetrayalSpec, a: VertexSet) -> Self {
        let mut deg_a = vec![0u32; g.n()];
        for v in a.iter() {
            for &w in g.neighbors(v) {
                deg_a[w as usize] += 1;
            }
        }
        let volume_a = g.volume(&a);
        Self {
            g,
            spec,
            next: a.clone(),
            members: a,
            deg_a,
            volume_a,
            flips: Vec::new(),
            steps_since_audit: 0,
        }
    }

    /// One synchronous round. Exactly `n` RNG draws, ascending vertex order.
    fn advance(&mut self, rng: &mut impl Rng) {
        let n = self.g.n();
        self.flips.clear();
        for v in 0..n {
            let in_a = self.members.contains(v);
            let deg = self.g.degree(v);
            let opposing = if in_a { deg - self.deg_a[v] } else { self.deg_a[v] };
            let p = self.spec.betray_prob(opposing, deg);
            let u: f64 = rng.gen();
            let defect = u < p;
            let now_in_a = in_a != defect;
            self.next.set(v, now_in_a);
            if now_in_a != in_a {
                self.flips.push(v as u32);
            }
        }
        for &v in &self.flips {
            let v = v as usize;
            if self.next.contains(v) {
                self.volume_a += self.g.degree(v) as u64;
                for &w in self.g.neighbors(v) {
                    self.deg_a[w as usize] += 1;
                }
            } else {
                self.volume_a -= self.g.degree(v) as u64;
                for &w in self.g.neighbors(v) {
                    self.deg_a[w as usize] -= 1;
                }
            }
        }
        std::mem::swap(&mut self.members, &mut self.next);
        self.steps_since_audit += 1;
        if self.steps_since_audit >= AUDIT_EVERY {
            self.audit();
            self.steps_since_audit = 0;
        }
    }

    /// Full recount of the incremental state. Counts are integers, so any
    /// mismatch is a bug, not drift.
    fn audit(&self) {
        assert_eq!(self.members.cardinality(), self.members.recount());
        assert_eq!(self.volume_a, self.g.volume(&self.members), "volume drift");
        let mut fresh = vec![0u32; self.g.n()];
        for v in self.members.iter() {
            for &w in self.g.neighbors(v) {
                fresh[w as usize] += 1;
            }
        }
        assert_eq!(self.deg_a, fresh, "neighbour tally drift");
    }

    fn configuration(&self) -> Configuration {
        Configuration::from_volume(self.g, self.members.clone(), self.volume_a)
    }
}

/// One synchronous update of the whole configuration. Consumes exactly
/// `g.n()` draws from `rng` in ascending vertex order.
pub fn step(
    g: &Graph,
    spec: &BetrayalSpec,
    cfg: &Configuration,
    rng: &mut impl Rng,
) -> Configuration {
    let mut engine = Engine::new(g, spec, cfg.a.clone());
    engine.advance(rng);
    engine.configuration()
}

/// Closed-form mean and variance of `π(A')` for one step from `cfg`:
///
/// ```text
/// E[π(A')]   = π(A) - Σ_{v∈A} π(v) f(P(v,B)) + Σ_{v∈B} π(v) f(P(v,A))
/// Var[π(A')] = Σ_{v∈A} π(v)² g(P(v,B)) + Σ_{v∈B} π(v)² g(P(v,A))
/// ```
///
/// with `g = f(1-f)`; deterministic, no sampling. Probabilities come from
/// integer neighbour counts, so majority ties are exact.
pub fn exact_moments(g: &Graph, spec: &BetrayalSpec, cfg: &Configuration) -> (f64, f64) {
    let d = g.degree_total() as f64;
    let a = cfg.opinion_zero();
    let mut mean = NeumaierSum::new();
    let mut var = NeumaierSum::new();
    mean.add(cfg.pi_a());
    for v in 0..g.n() {
        let deg = g.degree(v);
        let pi_v = deg as f64 / d;
        let deg_a = g.degree_in(v, a);
        let opposing = if a.contains(v) { deg - deg_a } else { deg_a };
        let p = spec.betray_prob(opposing, deg);
        if a.contains(v) {
            mean.add(-pi_v * p);
        } else {
            mean.add(pi_v * p);
        }
        var.add(pi_v * pi_v * p * (1.0 - p));
    }
    (mean.value(), var.value())
}

/// Trajectory phase labels, following the bias regimes of the consensus
/// analysis: near-balanced noise (I), exponential bias growth (II),
/// constant-step traversal (III), contraction to consensus (IV), and the
/// doubly-exponential endgame for `H_f'(0) = 0` (V).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    I,
    II,
    III,
    IV,
    V,
    Consensus,
    Other,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Phase::I => "I",
            Phase::II => "II",
            Phase::III => "III",
            Phase::IV => "IV",
            Phase::V => "V",
            Phase::Consensus => "consensus",
            Phase::Other => "other",
        };
        f.write_str(s)
    }
}

/// Everything needed to label a bias value with a phase. The free constants
/// are configuration values: `c1` scales the Phase-I ceiling
/// `c1·ln(n)/√n`, and `[c2, c3]` is the Phase-III minority band (defaults
/// `c2 = eps_h/K`, `c3 = 0.45`). Natural logarithms throughout.
#[derive(Debug, Clone, Copy)]
pub struct PhaseContext {
    pub profile: UpdatingProfile,
    pub lambda: f64,
    pub norm2: f64,
    pub n: usize,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl PhaseContext {
    pub fn new(
        profile: UpdatingProfile,
        summary: &SpectralSummary,
        dd: &DegreeDistribution,
        n: usize,
    ) -> Self {
        Self {
            profile,
            lambda: summary.lambda,
            norm2: dd.norm2(),
            n,
            c1: 1.0,
            c2: profile.eps_h / profile.k_f,
            c3: 0.45,
        }
    }
}

/// Deterministic phase label from the bias. Overlapping ranges resolve by
/// priority IV > V > III > II > I (smaller minorities win); anything outside
/// every band is `Other`.
pub fn classify_phase(delta: f64, ctx: &PhaseContext) -> Phase {
    let ad = delta.abs();
    if ad >= 1.0 {
        return Phase::Consensus;
    }
    let p = &ctx.profile;
    let minority = (1.0 - ad) / 2.0;
    if p.k_f > 0.0 {
        if p.eps_c > 0.0 && minority <= p.eps_c / (8.0 * p.k_f) {
            return Phase::IV;
        }
        // phase V needs H_f'(0) = 0, i.e. eps_c = 1
        if p.eps_c >= 1.0 - 1e-9 && minority <= 1.0 / (7.0 * p.k_f) {
            return Phase::V;
        }
    }
    if minority >= ctx.c2 && minority <= ctx.c3 {
        return Phase::III;
    }
    if p.eps_h > 0.0 && p.k_f > 0.0 {
        let floor = 2.0 * p.k_f.max(8.0) / p.eps_h
            * (ctx.lambda * ctx.lambda).max(ctx.norm2 * (ctx.n as f64).ln().sqrt());
        if ad >= floor && ad <= p.eps_h / p.k_f {
            return Phase::II;
        }
    }
    let n = ctx.n as f64;
    if ad <= ctx.c1 * n.ln() / n.sqrt() {
        return Phase::I;
    }
    Phase::Other
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Terminal {
    /// Everyone holds opinion 0 (`A = V`).
    #[serde(rename = "consensus-0")]
    Consensus0,
    /// Everyone holds opinion 1 (`A = ∅`).
    #[serde(rename = "consensus-1")]
    Consensus1,
    #[serde(rename = "timeout")]
    Timeout,
}

impl Terminal {
    pub fn is_consensus(&self) -> bool {
        !matches!(self, Terminal::Timeout)
    }
}

impl std::fmt::Display for Terminal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Terminal::Consensus0 => "consensus-0",
            Terminal::Consensus1 => "consensus-1",
            Terminal::Timeout => "timeout",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrajectoryStep {
    pub t: u32,
    pub pi_a: f64,
    pub delta: f64,
    pub phase: Phase,
}

/// Time series of one run, including the initial configuration at `t = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub terminal: Terminal,
    /// First step at which the configuration was `∅` or `V`; absent on
    /// timeout.
    pub t_cons: Option<u32>,
    pub seed: u64,
}

impl Trajectory {
    pub fn final_step(&self) -> &TrajectoryStep {
        self.steps.last().expect("trajectory records t = 0")
    }
}

/// Default step budget `50·⌈log₂ n⌉`: generous headroom over the
/// logarithmic consensus times so pathologies surface as timeouts.
pub fn default_max_steps(n: usize) -> u32 {
    50 * (n.max(2) as f64).log2().ceil() as u32
}

/// Runs the voting process from `init` until consensus or `max_steps`,
/// recording `(t, π(A_t), δ(A_t), phase)` per step. Bit-reproducible given
/// the seed.
pub fn run(
    g: &Graph,
    spec: &BetrayalSpec,
    init: &Configuration,
    max_steps: u32,
    seed: u64,
    phase_ctx: Option<&PhaseContext>,
) -> Trajectory {
    let mut rng = rng_from(seed);
    let mut engine = Engine::new(g, spec, init.opinion_zero().clone());
    let label = |volume: u64, delta: f64| -> Phase {
        if volume == 0 || volume == g.degree_total() {
            Phase::Consensus
        } else {
            phase_ctx.map_or(Phase::Other, |ctx| classify_phase(delta, ctx))
        }
    };
    let mut steps = Vec::new();
    steps.push(TrajectoryStep {
        t: 0,
        pi_a: init.pi_a(),
        delta: init.delta(),
        phase: label(init.volume(), init.delta()),
    });
    if init.is_consensus() {
        let terminal = if init.opinion_zero().is_full() {
            Terminal::Consensus0
        } else {
            Terminal::Consensus1
        };
        return Trajectory {
            steps,
            terminal,
            t_cons: Some(0),
            seed,
        };
    }
    for t in 1..=max_steps {
        engine.advance(&mut rng);
        let cardinality = engine.members.cardinality();
        let pi_a = engine.volume_a as f64 / g.degree_total() as f64;
        let delta = 2.0 * pi_a - 1.0;
        steps.push(TrajectoryStep {
            t,
            pi_a,
            delta,
            phase: label(engine.volume_a, delta),
        });
        if cardinality == 0 || cardinality == g.n() {
            let terminal = if cardinality == 0 {
                Terminal::Consensus1
            } else {
                Terminal::Consensus0
            };
            return Trajectory {
                steps,
                terminal,
                t_cons: Some(t),
                seed,
            };
        }
    }
    Trajectory {
        steps,
        terminal: Terminal::Timeout,
        t_cons: None,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GeneratorSpec, GraphFamily};

    fn triangle() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn complete_self_loop(n: usize) -> Graph {
        generate(&GeneratorSpec::new(GraphFamily::CompleteSelfLoop, n, 0)).unwrap()
    }

    fn bok(k: u32) -> BetrayalSpec {
        BetrayalSpec::best_of_k(k).unwrap()
    }

    #[test]
    fn consensus_states_are_absorbing() {
        let g = complete_self_loop(24);
        let spec = bok(2);
        let mut rng = rng_from(5);
        let empty = Configuration::empty(&g);
        let full = Configuration::full(&g);
        for _ in 0..1000 {
            assert!(step(&g, &spec, &empty, &mut rng).opinion_zero().is_empty());
            assert!(step(&g, &spec, &full, &mut rng).opinion_zero().is_full());
        }
    }

    #[test]
    fn mean_field_step_matches_updating_function() {
        // K_200 with loops, best-of-two, |A| = 150: E[pi(A')] = H_f(0.75)
        let g = complete_self_loop(200);
        let spec = bok(2);
        let a = VertexSet::from_indices(200, &(0..150).collect::<Vec<_>>());
        let cfg = Configuration::new(&g, a);
        let (mean, var) = exact_moments(&g, &spec, &cfg);
        let h = spec.updating(0.75);
        assert!((h - 0.84375).abs() < 1e-15);
        assert!((mean - h).abs() < 1e-12, "exact mean {mean} vs H {h}");

        let trials = 10_000;
        let mut rng = rng_from(11);
        let mut acc = 0.0;
        for _ in 0..trials {
            acc += step(&g, &spec, &cfg, &mut rng).pi_a();
        }
        let mc = acc / trials as f64;
        let sigma_mean = (var / trials as f64).sqrt();
        assert!(
            (mc - mean).abs() <= 4.0 * sigma_mean,
            "mc {mc} vs exact {mean} (sigma {sigma_mean})"
        );
    }

    #[test]
    fn exact_moments_hand_values() {
        let g = triangle();
        let spec = bok(2);
        // A = {0}: mean = 1/3 - (1/3) f(1) + (2/3) f(1/2) = 1/6
        let cfg = Configuration::new(&g, VertexSet::from_indices(3, &[0]));
        let (mean, var) = exact_moments(&g, &spec, &cfg);
        assert!((mean - 1.0 / 6.0).abs() < 1e-15);
        assert!(var > 0.0);

        let empty = Configuration::empty(&g);
        assert_eq!(exact_moments(&g, &spec, &empty), (0.0, 0.0));
    }

    #[test]
    fn monte_carlo_agrees_with_exact_moments() {
        let mut rng = rng_from(404);
        for inst in 0..4 {
            let n = 16 + 8 * inst;
            let g = generate(&GeneratorSpec::new(
                GraphFamily::Gnp { p: 0.4 },
                n,
                inst as u64,
            ))
            .unwrap();
            let spec = match inst % 4 {
                0 => bok(2),
                1 => bok(3),
                2 => BetrayalSpec::k_careful(2).unwrap(),
                _ => BetrayalSpec::majority(),
            };
            let a = VertexSet::random(g.n(), &mut rng);
            let cfg = Configuration::new(&g, a);
            let (mean, var) = exact_moments(&g, &spec, &cfg);
            let trials = 20_000;
            let mut acc = 0.0;
            for _ in 0..trials {
                acc += step(&g, &spec, &cfg, &mut rng).pi_a();
            }
            let mc = acc / trials as f64;
            let sigma_mean = (var / trials as f64).sqrt().max(1e-12);
            assert!(
                (mc - mean).abs() <= 5.0 * sigma_mean,
                "{}: mc {mc} vs exact {mean}",
                spec.label()
            );
        }
    }

    #[test]
    fn complement_coupling() {
        // same seed stream from A and from V \ A gives complements forever
        let g = generate(&GeneratorSpec::new(GraphFamily::Gnp { p: 0.3 }, 40, 8)).unwrap();
        for spec in [bok(3), bok(5)] {
            let mut rng_a = rng_from(99);
            let mut rng_b = rng_from(99);
            let a0 = VertexSet::from_indices(40, &(0..17).collect::<Vec<_>>());
            let mut ca = Configuration::new(&g, a0.clone());
            let mut cb = Configuration::new(&g, a0.complement());
            for _ in 0..30 {
                ca = step(&g, &spec, &ca, &mut rng_a);
                cb = step(&g, &spec, &cb, &mut rng_b);
                assert_eq!(ca.opinion_zero().complement(), *cb.opinion_zero());
            }
        }
    }

    #[test]
    fn law_depends_only_on_cardinality_on_mean_field_graph() {
        // two equal-size sets on K_n-with-loops: |A'| distributions agree
        // (two-sample Kolmogorov-Smirnov at significance 1e-3)
        let n = 60;
        let g = complete_self_loop(n);
        let spec = bok(2);
        let a1 = VertexSet::from_indices(n, &(0..25).collect::<Vec<_>>());
        let a2 = VertexSet::from_indices(n, &(35..60).collect::<Vec<_>>());
        let trials = 10_000;
        let sample = |a: &VertexSet, seed: u64| -> Vec<f64> {
            let mut rng = rng_from(seed);
            let cfg = Configuration::new(&g, a.clone());
            (0..trials)
                .map(|_| step(&g, &spec, &cfg, &mut rng).opinion_zero().cardinality() as f64)
                .collect()
        };
        let mut xs = sample(&a1, 1);
        let mut ys = sample(&a2, 2);
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let d = ks_statistic(&xs, &ys);
        // critical value at alpha = 1e-3
        let c = (-(0.0005f64).ln() / 2.0).sqrt();
        let crit = c * ((2 * trials) as f64 / (trials * trials) as f64).sqrt();
        assert!(d <= crit, "KS statistic {d} exceeds critical value {crit}");
    }

    /// Two-sample KS statistic for sorted samples; both pointers advance
    /// through a tied value before the gap is measured.
    fn ks_statistic(xs: &[f64], ys: &[f64]) -> f64 {
        let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
        while i < xs.len() && j < ys.len() {
            let v = xs[i].min(ys[j]);
            while i < xs.len() && xs[i] == v {
                i += 1;
            }
            while j < ys.len() && ys[j] == v {
                j += 1;
            }
            let fx = i as f64 / xs.len() as f64;
            let fy = j as f64 / ys.len() as f64;
            d = d.max((fx - fy).abs());
        }
        d
    }

    #[test]
    fn run_from_consensus_is_instant() {
        let g = triangle();
        let spec = bok(2);
        for (cfg, terminal) in [
            (Configuration::empty(&g), Terminal::Consensus1),
            (Configuration::full(&g), Terminal::Consensus0),
        ] {
            let traj = run(&g, &spec, &cfg, 100, 7, None);
            assert_eq!(traj.t_cons, Some(0));
            assert_eq!(traj.terminal, terminal);
            assert_eq!(traj.steps.len(), 1);
            assert_eq!(traj.final_step().phase, Phase::Consensus);
        }
    }

    #[test]
    fn run_is_bit_reproducible() {
        let g = generate(&GeneratorSpec::new(GraphFamily::Gnp { p: 0.25 }, 64, 3)).unwrap();
        let spec = bok(3);
        let a = VertexSet::from_indices(64, &(0..32).collect::<Vec<_>>());
        let cfg = Configuration::new(&g, a);
        let t1 = run(&g, &spec, &cfg, default_max_steps(64), 42, None);
        let t2 = run(&g, &spec, &cfg, default_max_steps(64), 42, None);
        assert_eq!(t1.t_cons, t2.t_cons);
        assert_eq!(t1.steps.len(), t2.steps.len());
        for (a, b) in t1.steps.iter().zip(&t2.steps) {
            assert_eq!(a.pi_a.to_bits(), b.pi_a.to_bits());
        }
        // and a different seed diverges
        let t3 = run(&g, &spec, &cfg, default_max_steps(64), 43, None);
        assert!(
            t1.t_cons != t3.t_cons
                || t1.steps.iter().zip(&t3.steps).any(|(a, b)| a.pi_a != b.pi_a)
        );
    }

    #[test]
    fn run_matches_manual_stepping() {
        let g = generate(&GeneratorSpec::new(GraphFamily::Gnp { p: 0.3 }, 48, 17)).unwrap();
        let spec = bok(2);
        let cfg0 = Configuration::new(
            &g,
            VertexSet::from_indices(48, &(0..20).collect::<Vec<_>>()),
        );
        let traj = run(&g, &spec, &cfg0, 200, 77, None);
        let mut rng = rng_from(77);
        let mut cfg = cfg0;
        for s in traj.steps.iter().skip(1) {
            cfg = step(&g, &spec, &cfg, &mut rng);
            assert_eq!(cfg.pi_a().to_bits(), s.pi_a.to_bits(), "t = {}", s.t);
        }
    }

    #[test]
    fn long_runs_survive_the_audit() {
        // run past AUDIT_EVERY steps so the recount fires; pull voting on a
        // small graph wanders for a long time
        let g = generate(&GeneratorSpec::new(GraphFamily::Gnp { p: 0.5 }, 16, 2)).unwrap();
        let spec = BetrayalSpec::pull();
        let cfg = Configuration::new(&g, VertexSet::from_indices(16, &[0, 3, 5, 7, 9, 11]));
        let _ = run(&g, &spec, &cfg, 500, 13, None);
    }

    fn test_context(lambda: f64, n: usize) -> PhaseContext {
        let profile = bok(3).derive_profile().unwrap();
        PhaseContext {
            profile,
            lambda,
            norm2: 1.0 / (n as f64).sqrt(),
            n,
            c1: 1.0,
            c2: profile.eps_h / profile.k_f,
            c3: 0.45,
        }
    }

    #[test]
    fn phase_labels() {
        let ctx = test_context(0.05, 4096);
        assert_eq!(classify_phase(0.0, &ctx), Phase::I);
        assert_eq!(classify_phase(1.0, &ctx), Phase::Consensus);
        assert_eq!(classify_phase(-1.0, &ctx), Phase::Consensus);
        // eps_h/K = 1/12 < 0.3 and minority 0.35 in [c2, 0.45]: phase III
        assert_eq!(classify_phase(0.3, &ctx), Phase::III);
        // tiny minority: IV beats V by priority
        assert_eq!(classify_phase(0.99, &ctx), Phase::IV);
        // minority 0.022 between eps_c/8K = 1/48 and 1/(7K) = 1/42: phase V
        assert_eq!(classify_phase(1.0 - 2.0 * 0.022, &ctx), Phase::V);
        // gap between the III band and the IV/V bands
        assert_eq!(classify_phase(0.9, &ctx), Phase::Other);
        // the growth band floor (2 max(K,8)/eps_h) max(lambda^2, ||pi||_2
        // sqrt(ln n)) only drops below eps_h/K for large n
        let ctx_big = test_context(0.01, 1 << 22);
        assert_eq!(classify_phase(0.07, &ctx_big), Phase::II);
    }

    #[test]
    fn default_step_budget() {
        assert_eq!(default_max_steps(1024), 500);
        assert_eq!(default_max_steps(1 << 13), 650);
        assert!(default_max_steps(1) >= 50);
    }
}
