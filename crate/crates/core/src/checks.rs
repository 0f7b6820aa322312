//! Machine checks of the deterministic spectral inequalities behind the
//! consensus analysis, evaluated exactly on concrete instances.
//!
//! Every check computes its left-hand side with the exact measure machinery
//! of [`crate::graph`] and compares against the closed-form bound. These are
//! theorems: a failing check on a valid instance is a build-breaking event.
//! The only tolerances admitted are the certified eigenvalue error
//! (propagated as `bound · (1 + 10·tol_λ)`, sound because every bound is
//! monotone in λ), the derivative-constant error reported by the profile,
//! and a global `1e-12` absolute float slack. No per-inequality fudge
//! factors.

use serde::Serialize;
use thiserror::Error;

use crate::bits::VertexSet;
use crate::dynamics::{exact_moments, Configuration};
use crate::generate::{generate, GeneratorSpec, GraphFamily};
use crate::graph::{DegreeDistribution, Graph};
use crate::kernels::{BetrayalKind, BetrayalSpec, UpdatingProfile};
use crate::numeric::NeumaierSum;
use crate::seed::{mix_seed, rng_from, GRAPH_STREAM};
use crate::spectral::{expansion_default, SpectralSummary};

#[derive(Debug, Error)]
pub enum ChecksError {
    #[error("check requires a symmetric betrayal function (f(x) + f(1-x) = 1)")]
    NotSymmetric,
}

/// Global tolerance policy: `pass ⟺ lhs ≤ bound·(1 + eps_num) + eps_abs`.
#[derive(Debug, Clone, Copy)]
pub struct TolerancePolicy {
    pub eps_num: f64,
    pub eps_abs: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            eps_num: 1e-6,
            eps_abs: 1e-12,
        }
    }
}

/// Outcome of one inequality check on one instance.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub lhs: f64,
    /// Right-hand side including the λ-uncertainty factor.
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
    pub instance: String,
}

fn finish(
    name: &'static str,
    lhs: f64,
    raw_bound: f64,
    summary: &SpectralSummary,
    pol: &TolerancePolicy,
    instance: String,
) -> CheckResult {
    let bound = raw_bound * (1.0 + 10.0 * summary.tol);
    CheckResult {
        name,
        lhs,
        bound,
        slack: bound - lhs,
        pass: lhs <= bound * (1.0 + pol.eps_num) + pol.eps_abs,
        instance,
    }
}

/// Expander mixing bound on the edge measure:
/// `|Q(S,T) - π(S)π(T)| ≤ λ √(π(S)π(T)(1-π(S))(1-π(T)))`.
pub fn check_mixing(
    g: &Graph,
    s: &VertexSet,
    t: &VertexSet,
    summary: &SpectralSummary,
    pol: &TolerancePolicy,
    instance: String,
) -> CheckResult {
    let pi_s = g.pi_of_set(s);
    let pi_t = g.pi_of_set(t);
    let lhs = (g.edge_measure_q(s, t) - pi_s * pi_t).abs();
    let raw = summary.lambda * (pi_s * pi_t * (1.0 - pi_s) * (1.0 - pi_t)).sqrt();
    finish("mixing", lhs, raw, summary, pol, instance)
}

/// Weighted variance of one-step hit probabilities:
/// `Σ_v π(v)(P(v,S) - π(S))² ≤ λ² π(S)(1-π(S))`.
pub fn check_transition_variance(
    g: &Graph,
    s: &VertexSet,
    summary: &SpectralSummary,
    pol: &TolerancePolicy,
    instance: String,
) -> CheckResult {
    let pi_s = g.pi_of_set(s);
    let mut sum = NeumaierSum::new();
    for v in 0..g.n() {
        let d = g.transition_probability(v, s) - pi_s;
        sum.add(g.pi(v) * d * d);
    }
    let raw = summary.lambda * summary.lambda * pi_s * (1.0 - pi_s);
    finish("transition-variance", sum.value(), raw, summary, pol, instance)
}

/// Second-order Taylor control of the kernel-weighted edge measure:
/// `|Q_h(S,T) - π(S)h(π(T)) - h'(π(T))(Q(S,T) - π(S)π(T))|
///    ≤ (K₂(h)/2) λ² π(T)(1-π(T))`.
pub fn check_qh_taylor(
    g: &Graph,
    s: &VertexSet,
    t: &VertexSet,
    h: &BetrayalSpec,
    profile: &UpdatingProfile,
    summary: &SpectralSummary,
    pol: &TolerancePolicy,
    instance: String,
) -> CheckResult {
    let pi_s = g.pi_of_set(s);
    let pi_t = g.pi_of_set(t);
    let q = g.edge_measure_q(s, t);
    let q_h = g.q_h(s, t, |x| h.eval(x));
    let lhs = (q_h - pi_s * h.eval(pi_t) - h.d1(pi_t) * (q - pi_s * pi_t)).abs();
    let k2 = profile.k2_f * (1.0 + profile.deriv_error);
    let raw = 0.5 * k2 * summary.lambda * summary.lambda * pi_t * (1.0 - pi_t);
    finish("qh-taylor", lhs, raw, summary, pol, instance)
}

/// First-order control of the squared-weight measure:
/// `|R_h(S,T) - π₂(S)h(π(T))| ≤ K₁(h) ‖π‖₃^{3/2} λ √(π(T)(1-π(T)))`.
pub fn check_rh_concentration(
    g: &Graph,
    dd: &DegreeDistribution,
    s: &VertexSet,
    t: &VertexSet,
    h: &BetrayalSpec,
    profile: &UpdatingProfile,
    summary: &SpectralSummary,
    pol: &TolerancePolicy,
    instance: String,
) -> CheckResult {
    let pi_t = g.pi_of_set(t);
    let lhs = (g.r_h(s, t, |x| h.eval(x)) - dd.pi2_of_set(s) * h.eval(pi_t)).abs();
    let k1 = profile.k1_f * (1.0 + profile.deriv_error);
    let raw =
        k1 * dd.norm3().powf(1.5) * summary.lambda * (pi_t * (1.0 - pi_t)).sqrt();
    finish("rh-concentration", lhs, raw, summary, pol, instance)
}

/// One-step mean against the updating function, general C² betrayal:
/// `|E[π(A')] - H_f(π(A))| ≤ K₂(f) λ (|2π(A)-1| + λ) π(A)(1-π(A))`.
pub fn check_mean_approximation(
    g: &Graph,
    spec: &BetrayalSpec,
    profile: &UpdatingProfile,
    cfg: &Configuration,
    summary: &SpectralSummary,
    pol: &TolerancePolicy,
    instance: String,
) -> CheckResult {
    let (mean, _) = exact_moments(g, spec, cfg);
    let alpha = cfg.pi_a();
    let lhs = (mean - spec.updating(alpha)).abs();
    let k2 = profile.k2_f * (1.0 + profile.deriv_error);
    let raw =
        k2 * summary.lambda * (cfg.delta().abs() + summary.lambda) * alpha * (1.0 - alpha);
    finish("mean-general", lhs, raw, summary, pol, instance)
}

/// One-step variance against its mean-field value, general C² betrayal:
/// `|Var[π(A')] - ‖π‖₂² g(1/2)|
///    ≤ K₁(g) (½‖π‖₂²|2π(A)-1| + 2‖π‖₃^{3/2} λ √(π(A)(1-π(A))))`.
pub fn check_variance_approximation(
    g: &Graph,
    dd: &DegreeDistribution,
    spec: &BetrayalSpec,
    profile: &UpdatingProfile,
    cfg: &Configuration,
    summary: &SpectralSummary,
    pol: &TolerancePolicy,
    instance: String,
) -> CheckResult {
    let (_, var) = exact_moments(g, spec, cfg);
    let alpha = cfg.pi_a();
    let lhs = (var - dd.pi2_total() * spec.variance_kernel(0.5)).abs();
    let k1g = profile.k1_g * (1.0 + profile.deriv_error);
    let raw = k1g
        * (0.5 * dd.pi2_total() * cfg.delta().abs()
            + 2.0 * dd.norm3().powf(1.5) * summary.lambda * (alpha * (1.0 - alpha)).sqrt());
    finish("variance-general", lhs, raw, summary, pol, instance)
}

/// Sharper mean bound for symmetric betrayal functions:
/// `|E[π(A')] - H_f(π(A))| ≤ (K₂(f)/2) λ² π(A)(1-π(A))`.
pub fn check_symmetric_mean(
    g: &Graph,
    spec: &BetrayalSpec,
    profile: &UpdatingProfile,
    cfg: &Configuration,
    summary: &SpectralSummary,
    pol: &TolerancePolicy,
    instance: String,
) -> Result<CheckResult, ChecksError> {
    if !spec.is_symmetric() {
        return Err(ChecksError::NotSymmetric);
    }
    let (mean, _) = exact_moments(g, spec, cfg);
    let alpha = cfg.pi_a();
    let lhs = (mean - spec.updating(alpha)).abs();
    let k2 = profile.k2_f * (1.0 + profile.deriv_error);
    let raw = 0.5 * k2 * summary.lambda * summary.lambda * alpha * (1.0 - alpha);
    Ok(finish("mean-symmetric", lhs, raw, summary, pol, instance))
}

/// Sharper variance bound for symmetric betrayal functions:
/// `|Var[π(A')] - ‖π‖₂² g(π(A))| ≤ K₁(g) λ √(π(A)(1-π(A))) ‖π‖₃^{3/2}`.
pub fn check_symmetric_variance(
    g: &Graph,
    dd: &DegreeDistribution,
    spec: &BetrayalSpec,
    profile: &UpdatingProfile,
    cfg: &Configuration,
    summary: &SpectralSummary,
    pol: &TolerancePolicy,
    instance: String,
) -> Result<CheckResult, ChecksError> {
    if !spec.is_symmetric() {
        return Err(ChecksError::NotSymmetric);
    }
    let (_, var) = exact_moments(g, spec, cfg);
    let alpha = cfg.pi_a();
    let lhs = (var - dd.pi2_total() * spec.variance_kernel(alpha)).abs();
    let k1g = profile.k1_g * (1.0 + profile.deriv_error);
    let raw = k1g * summary.lambda * (alpha * (1.0 - alpha)).sqrt() * dd.norm3().powf(1.5);
    Ok(finish("variance-symmetric", lhs, raw, summary, pol, instance))
}

/// The check corpora runnable from the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Mixing,
    QH,
    RH,
    Moments,
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mixing" => Ok(Suite::Mixing),
            "q_h" => Ok(Suite::QH),
            "r_h" => Ok(Suite::RH),
            "moments" => Ok(Suite::Moments),
            "all" => Ok(Suite::All),
            other => Err(format!("unknown suite {other:?}")),
        }
    }
}

/// Standing randomized corpus: seeded instances of each inequality.
///
/// * `mixing`: `G(256, 0.3)` with uniformly random `S`, `T`; also emits the
///   transition-variance rows.
/// * `q_h` / `r_h`: same graphs with kernels cycling through best-of-3,
///   best-of-5 and 3-careful.
/// * `moments`: `G(512, 0.2)` with kernels cycling through best-of-2,
///   best-of-3, 2-careful and best-of-5; the symmetric-form rows run for the
///   odd best-of-k instances, and the variance rows constrain `|δ| ≤ 0.5`.
pub fn run_suite(
    suite: Suite,
    instances: usize,
    master_seed: u64,
    pol: &TolerancePolicy,
) -> Vec<CheckResult> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Mixing | Suite::All) {
        mixing_suite(instances, master_seed, pol, &mut out);
    }
    if matches!(suite, Suite::QH | Suite::All) {
        kernel_measure_suite(instances, master_seed ^ 0x11, pol, false, &mut out);
    }
    if matches!(suite, Suite::RH | Suite::All) {
        kernel_measure_suite(instances, master_seed ^ 0x22, pol, true, &mut out);
    }
    if matches!(suite, Suite::Moments | Suite::All) {
        moments_suite(instances, master_seed ^ 0x33, pol, &mut out);
    }
    out
}

/// Graphs are shared between a few instances to keep eigensolves cheap.
const INSTANCES_PER_GRAPH: usize = 4;

fn corpus_graph(n: usize, p: f64, seed: u64) -> (Graph, DegreeDistribution, SpectralSummary) {
    let g = generate(&GeneratorSpec::new(GraphFamily::Gnp { p }, n, seed))
        .expect("corpus graph generation");
    let dd = g.degree_distribution();
    let summary = expansion_default(&g).expect("corpus graph expansion");
    (g, dd, summary)
}

fn random_set_with_bias_cap(g: &Graph, rng: &mut impl rand::Rng, cap: f64) -> VertexSet {
    loop {
        let s = VertexSet::random(g.n(), rng);
        let delta = 2.0 * g.pi_of_set(&s) - 1.0;
        if delta.abs() <= cap {
            return s;
        }
    }
}

fn mixing_suite(
    instances: usize,
    master_seed: u64,
    pol: &TolerancePolicy,
    out: &mut Vec<CheckResult>,
) {
    for i in 0..instances {
        let gi = (i / INSTANCES_PER_GRAPH) as u64;
        let gseed = mix_seed(master_seed, gi, GRAPH_STREAM);
        let (g, _, summary) = corpus_graph(256, 0.3, gseed);
        let mut rng = rng_from(mix_seed(master_seed, gi, i as u64));
        let s = VertexSet::random(g.n(), &mut rng);
        let t = VertexSet::random(g.n(), &mut rng);
        let inst = format!("gnp(256,0.3)#{gi} sets#{i}");
        out.push(check_mixing(&g, &s, &t, &summary, pol, inst.clone()));
        out.push(check_transition_variance(&g, &s, &summary, pol, inst));
    }
}

fn kernel_measure_suite(
    instances: usize,
    master_seed: u64,
    pol: &TolerancePolicy,
    squared_weights: bool,
    out: &mut Vec<CheckResult>,
) {
    let kernels = [
        BetrayalKind::BestOfK(3),
        BetrayalKind::BestOfK(5),
        BetrayalKind::KCareful(3),
    ];
    for i in 0..instances {
        let gi = (i / INSTANCES_PER_GRAPH) as u64;
        let gseed = mix_seed(master_seed, gi, GRAPH_STREAM);
        let (g, dd, summary) = corpus_graph(256, 0.3, gseed);
        let mut rng = rng_from(mix_seed(master_seed, gi, i as u64));
        let s = VertexSet::random(g.n(), &mut rng);
        let t = VertexSet::random(g.n(), &mut rng);
        let h = BetrayalSpec::new(kernels[i % kernels.len()].clone()).unwrap();
        let profile = h.derive_profile().unwrap();
        let inst = format!("gnp(256,0.3)#{gi} sets#{i} h={}", h.label());
        if squared_weights {
            out.push(check_rh_concentration(
                &g, &dd, &s, &t, &h, &profile, &summary, pol, inst,
            ));
        } else {
            out.push(check_qh_taylor(&g, &s, &t, &h, &profile, &summary, pol, inst));
        }
    }
}

fn moments_suite(
    instances: usize,
    master_seed: u64,
    pol: &TolerancePolicy,
    out: &mut Vec<CheckResult>,
) {
    let kernels = [
        BetrayalKind::BestOfK(2),
        BetrayalKind::BestOfK(3),
        BetrayalKind::KCareful(2),
        BetrayalKind::BestOfK(5),
    ];
    for i in 0..instances {
        let gi = (i / INSTANCES_PER_GRAPH) as u64;
        let gseed = mix_seed(master_seed, gi, GRAPH_STREAM);
        let (g, dd, summary) = corpus_graph(512, 0.2, gseed);
        let mut rng = rng_from(mix_seed(master_seed, gi, i as u64));
        let spec = BetrayalSpec::new(kernels[i % kernels.len()].clone()).unwrap();
        let profile = spec.derive_profile().unwrap();
        let a = random_set_with_bias_cap(&g, &mut rng, 0.5);
        let cfg = Configuration::new(&g, a);
        let inst = format!("gnp(512,0.2)#{gi} A#{i} f={}", spec.label());
        out.push(check_mean_approximation(
            &g, &spec, &profile, &cfg, &summary, pol, inst.clone(),
        ));
        out.push(check_variance_approximation(
            &g, &dd, &spec, &profile, &cfg, &summary, pol, inst.clone(),
        ));
        if spec.is_symmetric() {
            out.push(
                check_symmetric_mean(&g, &spec, &profile, &cfg, &summary, pol, inst.clone())
                    .unwrap(),
            );
            out.push(
                check_symmetric_variance(&g, &dd, &spec, &profile, &cfg, &summary, pol, inst)
                    .unwrap(),
            );
        }
    }
}
