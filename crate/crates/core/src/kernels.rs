//! Betrayal functions, their derived updating functions, and the
//! quasi-majority verifier.
//!
//! A betrayal function `f` maps the opposing-opinion neighbourhood fraction
//! to a defection probability; it must satisfy `f(0) = 0` and map `[0,1]`
//! into `[0,1]`. The derived updating function
//!
//! ```text
//! H_f(x) = x (1 - f(1-x)) + (1-x) f(x)
//! ```
//!
//! is the expected next-round opinion mass in the mean-field (complete graph
//! with self-loops) picture. `f` is *quasi-majority* when five drift
//! conditions hold: `f` is C², `0 < f(1/2) < 1`, `H_f` sits below the
//! diagonal on `(0, 1/2)`, `H_f'(1/2) > 1`, and `H_f'(0) < 1`. The verifier
//! here certifies those conditions numerically on a dense grid — it is a
//! checker with stated tolerances, not a proof.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binom::{binomial_tail, ln_choose};
use crate::numeric::grid_max;

/// Grid density used by all maximisation and condition checks.
const GRID: usize = 10_001;
/// Finite-difference step for custom kernels.
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("betrayal function must be C² for this operation")]
    NotSmooth,
    #[error("invalid betrayal function: {0}")]
    InvalidSpec(String),
}

/// Built-in betrayal function families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetrayalKind {
    /// `f(x) = x`: adopt one random neighbour's opinion.
    Pull,
    /// Sample k neighbours with replacement, adopt a `⌊k/2⌋+1` majority.
    BestOfK(u32),
    /// Adopt only if all k samples agree: `f(x) = x^k`.
    KCareful(u32),
    /// Deterministic local majority with a fair coin on exact ties.
    Majority,
    /// Run the inner process with probability `rho`, else do nothing:
    /// betrayal function `rho · f`.
    Lazy { rho: f64, inner: Box<BetrayalKind> },
}

impl BetrayalKind {
    /// Neighbour samples drawn per update, where that is meaningful.
    pub fn sample_count(&self) -> Option<u32> {
        match self {
            BetrayalKind::BestOfK(k) | BetrayalKind::KCareful(k) => Some(*k),
            BetrayalKind::Lazy { inner, .. } => inner.sample_count(),
            _ => None,
        }
    }
}

impl fmt::Display for BetrayalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetrayalKind::Pull => write!(f, "pull"),
            BetrayalKind::BestOfK(k) => write!(f, "best-of-{k}"),
            BetrayalKind::KCareful(k) => write!(f, "{k}-careful"),
            BetrayalKind::Majority => write!(f, "majority"),
            BetrayalKind::Lazy { rho, inner } => write!(f, "{rho}-lazy {inner}"),
        }
    }
}

#[derive(Clone)]
enum Evaluator {
    Builtin(BetrayalKind),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A betrayal function with evaluators for `f`, `f'`, `f''` (analytic for
/// the built-in families, finite differences for custom functions).
#[derive(Clone)]
pub struct BetrayalSpec {
    eval: Evaluator,
    label: String,
    smooth: bool,
}

impl fmt::Debug for BetrayalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BetrayalSpec({})", self.label)
    }
}

impl BetrayalSpec {
    pub fn new(kind: BetrayalKind) -> Result<Self, KernelError> {
        validate_kind(&kind)?;
        let smooth = kind_is_smooth(&kind);
        Ok(Self {
            label: kind.to_string(),
            eval: Evaluator::Builtin(kind),
            smooth,
        })
    }

    pub fn pull() -> Self {
        Self::new(BetrayalKind::Pull).unwrap()
    }

    pub fn best_of_k(k: u32) -> Result<Self, KernelError> {
        Self::new(BetrayalKind::BestOfK(k))
    }

    pub fn k_careful(k: u32) -> Result<Self, KernelError> {
        Self::new(BetrayalKind::KCareful(k))
    }

    pub fn majority() -> Self {
        Self::new(BetrayalKind::Majority).unwrap()
    }

    pub fn lazy(rho: f64, inner: BetrayalKind) -> Result<Self, KernelError> {
        Self::new(BetrayalKind::Lazy {
            rho,
            inner: Box::new(inner),
        })
    }

    /// Wraps an arbitrary evaluator. The function is validated on a grid:
    /// `f(0) = 0` and `f([0,1]) ⊆ [0,1]` (slack 1e-9). Derivatives come
    /// from finite differences with step 1e-5; set `smooth = false` if the
    /// function is not C² to keep derivative-based operations honest.
    pub fn custom(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        smooth: bool,
    ) -> Result<Self, KernelError> {
        let spec = Self {
            eval: Evaluator::Custom(Arc::new(f)),
            label: label.into(),
            smooth,
        };
        spec.validate_range()?;
        Ok(spec)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> Option<&BetrayalKind> {
        match &self.eval {
            Evaluator::Builtin(k) => Some(k),
            Evaluator::Custom(_) => None,
        }
    }

    /// Whether `f` is C² (false for majority; caller-declared for custom).
    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    /// `f(x) + f(1-x) = 1` on a grid (within 1e-10).
    pub fn is_symmetric(&self) -> bool {
        (0..=1000).all(|i| {
            let x = i as f64 / 1000.0;
            (self.eval(x) + self.eval(1.0 - x) - 1.0).abs() <= 1e-10
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.eval {
            Evaluator::Builtin(kind) => eval_kind(kind, x),
            Evaluator::Custom(f) => f(x),
        }
    }

    /// `f'` — analytic for built-ins, central differences for custom.
    pub fn d1(&self, x: f64) -> f64 {
        match &self.eval {
            Evaluator::Builtin(kind) => d1_kind(kind, x),
            Evaluator::Custom(f) => fd_d1(f.as_ref(), x),
        }
    }

    /// `f''`.
    pub fn d2(&self, x: f64) -> f64 {
        match &self.eval {
            Evaluator::Builtin(kind) => d2_kind(kind, x),
            Evaluator::Custom(f) => fd_d2(f.as_ref(), x),
        }
    }

    /// Defection probability from the exact neighbourhood counts. For
    /// majority the tie `2·count = deg` is decided in integers; everything
    /// else evaluates `f(count/deg)`.
    pub fn betray_prob(&self, count: u32, deg: u32) -> f64 {
        match &self.eval {
            Evaluator::Builtin(kind) => prob_from_counts(kind, count, deg),
            Evaluator::Custom(f) => f(count as f64 / deg as f64),
        }
    }

    /// Updating function `H_f(x) = x(1 - f(1-x)) + (1-x) f(x)`.
    pub fn updating(&self, x: f64) -> f64 {
        x * (1.0 - self.eval(1.0 - x)) + (1.0 - x) * self.eval(x)
    }

    /// `H_f'`.
    pub fn updating_d1(&self, x: f64) -> f64 {
        1.0 - self.eval(1.0 - x) + x * self.d1(1.0 - x) - self.eval(x)
            + (1.0 - x) * self.d1(x)
    }

    /// `H_f''`.
    pub fn updating_d2(&self, x: f64) -> f64 {
        2.0 * self.d1(1.0 - x) - 2.0 * self.d1(x) - x * self.d2(1.0 - x)
            + (1.0 - x) * self.d2(x)
    }

    /// `g(x) = f(x)(1 - f(x))`, the per-vertex defection variance kernel.
    pub fn variance_kernel(&self, x: f64) -> f64 {
        let v = self.eval(x);
        v * (1.0 - v)
    }

    /// `g'(x) = f'(x)(1 - 2 f(x))`.
    pub fn variance_kernel_d1(&self, x: f64) -> f64 {
        self.d1(x) * (1.0 - 2.0 * self.eval(x))
    }

    /// Derives the drift constants. Fails with [`KernelError::NotSmooth`]
    /// when `f` is not C² (majority), since every field leans on `f''`.
    pub fn derive_profile(&self) -> Result<UpdatingProfile, KernelError> {
        if !self.smooth {
            return Err(KernelError::NotSmooth);
        }
        let k1_f = grid_max(|x| self.d1(x).abs(), 0.0, 1.0, GRID).0;
        let k2_f = grid_max(|x| self.d2(x).abs(), 0.0, 1.0, GRID).0;
        let k1_g = grid_max(|x| self.variance_kernel_d1(x).abs(), 0.0, 1.0, GRID).0;
        let k2_h = grid_max(|x| self.updating_d2(x).abs(), 0.0, 1.0, GRID).0;
        let deriv_error = match &self.eval {
            Evaluator::Builtin(_) => 1e-9,
            Evaluator::Custom(_) => 1e-4,
        };
        Ok(UpdatingProfile {
            eps_h: self.updating_d1(0.5) - 1.0,
            eps_c: 1.0 - self.updating_d1(0.0),
            k1_f,
            k2_f,
            k1_g,
            k2_h,
            k_f: k2_f.max(k2_h),
            deriv_error,
        })
    }

    /// Verdicts for the five quasi-majority conditions plus a separately
    /// reported surjectivity probe. Always produces a report.
    pub fn quasi_majority_check(&self) -> QuasiMajorityReport {
        let smooth = ConditionReport {
            pass: self.smooth,
            value: if self.smooth { 1.0 } else { 0.0 },
            note: "f is twice continuously differentiable".into(),
        };
        let f_half = self.eval(0.5);
        let interior_half = ConditionReport {
            pass: f_half > 0.0 && f_half < 1.0,
            value: f_half,
            note: "0 < f(1/2) < 1".into(),
        };
        // max of H(x) - x on the open interval (0, 1/2); the margin makes
        // this a verifier for H(x) <= x, so pull sits exactly on the edge
        // and fails only the slope condition.
        let mut worst = f64::NEG_INFINITY;
        for i in 1..(GRID - 1) / 2 {
            let x = i as f64 / (GRID - 1) as f64;
            worst = worst.max(self.updating(x) - x);
        }
        let below_diagonal = ConditionReport {
            pass: worst <= 1e-9,
            value: worst,
            note: "max of H_f(x) - x on (0, 1/2)".into(),
        };
        // the strict inequalities get asymmetric margins: the centre slope
        // must clear 1 on its own (it is the drift engine, and boundary
        // cases like pull sit exactly at 1), while the origin slope passes
        // within the 1e-9 verifier margin like the diagonal condition
        let (slope_center, slope_origin) = if self.smooth {
            let hc = self.updating_d1(0.5);
            let ho = self.updating_d1(0.0);
            (
                ConditionReport {
                    pass: hc > 1.0,
                    value: hc,
                    note: "H_f'(1/2) > 1".into(),
                },
                ConditionReport {
                    pass: ho < 1.0 + 1e-9,
                    value: ho,
                    note: "H_f'(0) < 1 (margin 1e-9)".into(),
                },
            )
        } else {
            let note = "unavailable: requires a C² betrayal function";
            (
                ConditionReport {
                    pass: false,
                    value: f64::NAN,
                    note: note.into(),
                },
                ConditionReport {
                    pass: false,
                    value: f64::NAN,
                    note: note.into(),
                },
            )
        };
        let observed_max = grid_max(|x| self.eval(x), 0.0, 1.0, GRID).0;
        let surjective = ConditionReport {
            pass: observed_max >= 1.0 - 1e-9,
            value: observed_max,
            note: "observed max of f; 1 required for f([0,1]) = [0,1]".into(),
        };
        let quasi_majority = smooth.pass
            && interior_half.pass
            && below_diagonal.pass
            && slope_center.pass
            && slope_origin.pass;
        QuasiMajorityReport {
            label: self.label.clone(),
            smooth,
            interior_half,
            below_diagonal,
            slope_center,
            slope_origin,
            surjective,
            quasi_majority,
        }
    }

    fn validate_range(&self) -> Result<(), KernelError> {
        let f0 = self.eval(0.0);
        if f0.abs() > 1e-12 {
            return Err(KernelError::InvalidSpec(format!(
                "f(0) must be 0, got {f0}"
            )));
        }
        for i in 0..GRID {
            let x = i as f64 / (GRID - 1) as f64;
            let v = self.eval(x);
            if !(-1e-9..=1.0 + 1e-9).contains(&v) {
                return Err(KernelError::InvalidSpec(format!(
                    "f({x}) = {v} escapes [0,1]"
                )));
            }
        }
        Ok(())
    }
}

/// Drift constants of an updating function.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UpdatingProfile {
    /// `H_f'(1/2) - 1`: excess slope at the balanced point.
    pub eps_h: f64,
    /// `1 - H_f'(0)`: contraction rate at consensus.
    pub eps_c: f64,
    /// `max |f'|` on `[0,1]`.
    pub k1_f: f64,
    /// `max |f''|`.
    pub k2_f: f64,
    /// `max |g'|` for `g = f(1-f)`.
    pub k1_g: f64,
    /// `max |H_f''|`.
    pub k2_h: f64,
    /// `max{K₂(f), K₂(H_f)}`.
    pub k_f: f64,
    /// Estimated relative error of the grid/finite-difference constants;
    /// consumers inflate the constants by this before use.
    pub deriv_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub pass: bool,
    /// Witness quantity behind the verdict (NaN when unavailable).
    pub value: f64,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasiMajorityReport {
    pub label: String,
    pub smooth: ConditionReport,
    pub interior_half: ConditionReport,
    pub below_diagonal: ConditionReport,
    pub slope_center: ConditionReport,
    pub slope_origin: ConditionReport,
    /// Reported for information; not part of the verdict (the dynamics only
    /// use `f([0,1]) ⊆ [0,1]`).
    pub surjective: ConditionReport,
    pub quasi_majority: bool,
}

impl QuasiMajorityReport {
    /// The five conditions in order.
    pub fn conditions(&self) -> [&ConditionReport; 5] {
        [
            &self.smooth,
            &self.interior_half,
            &self.below_diagonal,
            &self.slope_center,
            &self.slope_origin,
        ]
    }
}

fn validate_kind(kind: &BetrayalKind) -> Result<(), KernelError> {
    match kind {
        BetrayalKind::BestOfK(k) | BetrayalKind::KCareful(k) => {
            if *k == 0 {
                return Err(KernelError::InvalidSpec("k must be at least 1".into()));
            }
        }
        BetrayalKind::Lazy { rho, inner } => {
            if !(*rho > 0.0 && *rho <= 1.0) {
                return Err(KernelError::InvalidSpec(format!(
                    "lazy rho must lie in (0,1], got {rho}"
                )));
            }
            validate_kind(inner)?;
        }
        _ => {}
    }
    Ok(())
}

fn kind_is_smooth(kind: &BetrayalKind) -> bool {
    match kind {
        BetrayalKind::Majority => false,
        BetrayalKind::Lazy { inner, .. } => kind_is_smooth(inner),
        _ => true,
    }
}

/// Best-of-k betrayal function: upper binomial tail past `⌊k/2⌋ + 1`.
pub fn best_of_k_f(k: u32, x: f64) -> f64 {
    binomial_tail(k as u64, k as u64 / 2 + 1, x)
}

fn eval_kind(kind: &BetrayalKind, x: f64) -> f64 {
    match kind {
        BetrayalKind::Pull => x,
        BetrayalKind::BestOfK(k) => best_of_k_f(*k, x),
        BetrayalKind::KCareful(k) => x.powi(*k as i32),
        BetrayalKind::Majority => {
            if x < 0.5 {
                0.0
            } else if x > 0.5 {
                1.0
            } else {
                0.5
            }
        }
        BetrayalKind::Lazy { rho, inner } => rho * eval_kind(inner, x),
    }
}

fn prob_from_counts(kind: &BetrayalKind, count: u32, deg: u32) -> f64 {
    match kind {
        BetrayalKind::Majority => match (2 * count).cmp(&deg) {
            std::cmp::Ordering::Less => 0.0,
            std::cmp::Ordering::Equal => 0.5,
            std::cmp::Ordering::Greater => 1.0,
        },
        BetrayalKind::Lazy { rho, inner } => rho * prob_from_counts(inner, count, deg),
        _ => eval_kind(kind, count as f64 / deg as f64),
    }
}

/// `d/dx P[Bin(k,x) >= m] = k C(k-1, m-1) x^(m-1) (1-x)^(k-m)`, in log space.
fn best_of_k_d1(k: u64, x: f64) -> f64 {
    let m = k / 2 + 1;
    let lo = m - 1; // exponent of x
    let hi = k - m; // exponent of 1-x
    if (x == 0.0 && lo > 0) || (x == 1.0 && hi > 0) {
        return 0.0;
    }
    let mut ln = (k as f64).ln() + ln_choose(k - 1, m - 1);
    if lo > 0 {
        ln += lo as f64 * x.ln();
    }
    if hi > 0 {
        ln += hi as f64 * (1.0 - x).ln();
    }
    ln.exp()
}

/// `f_k'' = k C(k-1, m-1) x^(m-2) (1-x)^(k-m-1) ((m-1) - (k-1) x)`.
fn best_of_k_d2(k: u64, x: f64) -> f64 {
    match k {
        1 => return 0.0,
        2 => return 2.0,
        _ => {}
    }
    let m = k / 2 + 1;
    let lo = m - 2; // >= 0 for k >= 3
    let hi = k - m - 1; // >= 0 for k >= 3
    let bracket = (m - 1) as f64 - (k - 1) as f64 * x;
    if bracket == 0.0 || (x == 0.0 && lo > 0) || (x == 1.0 && hi > 0) {
        return 0.0;
    }
    let mut ln = (k as f64).ln() + ln_choose(k - 1, m - 1) + bracket.abs().ln();
    if lo > 0 {
        ln += lo as f64 * x.ln();
    }
    if hi > 0 {
        ln += hi as f64 * (1.0 - x).ln();
    }
    ln.exp().copysign(bracket)
}

fn d1_kind(kind: &BetrayalKind, x: f64) -> f64 {
    match kind {
        BetrayalKind::Pull => 1.0,
        BetrayalKind::BestOfK(k) => best_of_k_d1(*k as u64, x),
        BetrayalKind::KCareful(k) => {
            let k = *k as f64;
            if *kind == BetrayalKind::KCareful(1) {
                1.0
            } else {
                k * x.powf(k - 1.0)
            }
        }
        BetrayalKind::Majority => unreachable!("majority is not differentiable"),
        BetrayalKind::Lazy { rho, inner } => rho * d1_kind(inner, x),
    }
}

fn d2_kind(kind: &BetrayalKind, x: f64) -> f64 {
    match kind {
        BetrayalKind::Pull => 0.0,
        BetrayalKind::BestOfK(k) => best_of_k_d2(*k as u64, x),
        BetrayalKind::KCareful(k) => {
            let kk = *k as f64;
            match *k {
                1 => 0.0,
                2 => 2.0,
                _ => kk * (kk - 1.0) * x.powf(kk - 2.0),
            }
        }
        BetrayalKind::Majority => unreachable!("majority is not differentiable"),
        BetrayalKind::Lazy { rho, inner } => rho * d2_kind(inner, x),
    }
}

fn fd_d1(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let h = FD_STEP;
    if x < h {
        (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2.0 * h)) / (2.0 * h)
    } else if x > 1.0 - h {
        (3.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h)) / (2.0 * h)
    } else {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }
}

fn fd_d2(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let h = FD_STEP;
    if x < h {
        (2.0 * f(x) - 5.0 * f(x + h) + 4.0 * f(x + 2.0 * h) - f(x + 3.0 * h)) / (h * h)
    } else if x > 1.0 - h {
        (2.0 * f(x) - 5.0 * f(x - h) + 4.0 * f(x - 2.0 * h) - f(x - 3.0 * h)) / (h * h)
    } else {
        (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
    }
}

/// Exact constants of best-of-(2k+1) in the growing-k regime.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowingKReport {
    pub k: u64,
    /// `f'_{2k+1}(1/2) = (2k+1) C(2k, k) 4^{-k}`, also `max |f'|`.
    pub center_slope: f64,
    /// `1.05 √k`.
    pub slope_lower: f64,
    /// `2 √k`.
    pub slope_upper: f64,
    pub slope_within: bool,
    /// `max |f''_{2k+1}|`, attained at `1/2 ± 1/(2√(2k-1))`.
    pub max_d2: f64,
    /// `1.6 k`.
    pub d2_bound: f64,
    pub d2_within: bool,
}

/// Constants of best-of-(2k+1) checked against the growing-k bounds:
/// `1.05√k ≤ f'(1/2) ≤ 2√k` and `|f''| ≤ 1.6k`. The slope is exact in log
/// space; `max |f''|` is evaluated at its analytic argmax and confirmed by
/// grid maximisation.
pub fn growing_k_constants(k: u64) -> GrowingKReport {
    assert!(k >= 1);
    let sqrt_k = (k as f64).sqrt();
    // (2k+1) C(2k,k) 4^{-k}
    let center_slope =
        (((2 * k + 1) as f64).ln() + ln_choose(2 * k, k) - k as f64 * 4.0_f64.ln()).exp();

    // |f''| at x* = 1/2 + t/2, t = 1/sqrt(2k-1):
    // (2k+1) C(2k,k) k ((1-t^2)/4)^(k-1) t
    let t = 1.0 / ((2 * k - 1) as f64).sqrt();
    let mut ln_d2 = ((2 * k + 1) as f64).ln() + ln_choose(2 * k, k) + (k as f64).ln() + t.ln();
    if k > 1 {
        ln_d2 += (k - 1) as f64 * ((1.0 - t * t) / 4.0).ln();
    }
    let analytic_d2 = ln_d2.exp();
    let grid_d2 = grid_max(|x| best_of_k_d2(2 * k + 1, x).abs(), 0.0, 1.0, GRID).0;
    let max_d2 = analytic_d2.max(grid_d2);

    let slope_lower = 1.05 * sqrt_k;
    let slope_upper = 2.0 * sqrt_k;
    let d2_bound = 1.6 * k as f64;
    GrowingKReport {
        k,
        center_slope,
        slope_lower,
        slope_upper,
        slope_within: center_slope >= slope_lower && center_slope <= slope_upper,
        max_d2,
        d2_bound,
        d2_within: max_d2 <= d2_bound,
    }
}

/// Smallest `k0` such that a predicate on the growing-k report holds for
/// every `k` in `[k0, k_max]`, or `None` if it fails at `k_max` itself.
pub fn first_k_holding(
    k_max: u64,
    pred: impl Fn(&GrowingKReport) -> bool,
) -> Option<u64> {
    let mut k0 = None;
    for k in (1..=k_max).rev() {
        if pred(&growing_k_constants(k)) {
            k0 = Some(k);
        } else {
            break;
        }
    }
    k0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: BetrayalKind) -> BetrayalSpec {
        BetrayalSpec::new(kind).unwrap()
    }

    #[test]
    fn best_of_k_closed_forms() {
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert!((best_of_k_f(2, x) - x * x).abs() < 1e-14);
            let f3 = 3.0 * x * x - 2.0 * x.powi(3);
            assert!((best_of_k_f(3, x) - f3).abs() < 1e-14);
        }
        assert!((best_of_k_f(2, 0.3) - 0.09).abs() < 1e-15);
        assert_eq!(best_of_k_f(3, 0.5), 0.5);
        for k in [1, 2, 3, 10, 101, 100_000] {
            assert_eq!(best_of_k_f(k, 0.0), 0.0);
            assert_eq!(best_of_k_f(k, 1.0), 1.0);
        }
    }

    #[test]
    fn updating_function_examples() {
        // best-of-two: H = 3x^2 - 2x^3 (parity with best-of-three)
        let bo2 = spec(BetrayalKind::BestOfK(2));
        for i in 0..=50 {
            let x = i as f64 / 50.0;
            let f3 = 3.0 * x * x - 2.0 * x.powi(3);
            assert!((bo2.updating(x) - f3).abs() < 1e-12);
        }
        // pull: H = x
        let pull = BetrayalSpec::pull();
        assert!((pull.updating(0.37) - 0.37).abs() < 1e-15);
        // best-of-three: H'(1/2) = 1.5
        let bo3 = spec(BetrayalKind::BestOfK(3));
        assert!((bo3.updating_d1(0.5) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn parity_identity_odd_and_even() {
        // H_{f_k} = f_k for odd k, f_{k+1} for even k
        for k in 1..=8u32 {
            let s = spec(BetrayalKind::BestOfK(k));
            let target = if k % 2 == 1 { k } else { k + 1 };
            for i in 0..=100 {
                let x = i as f64 / 100.0;
                assert!(
                    (s.updating(x) - best_of_k_f(target, x)).abs() < 1e-12,
                    "k={k} x={x}"
                );
            }
        }
    }

    #[test]
    fn odd_best_of_k_is_symmetric() {
        for k in [1u32, 3, 5, 7, 31] {
            assert!(spec(BetrayalKind::BestOfK(k)).is_symmetric(), "k={k}");
        }
        assert!(!spec(BetrayalKind::BestOfK(2)).is_symmetric());
        assert!(!spec(BetrayalKind::KCareful(2)).is_symmetric());
        assert!(BetrayalSpec::pull().is_symmetric());
        assert!(BetrayalSpec::majority().is_symmetric());
    }

    #[test]
    fn updating_function_is_symmetric() {
        // H_f(1-x) = 1 - H_f(x) for every built-in
        let specs = vec![
            BetrayalSpec::pull(),
            spec(BetrayalKind::BestOfK(2)),
            spec(BetrayalKind::BestOfK(5)),
            spec(BetrayalKind::KCareful(3)),
            BetrayalSpec::majority(),
            BetrayalSpec::lazy(0.3, BetrayalKind::BestOfK(2)).unwrap(),
        ];
        for s in specs {
            for i in 0..=200 {
                let x = i as f64 / 200.0;
                assert!(
                    (s.updating(1.0 - x) - (1.0 - s.updating(x))).abs() <= 1e-10,
                    "{} at {x}",
                    s.label()
                );
            }
        }
    }

    #[test]
    fn lazy_updating_identity() {
        // H_{rho f}(x) = (1 - rho) x + rho H_f(x)
        let inner = spec(BetrayalKind::BestOfK(3));
        for &rho in &[0.25, 0.5, 1.0] {
            let lazy = BetrayalSpec::lazy(rho, BetrayalKind::BestOfK(3)).unwrap();
            for i in 0..=100 {
                let x = i as f64 / 100.0;
                let want = (1.0 - rho) * x + rho * inner.updating(x);
                assert!((lazy.updating(x) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let specs = vec![
            BetrayalSpec::pull(),
            spec(BetrayalKind::BestOfK(2)),
            spec(BetrayalKind::BestOfK(3)),
            spec(BetrayalKind::BestOfK(7)),
            spec(BetrayalKind::KCareful(2)),
            spec(BetrayalKind::KCareful(5)),
            BetrayalSpec::lazy(0.5, BetrayalKind::BestOfK(2)).unwrap(),
        ];
        for s in specs {
            let f = |x: f64| s.eval(x);
            for i in 0..=100 {
                let x = i as f64 / 100.0;
                assert!(
                    (s.d1(x) - fd_d1(&f, x)).abs() < 1e-6,
                    "{} d1 at {x}: {} vs {}",
                    s.label(),
                    s.d1(x),
                    fd_d1(&f, x)
                );
                assert!(
                    (s.d2(x) - fd_d2(&f, x)).abs() < 1e-4 * s.d2(x).abs().max(1.0),
                    "{} d2 at {x}",
                    s.label()
                );
            }
        }
    }

    #[test]
    fn profile_of_best_of_three() {
        let p = spec(BetrayalKind::BestOfK(3)).derive_profile().unwrap();
        assert!((p.eps_h - 0.5).abs() < 1e-9);
        assert!((p.eps_c - 1.0).abs() < 1e-9);
        assert!((p.k2_f - 6.0).abs() < 1e-8); // f'' = 6 - 12x
        assert!((p.k2_h - 6.0).abs() < 1e-8); // H = f
        assert!((p.k_f - 6.0).abs() < 1e-8);
        assert!((p.k1_f - 1.5).abs() < 1e-9); // f' = 6x(1-x) peaks at 1/2
    }

    #[test]
    fn profile_of_k_careful() {
        // H'(0) = 0 and H'(1/2) = 1 + (k-1) 2^{1-k}... for k = 2: 1.5
        let p = spec(BetrayalKind::KCareful(2)).derive_profile().unwrap();
        assert!((p.eps_h - 0.5).abs() < 1e-9);
        assert!((p.eps_c - 1.0).abs() < 1e-9);
        for k in 2..=6u32 {
            let s = spec(BetrayalKind::KCareful(k));
            assert!(s.updating_d1(0.0).abs() < 1e-12);
            let want = 1.0 + (k as f64 - 1.0) * 0.5_f64.powi(k as i32 - 1);
            assert!((s.updating_d1(0.5) - want).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn profile_of_pull_has_no_drift() {
        let p = BetrayalSpec::pull().derive_profile().unwrap();
        assert!(p.eps_h.abs() < 1e-12);
        assert!(p.eps_c.abs() < 1e-12);
        assert!(p.k2_f.abs() < 1e-12);
    }

    #[test]
    fn majority_profile_is_unavailable() {
        assert!(matches!(
            BetrayalSpec::majority().derive_profile(),
            Err(KernelError::NotSmooth)
        ));
    }

    #[test]
    fn quasi_majority_family_verdicts() {
        for k in 2..=7u32 {
            let r = spec(BetrayalKind::BestOfK(k)).quasi_majority_check();
            assert!(r.quasi_majority, "best-of-{k}: {r:?}");
        }
        let r = spec(BetrayalKind::KCareful(2)).quasi_majority_check();
        assert!(r.quasi_majority);
        let r = BetrayalSpec::lazy(0.5, BetrayalKind::BestOfK(2))
            .unwrap()
            .quasi_majority_check();
        assert!(r.quasi_majority);

        // pull fails exactly the centre slope condition
        let r = BetrayalSpec::pull().quasi_majority_check();
        assert!(!r.quasi_majority);
        let fails: Vec<usize> = r
            .conditions()
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.pass)
            .map(|(i, _)| i + 1)
            .collect();
        assert_eq!(fails, vec![4]);

        // majority fails the smoothness condition
        let r = BetrayalSpec::majority().quasi_majority_check();
        assert!(!r.quasi_majority);
        assert!(!r.smooth.pass);
    }

    #[test]
    fn majority_tie_is_integer_exact() {
        let m = BetrayalSpec::majority();
        assert_eq!(m.betray_prob(3, 6), 0.5);
        assert_eq!(m.betray_prob(2, 6), 0.0);
        assert_eq!(m.betray_prob(4, 6), 1.0);
        assert_eq!(m.betray_prob(0, 1), 0.0);
        let lazy = BetrayalSpec::lazy(0.5, BetrayalKind::Majority).unwrap();
        assert_eq!(lazy.betray_prob(3, 6), 0.25);
    }

    #[test]
    fn growing_k_slope_values() {
        // k = 1: 3 * C(2,1) / 4 = 1.5
        let r = growing_k_constants(1);
        assert!((r.center_slope - 1.5).abs() < 1e-12);
        // k = 100: within [1.05, 2] sqrt(k)
        let r = growing_k_constants(100);
        assert!(r.center_slope >= 10.5 && r.center_slope <= 20.0);
        assert!(r.slope_within);
        // slope also dominates |f'| everywhere (max at 1/2)
        let g = grid_max(|x| best_of_k_d1(201, x), 0.0, 1.0, GRID).0;
        assert!(g <= r.center_slope * (1.0 + 1e-12));
    }

    #[test]
    fn growing_k_d2_argmax_matches_grid() {
        for k in [2u64, 5, 16, 64] {
            let r = growing_k_constants(k);
            let grid = grid_max(|x| best_of_k_d2(2 * k + 1, x).abs(), 0.0, 1.0, GRID).0;
            assert!(
                (r.max_d2 - grid).abs() <= 1e-6 * grid,
                "k={k}: analytic {} vs grid {grid}",
                r.max_d2
            );
        }
    }

    #[test]
    fn custom_spec_validates_range() {
        assert!(BetrayalSpec::custom("bad-origin", |x| x + 0.1, true).is_err());
        assert!(BetrayalSpec::custom("escapes", |x| 2.0 * x, true).is_err());
        let ok = BetrayalSpec::custom("cube", |x| x * x * x, true).unwrap();
        assert!((ok.d1(0.5) - 0.75).abs() < 1e-7);
        assert!((ok.d2(0.5) - 3.0).abs() < 1e-4);
    }

    #[test]
    fn invalid_kinds_rejected() {
        assert!(BetrayalSpec::best_of_k(0).is_err());
        assert!(BetrayalSpec::lazy(0.0, BetrayalKind::Pull).is_err());
        assert!(BetrayalSpec::lazy(1.5, BetrayalKind::Pull).is_err());
    }

    #[test]
    fn kind_serde_round_trip() {
        let kinds = vec![
            BetrayalKind::Pull,
            BetrayalKind::BestOfK(5),
            BetrayalKind::KCareful(3),
            BetrayalKind::Majority,
            BetrayalKind::Lazy {
                rho: 0.5,
                inner: Box::new(BetrayalKind::BestOfK(2)),
            },
        ];
        for k in kinds {
            let json = serde_json::to_string(&k).unwrap();
            let back: BetrayalKind = serde_json::from_str(&json).unwrap();
            assert_eq!(back, k);
        }
    }
}
