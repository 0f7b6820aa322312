//! Acceptance suite: every criterion prints one `PASS`/`FAIL` line
//! (visible with `cargo test --test acceptance -- --nocapture`) and each
//! tolerance is pinned in code.
//!
//! The asymptotic consensus-time statements are exercised at desk scale:
//! exact identities and inequality corpora are asserted outright, scaling
//! behaviour is asserted through seeded sweeps with frozen thresholds.

use once_cell::sync::Lazy;
use rayon::prelude::*;

use fvote_core::bits::VertexSet;
use fvote_core::checks::{run_suite, Suite, TolerancePolicy};
use fvote_core::dynamics::{exact_moments, step, Configuration};
use fvote_core::experiments::{
    drift_audit, fit_scaling, ols, run_corpus, run_plan, replay_trial, stats_from_raw_csv,
    DriftWindow, ExperimentPlan, ExperimentResult, FamilyRule, InitRule, MaxStepsRule, ParamRule,
    ScalingModel,
};
use fvote_core::generate::{generate, GeneratorSpec, GraphFamily};
use fvote_core::kernels::{BetrayalKind, BetrayalSpec};
use fvote_core::seed::rng_from;
use fvote_core::spectral::{expansion, DEFAULT_MAX_ITER};

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

// ---------------------------------------------------------------------------
// 01: Monte Carlo step() means vs exact_moments on random instances

#[test]
fn criterion_01_exact_moment_oracle() {
    let kinds = [
        BetrayalKind::BestOfK(2),
        BetrayalKind::BestOfK(3),
        BetrayalKind::BestOfK(5),
        BetrayalKind::KCareful(2),
        BetrayalKind::Majority,
        BetrayalKind::Pull,
        BetrayalKind::Lazy {
            rho: 0.5,
            inner: Box::new(BetrayalKind::BestOfK(2)),
        },
    ];
    let trials = 100_000usize;
    let failures: Vec<String> = (0..20usize)
        .into_par_iter()
        .filter_map(|inst| {
            let n = 16 + 3 * inst;
            let g = generate(&GeneratorSpec::new(
                GraphFamily::Gnp { p: 0.4 },
                n,
                1000 + inst as u64,
            ))
            .unwrap();
            let spec = BetrayalSpec::new(kinds[inst % kinds.len()].clone()).unwrap();
            let mut rng = rng_from(31_000 + inst as u64);
            let a = VertexSet::random(g.n(), &mut rng);
            let cfg = Configuration::new(&g, a);
            let (mean, var) = exact_moments(&g, &spec, &cfg);
            let mut acc = 0.0;
            for _ in 0..trials {
                acc += step(&g, &spec, &cfg, &mut rng).pi_a();
            }
            let mc = acc / trials as f64;
            let sigma_mean = (var / trials as f64).sqrt().max(1e-13);
            let dev = (mc - mean).abs() / sigma_mean;
            (dev > 5.0).then(|| {
                format!(
                    "instance {inst} ({}; n={n}): {dev:.2} sigma (mc {mc}, exact {mean})",
                    spec.label()
                )
            })
        })
        .collect();
    report(
        "01 exact-moment oracle",
        failures.is_empty(),
        &format!("20 instances x {trials} trials, 5 sigma: {failures:?}"),
    );
}

// ---------------------------------------------------------------------------
// 02 + 03: the inequality corpora (zero failures permitted)

static CHECK_CORPUS: Lazy<Vec<fvote_core::checks::CheckResult>> = Lazy::new(|| {
    let pol = TolerancePolicy::default();
    let mut all = run_suite(Suite::Mixing, 200, 20_260_101, &pol);
    all.extend(run_suite(Suite::QH, 200, 20_260_102, &pol));
    all.extend(run_suite(Suite::RH, 200, 20_260_103, &pol));
    all.extend(run_suite(Suite::Moments, 400, 20_260_104, &pol));
    all
});

#[test]
fn criterion_02_inequality_suites() {
    let mut counts = std::collections::BTreeMap::new();
    let mut failures = Vec::new();
    for r in CHECK_CORPUS.iter() {
        *counts.entry(r.name).or_insert(0usize) += 1;
        if !r.pass {
            failures.push(format!("{} on {}", r.name, r.instance));
        }
    }
    for name in [
        "mixing",
        "qh-taylor",
        "rh-concentration",
        "mean-general",
        "variance-general",
        "mean-symmetric",
        "variance-symmetric",
    ] {
        assert!(
            counts.get(name).copied().unwrap_or(0) >= 200,
            "{name}: fewer than 200 instances ({counts:?})"
        );
    }
    report(
        "02 theorem-inequality suite",
        failures.is_empty(),
        &format!("{} checks, failures: {failures:?}", CHECK_CORPUS.len()),
    );
}

#[test]
fn criterion_03_transition_variance_bound() {
    let rows: Vec<_> = CHECK_CORPUS
        .iter()
        .filter(|r| r.name == "transition-variance")
        .collect();
    assert!(rows.len() >= 200, "only {} instances", rows.len());
    let failures = rows.iter().filter(|r| !r.pass).count();
    report(
        "03 transition-variance bound",
        failures == 0,
        &format!("{} instances, {failures} failures", rows.len()),
    );
}

// ---------------------------------------------------------------------------
// 04: quasi-majority verdicts for the named kernel family

#[test]
fn criterion_04_quasi_majority_verifier() {
    let mut failures = Vec::new();
    for k in 2..=7u32 {
        let r = BetrayalSpec::best_of_k(k).unwrap().quasi_majority_check();
        if !r.quasi_majority {
            failures.push(format!("best-of-{k} should pass"));
        }
    }
    let r = BetrayalSpec::k_careful(2).unwrap().quasi_majority_check();
    if !r.quasi_majority {
        failures.push("2-careful should pass".into());
    }
    let r = BetrayalSpec::lazy(0.5, BetrayalKind::BestOfK(2))
        .unwrap()
        .quasi_majority_check();
    if !r.quasi_majority {
        failures.push("0.5-lazy best-of-two should pass".into());
    }
    // pull fails exactly the centre-slope condition
    let r = BetrayalSpec::pull().quasi_majority_check();
    let pull_fails: Vec<usize> = r
        .conditions()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.pass)
        .map(|(i, _)| i + 1)
        .collect();
    if pull_fails != vec![4] {
        failures.push(format!("pull fails {pull_fails:?}, want exactly [4]"));
    }
    // majority fails the smoothness condition
    let r = BetrayalSpec::majority().quasi_majority_check();
    if r.smooth.pass || r.quasi_majority {
        failures.push("majority must fail the smoothness condition".into());
    }
    report(
        "04 quasi-majority verifier",
        failures.is_empty(),
        &format!("{failures:?}"),
    );
}

// ---------------------------------------------------------------------------
// 05 + 06: worst-case scaling sweep shared by the upper and lower bounds

static SCALING_SWEEP: Lazy<ExperimentResult> = Lazy::new(|| {
    let plan = ExperimentPlan {
        plan_id: "worst-case-scaling".into(),
        family: FamilyRule::Gnp,
        param: ParamRule {
            coeff: 3.0,
            n_exp: -0.5,
            s_exp: 0.0,
            s_off: 0.0,
        },
        ns: vec![1024, 2048, 4096, 8192],
        kernels: vec![BetrayalKind::BestOfK(2), BetrayalKind::BestOfK(3)],
        init: InitRule::Balanced,
        trials: 50,
        master_seed: 0xFEED_0005,
        max_steps: MaxStepsRule::LogMultiple { mult: 50 },
        spectral_tol: 1e-4,
        retry_budget: 100,
        hypothesis: Some(fvote_core::experiments::HypothesisRule { c1: 3.5 }),
    };
    run_plan(&plan).expect("scaling sweep")
});

#[test]
fn criterion_05_log_n_scaling() {
    let result = &*SCALING_SWEEP;
    let mut failures = Vec::new();
    for cell in &result.cells {
        assert!(cell.aborted.is_none(), "cell {} aborted", cell.cell);
        if cell.consensus_rate < 1.0 {
            failures.push(format!(
                "cell {} (n={}): consensus rate {}",
                cell.cell, cell.n, cell.consensus_rate
            ));
        }
        if cell.hypothesis_ok == Some(false) {
            failures.push(format!("cell {} violates the expander hypothesis", cell.cell));
        }
    }
    for kernel in [BetrayalKind::BestOfK(2), BetrayalKind::BestOfK(3)] {
        let sub = ExperimentResult {
            plan: result.plan.clone(),
            cells: result
                .cells
                .iter()
                .filter(|c| c.kernel == kernel)
                .cloned()
                .collect(),
        };
        let fit = fit_scaling(&sub, ScalingModel::LogN).unwrap();
        let medians: Vec<f64> = sub.cells.iter().map(|c| c.median_t).collect();
        if fit.r2 < 0.9 {
            failures.push(format!(
                "{kernel:?}: r2 {:.3} < 0.9 (medians {medians:?}, slope {:.2})",
                fit.r2, fit.slope
            ));
        } else {
            println!(
                "  {kernel:?}: medians {medians:?}, slope {:.2} per ln n, r2 {:.4}",
                fit.slope, fit.r2
            );
        }
    }
    report(
        "05 worst-case O(log n) scaling",
        failures.is_empty(),
        &format!("{failures:?}"),
    );
}

#[test]
fn criterion_06_log_n_lower_bound() {
    // floor 0.5 * log2(n) / log2(H'(1/2)) with H'(1/2) = 3/2 for both
    // kernels; the 0.5 factor is the frozen pilot calibration
    let result = &*SCALING_SWEEP;
    let slope = BetrayalSpec::best_of_k(2)
        .unwrap()
        .derive_profile()
        .unwrap()
        .eps_h
        + 1.0;
    assert!((slope - 1.5).abs() < 1e-9);
    let mut failures = Vec::new();
    for cell in &result.cells {
        let floor = 0.5 * (cell.n as f64).log2() / slope.log2();
        if cell.p05_t < floor {
            failures.push(format!(
                "cell {} (n={}, {:?}): p05 {} < floor {floor:.2}",
                cell.cell, cell.n, cell.kernel, cell.p05_t
            ));
        }
    }
    report(
        "06 Omega(log n) lower bound",
        failures.is_empty(),
        &format!("{failures:?}"),
    );
}

// ---------------------------------------------------------------------------
// 07: a biased start beats the balanced start on the same graph

#[test]
fn criterion_07_biased_start_is_faster() {
    let base = ExperimentPlan {
        plan_id: "bias-speedup".into(),
        family: FamilyRule::Gnp,
        param: ParamRule::fixed(0.3),
        ns: vec![4096],
        kernels: vec![BetrayalKind::BestOfK(3)],
        init: InitRule::Balanced,
        trials: 30,
        master_seed: 0xFEED_0007,
        max_steps: MaxStepsRule::LogMultiple { mult: 50 },
        spectral_tol: 1e-4,
        retry_budget: 100,
        hypothesis: None,
    };
    let mut biased = base.clone();
    biased.plan_id = "bias-speedup-biased".into();
    biased.init = InitRule::Fraction { pi_a: 0.55 }; // delta_0 = 0.1
    let r_bal = run_plan(&base).unwrap();
    let r_bias = run_plan(&biased).unwrap();
    // same master seed and cell grid: identical graph
    assert_eq!(r_bal.cells[0].lambda, r_bias.cells[0].lambda);
    let (m_bal, m_bias) = (r_bal.cells[0].median_t, r_bias.cells[0].median_t);
    report(
        "07 biased-start speedup",
        m_bias < m_bal && (r_bias.cells[0].init_delta - 0.1).abs() < 0.02,
        &format!(
            "balanced median {m_bal}, biased median {m_bias} (delta_0 = {:.3})",
            r_bias.cells[0].init_delta
        ),
    );
}

// ---------------------------------------------------------------------------
// 08: growing sample counts accelerate consensus like log n / log k

#[test]
fn criterion_08_growing_k_scaling() {
    let plan = ExperimentPlan {
        plan_id: "growing-k".into(),
        family: FamilyRule::Gnp,
        // p = 2(s-1)/sqrt(n) = 4k/sqrt(n) for s = 2k+1, clamped to 1
        param: ParamRule {
            coeff: 2.0,
            n_exp: -0.5,
            s_exp: 1.0,
            s_off: -1.0,
        },
        ns: vec![2048, 8192],
        kernels: vec![
            BetrayalKind::BestOfK(9),  // k = 4
            BetrayalKind::BestOfK(33), // k = 16
            BetrayalKind::BestOfK(129), // k = 64
        ],
        init: InitRule::Balanced,
        trials: 50,
        master_seed: 0xFEED_0008,
        max_steps: MaxStepsRule::LogMultiple { mult: 50 },
        spectral_tol: 1e-3,
        retry_budget: 100,
        hypothesis: None,
    };
    let result = run_plan(&plan).unwrap();
    let mut failures = Vec::new();
    for cell in &result.cells {
        assert!(cell.aborted.is_none());
        if cell.consensus_rate < 1.0 {
            failures.push(format!("cell {}: rate {}", cell.cell, cell.consensus_rate));
        }
    }
    // medians decrease in k at fixed n = 8192
    let median_of = |n: usize, s: u32| -> f64 {
        result
            .cells
            .iter()
            .find(|c| c.n == n && c.kernel == BetrayalKind::BestOfK(s))
            .unwrap()
            .median_t
    };
    let m = [median_of(8192, 9), median_of(8192, 33), median_of(8192, 129)];
    if !(m[0] > m[1] && m[1] > m[2]) {
        failures.push(format!("medians not decreasing in k at n=8192: {m:?}"));
    }
    // fit median against ln n / ln k with the theorem's k
    let points: Vec<(f64, f64)> = result
        .cells
        .iter()
        .map(|c| {
            let k = (c.kernel.sample_count().unwrap() - 1) / 2;
            ((c.n as f64).ln() / (k as f64).ln(), c.median_t)
        })
        .collect();
    let fit = ols(&points);
    if fit.r2 < 0.8 {
        failures.push(format!("log n / log k fit r2 {:.3} < 0.8 ({points:?})", fit.r2));
    }
    report(
        "08 growing-k scaling",
        failures.is_empty(),
        &format!(
            "medians@8192 {m:?}, r2 {:.3}, failures {failures:?}",
            fit.r2
        ),
    );
}

// ---------------------------------------------------------------------------
// 09: drift audits on 500-run corpora

#[test]
fn criterion_09_drift_audits() {
    let mut failures = Vec::new();

    // exponential-growth form: best-of-three on G(4096, 0.3), delta_0 = 0.02
    {
        let g = generate(&GeneratorSpec::new(GraphFamily::Gnp { p: 0.3 }, 4096, 42)).unwrap();
        let dd = g.degree_distribution();
        let summary = expansion(&g, 1e-6, DEFAULT_MAX_ITER).unwrap();
        let spec = BetrayalSpec::best_of_k(3).unwrap();
        let profile = spec.derive_profile().unwrap();
        let window = DriftWindow::exponential_growth(&profile, summary.lambda);
        assert!(
            window.lo < window.hi,
            "window empty: lambda {} too large",
            summary.lambda
        );
        let init = fvote_core::experiments::build_init(
            &g,
            &InitRule::Fraction { pi_a: 0.51 },
        )
        .unwrap();
        let trajs = run_corpus(&g, &spec, &init, 500, 0xD41F_0001, 400);
        match drift_audit(&trajs, &window, dd.norm2()) {
            Ok(audit) => {
                println!(
                    "  fixed-k audit: {} eligible, {} bad, empirical {:.4}, threshold {:.4}",
                    audit.eligible, audit.bad, audit.empirical, audit.threshold
                );
                if !audit.pass {
                    failures.push(format!("fixed-k audit failed: {audit:?}"));
                }
            }
            Err(e) => failures.push(format!("fixed-k audit: {e}")),
        }
    }

    // sqrt-k growth form: best-of-33 (k = 16) on the coupled-density graph
    {
        let k = 16u32;
        let n = 4096usize;
        let g = generate(&GeneratorSpec::new(GraphFamily::Gnp { p: 1.0 }, n, 43)).unwrap();
        let dd = g.degree_distribution();
        let spec = BetrayalSpec::best_of_k(2 * k + 1).unwrap();
        let window = DriftWindow::sqrt_k_growth(k, n);
        let init = fvote_core::experiments::build_init(
            &g,
            &InitRule::Fraction { pi_a: 0.55 },
        )
        .unwrap();
        let trajs = run_corpus(&g, &spec, &init, 500, 0xD41F_0002, 400);
        match drift_audit(&trajs, &window, dd.norm2()) {
            Ok(audit) => {
                println!(
                    "  sqrt-k audit: {} eligible, {} bad, empirical {:.4}, threshold {:.4}",
                    audit.eligible, audit.bad, audit.empirical, audit.threshold
                );
                if !audit.pass {
                    failures.push(format!("sqrt-k audit failed: {audit:?}"));
                }
            }
            Err(e) => failures.push(format!("sqrt-k audit: {e}")),
        }
    }

    report("09 drift audits", failures.is_empty(), &format!("{failures:?}"));
}

// ---------------------------------------------------------------------------
// 10: growing-k slope constants, exact for every k up to 1000

#[test]
fn criterion_10_growing_k_slope_window() {
    // report the smallest k0 from which the slope bounds hold through 1000
    let mut k0 = None;
    let mut last_violation = None;
    for k in (1..=1000u64).rev() {
        let r = fvote_core::kernels::growing_k_constants(k);
        if r.slope_within {
            k0 = Some(k);
        } else {
            last_violation = Some(k);
            break;
        }
    }
    let pass = k0.is_some();
    report(
        "10 growing-k slope constants",
        pass,
        &format!(
            "1.05 sqrt(k) <= f'(1/2) <= 2 sqrt(k) holds for k in [{}, 1000] (first violation below: {last_violation:?})",
            k0.unwrap_or(0)
        ),
    );
}

// ---------------------------------------------------------------------------
// 11: determinism — full sweep replays bit-identically

#[test]
fn criterion_11_determinism() {
    let plan = ExperimentPlan {
        plan_id: "determinism".into(),
        family: FamilyRule::Gnp,
        param: ParamRule {
            coeff: 3.0,
            n_exp: -0.5,
            s_exp: 0.0,
            s_off: 0.0,
        },
        ns: vec![256, 512],
        kernels: vec![BetrayalKind::BestOfK(2), BetrayalKind::BestOfK(3)],
        init: InitRule::Balanced,
        trials: 20,
        master_seed: 0xFEED_000B,
        max_steps: MaxStepsRule::LogMultiple { mult: 50 },
        spectral_tol: 1e-6,
        retry_budget: 100,
        hypothesis: None,
    };
    let first = run_plan(&plan).unwrap();
    let second = run_plan(&plan).unwrap();
    let csv1 = first.raw_csv_string().unwrap();
    let csv2 = second.raw_csv_string().unwrap();
    let identical = csv1 == csv2;

    // replay of an arbitrary (cell, trial) reproduces the recorded outcome
    let cell = &first.cells[3];
    let rec = &cell.trials[7];
    let traj = replay_trial(&plan, cell.cell, rec.trial).unwrap();
    let replay_ok = traj.t_cons == rec.t_cons && traj.terminal == rec.terminal;

    // stored aggregates are recomputable from the raw rows
    let recomputed = stats_from_raw_csv(&csv1, |c| first.cells[c].max_steps).unwrap();
    let stats_ok = recomputed.iter().all(|(cell, median, rate)| {
        (median - first.cells[*cell].median_t).abs() < 1e-9
            && (rate - first.cells[*cell].consensus_rate).abs() < 1e-9
    });

    report(
        "11 determinism",
        identical && replay_ok && stats_ok,
        &format!(
            "csv identical: {identical}, replay: {replay_ok}, stats recomputable: {stats_ok}"
        ),
    );
}
