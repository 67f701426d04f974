//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p leadsto-core --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use leadsto_core::checker::{estimate_leadsto, sat};
use leadsto_core::eval::{consensus, intersection, score, truth_set, Metrics, RelationSet};
use leadsto_core::fdr::{analyze, FdrConfig, Labeling, ZTable};
use leadsto_core::granger::{f_upper_tail, granger_test};
use leadsto_core::pipeline::{granger, infer, GrangerConfig, InferConfig};
use leadsto_core::sim::{simulate, two_periods, RelationKind, Scenario, SimSpec};
use leadsto_core::stats::{ks_p_value, ks_uniform_statistic};
use leadsto_core::trace::RawSeries;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn desk(scenario: Scenario, seed: u64) -> SimSpec {
    SimSpec {
        n_portfolios: 10,
        ..SimSpec::new(scenario, seed)
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let tab = common::random_table(&mut rng, 50, 4);
        let trace = tab.to_trace();
        let f = common::random_state_formula(&mut rng, &tab.names, 3);
        let got = sat(&trace, &f).unwrap().truth.to_vec();
        if got != common::brute_sat(&tab, &f) {
            mismatches += 1;
        }
        let c = common::random_state_formula(&mut rng, &tab.names, 3);
        let e = common::random_state_formula(&mut rng, &tab.names, 3);
        let w = common::random_window(&mut rng, 1);
        let est = estimate_leadsto(&trace, &c, &e, w).unwrap();
        if (est.numerator, est.denominator) != common::brute_leadsto(&tab, &c, &e, w) {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(10),
        format!("{mismatches} mismatches in 1000 cases, {elapsed:.2?}"),
    )
}

/// Primary and baseline results for both periods of one simulated pair.
struct PairRun {
    truth: RelationSet,
    primary: [RelationSet; 2],
    baseline: [RelationSet; 2],
    /// Slowest single inference run.
    max_time: Duration,
}

fn run_pair(spec: &SimSpec, with_baseline: bool) -> PairRun {
    let (p1, p2) = two_periods(spec).unwrap();
    let truth = truth_set(&p1.ground_truth);
    let mut primary = [RelationSet::new(), RelationSet::new()];
    let mut baseline = [RelationSet::new(), RelationSet::new()];
    let mut max_time = Duration::ZERO;
    for (i, p) in [&p1, &p2].into_iter().enumerate() {
        let series = p.return_series();
        let t0 = Instant::now();
        primary[i] = infer(&series, &InferConfig::default()).unwrap().relations;
        max_time = max_time.max(t0.elapsed());
        if with_baseline {
            baseline[i] = granger(&series, &GrangerConfig::default()).unwrap().relations;
        }
    }
    PairRun {
        truth,
        primary,
        baseline,
        max_time,
    }
}

fn criterion_2() -> Outcome {
    let mut counts = Vec::new();
    let mut slowest = Duration::ZERO;
    for seed in SEEDS {
        let run = run_pair(&desk(Scenario::A, seed), false);
        counts.extend(run.primary.iter().map(|s| s.len()));
        slowest = slowest.max(run.max_time);
    }
    let worst = counts.iter().copied().max().unwrap_or(0);
    outcome(
        worst <= 2 && slowest < Duration::from_secs(120),
        format!("significant per period {counts:?}, slowest run {slowest:.2?}"),
    )
}

fn replication_runs() -> Vec<PairRun> {
    let mut runs = Vec::new();
    for scenario in [Scenario::B, Scenario::E] {
        for seed in SEEDS {
            runs.push(run_pair(&desk(scenario, seed), true));
        }
    }
    runs
}

fn pooled(runs: &[PairRun], pick: impl Fn(&PairRun) -> &[RelationSet; 2]) -> Metrics {
    let per: Vec<Metrics> = runs
        .iter()
        .flat_map(|r| pick(r).iter().map(|s| score(s, &r.truth)).collect::<Vec<_>>())
        .collect();
    Metrics::pooled(&per)
}

fn criterion_3(runs: &[PairRun]) -> Outcome {
    let m = pooled(runs, |r| &r.primary);
    outcome(
        m.fdr <= 0.15 && m.fnr <= 0.10,
        format!(
            "tp {} fp {} fn {}: FDR {:.4}, FNR {:.4}",
            m.tp, m.fp, m.fn_, m.fdr, m.fnr
        ),
    )
}

fn criterion_4(runs: &[PairRun]) -> Outcome {
    let p = pooled(runs, |r| &r.primary);
    let g = pooled(runs, |r| &r.baseline);
    outcome(
        g.fdr >= 3.0 * p.fdr,
        format!("Granger FDR {:.4} vs primary FDR {:.4}", g.fdr, p.fdr),
    )
}

fn criterion_5(runs: &[PairRun]) -> Outcome {
    let (mut inter, mut union) = (0, 0);
    let mut consensus_ok = true;
    for r in runs {
        let [a, b] = &r.primary;
        inter += a.intersection(b).count();
        union += a.union(b).count();
        let c = score(&consensus(a, b), &r.truth).fdr;
        if c > score(a, &r.truth).fdr || c > score(b, &r.truth).fdr {
            consensus_ok = false;
        }
    }
    let jaccard = if union == 0 { 1.0 } else { inter as f64 / union as f64 };

    // Scenario B separates cleanly: the z histogram has an empty stretch
    // between roughly 0.3 and 1.8, so a hand-picked cutoff of 1.0 is used.
    let (p1, p2) = two_periods(&desk(Scenario::B, 0)).unwrap();
    let manual = InferConfig {
        manual: Some(Labeling::ManualZ(1.0)),
        ..InferConfig::default()
    };
    let m1 = infer(&p1.return_series(), &manual).unwrap().relations;
    let m2 = infer(&p2.return_series(), &manual).unwrap().relations;
    let manual_inter = intersection(&m1, &m2);

    outcome(
        jaccard >= 0.6 && consensus_ok && manual_inter >= 0.9,
        format!(
            "pooled Jaccard {jaccard:.4}, consensus fdr never above either period: {consensus_ok}, \
             manual-cutoff intersection {manual_inter:.4}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut missed = 0;
    let mut total = 0;
    for seed in SEEDS {
        let spec = SimSpec {
            zero_betas: true,
            ..desk(Scenario::D, seed)
        };
        let (p1, p2) = two_periods(&spec).unwrap();
        let deps: Vec<_> = p1
            .ground_truth
            .relations
            .iter()
            .filter(|r| r.kind == RelationKind::Dependency)
            .collect();
        for p in [&p1, &p2] {
            let found = infer(&p.return_series(), &InferConfig::default()).unwrap().relations;
            for d in &deps {
                total += 1;
                let hit = d.delta == 1
                    && found
                        .iter()
                        .any(|r| r.key() == (d.source.as_str(), d.target.as_str(), 1));
                if !hit {
                    missed += 1;
                }
            }
        }
    }
    outcome(
        missed == 0 && total == 30,
        format!("{missed} of {total} embedded dependencies missed at lag 1"),
    )
}

fn normal_sample(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn z_table(z: Vec<f64>) -> ZTable {
    let ids = (0..z.len()).map(|i| format!("h{i}")).collect();
    ZTable::from_z(ids, z).unwrap()
}

fn criterion_7() -> Outcome {
    let mut worst_frac: f64 = 0.0;
    let mut worst_mean: f64 = 0.0;
    let mut worst_sd: f64 = 0.0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(700 + seed);
        let report = analyze(&z_table(normal_sample(&mut rng, 10_000)), FdrConfig::default()).unwrap();
        worst_frac = worst_frac.max(report.n_significant() as f64 / 10_000.0);
        worst_mean = worst_mean.max(report.null.mean.abs());
        worst_sd = worst_sd.max((report.null.sd - 1.0).abs());
    }
    outcome(
        worst_frac <= 0.002 && worst_mean <= 0.1 && worst_sd <= 0.1,
        format!(
            "over 20 seeds: max flagged fraction {worst_frac:.4}, max |mean| {worst_mean:.4}, \
             max |sd - 1| {worst_sd:.4}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let alt = Normal::new(3.0, 1.0).unwrap();
    let z: Vec<f64> = (0..10_000)
        .map(|_| {
            if rng.random_bool(0.05) {
                alt.sample(&mut rng)
            } else {
                StandardNormal.sample(&mut rng)
            }
        })
        .collect();
    let report = analyze(&z_table(z), FdrConfig::default()).unwrap();
    let (mean, sd) = (report.null.mean, report.null.sd);
    let above: Vec<_> = report.entries.iter().filter(|e| e.z > 4.0).collect();
    let missed = above.iter().filter(|e| !e.significant).count();
    let worst_fdr = above.iter().map(|e| e.fdr).fold(0.0, f64::max);
    outcome(
        (-0.1..=0.1).contains(&mean) && (0.9..=1.15).contains(&sd) && missed == 0,
        format!(
            "null mean {mean:.4}, sd {sd:.4}; {missed} of {} entries with z > 4 unflagged \
             (largest fdr among them {worst_fdr:.4})",
            above.len()
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut worst: f64 = 0.0;
    for &(d1, d2, f, p) in common::f_table::F_UPPER_TAIL.iter() {
        worst = worst.max((f_upper_tail(f, d1, d2) - p).abs());
    }
    let p: Vec<f64> = (0..200u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
            let x = RawSeries::new("x", normal_sample(&mut rng, 1000)).unwrap();
            let y = RawSeries::new("y", normal_sample(&mut rng, 1000)).unwrap();
            granger_test(&x, &y, 1).unwrap().p_value
        })
        .collect();
    let d = ks_uniform_statistic(&p).unwrap();
    let ks_p = ks_p_value(d, p.len());
    outcome(
        worst <= 1e-9 && ks_p >= 0.01,
        format!("max |p - reference| {worst:.3e}; KS D {d:.4}, p {ks_p:.4}"),
    )
}

fn criterion_10() -> Outcome {
    // Independent errors only, with many lag-1 dependencies: about a fifth
    // of the prima facie hypotheses are true.
    let spec = SimSpec {
        n_portfolios: 10,
        zero_betas: true,
        n_dependencies: 20,
        ..SimSpec::new(Scenario::D, 10)
    };
    let sim = simulate(&spec).unwrap();
    let config = InferConfig {
        lags: vec![1],
        ..InferConfig::default()
    };
    let inf = infer(&sim.return_series(), &config).unwrap();
    let warned = inf.report.warnings.iter().any(|w| w.contains("unreliable"));
    outcome(
        inf.report.null.unreliable() && warned,
        format!(
            "estimated non-null fraction {:.4}, warning raised: {warned}",
            inf.report.null.non_null_fraction()
        ),
    )
}

fn criterion_11() -> Outcome {
    let sim = simulate(&SimSpec::new(Scenario::B, 11)).unwrap();
    let series = sim.return_series();
    let t0 = Instant::now();
    let inf = infer(&series, &InferConfig::default()).unwrap();
    let elapsed = t0.elapsed();
    let n = inf.hypotheses.len();
    outcome(
        n == 7200 && series.len() == 25 && elapsed < Duration::from_secs(300),
        format!("{n} hypotheses over {} series in {elapsed:.2?}", series.len()),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    results.push((1, "checker matches brute-force evaluator", criterion_1()));
    results.push((2, "scenario A yields at most 2 relations per period", criterion_2()));
    let runs = replication_runs();
    results.push((3, "scenario B/E pooled FDR and FNR", criterion_3(&runs)));
    results.push((4, "Granger FDR at least 3x primary FDR", criterion_4(&runs)));
    results.push((5, "cross-period intersection", criterion_5(&runs)));
    results.push((6, "scenario D dependency recovery", criterion_6()));
    results.push((7, "empirical null calibration on pure noise", criterion_7()));
    results.push((8, "empirical null recovery under a 5% alternative", criterion_8()));
    results.push((9, "Granger F-test p-values", criterion_9()));
    results.push((10, "unreliable-null warning", criterion_10()));
    results.push((11, "full-size inference runtime", criterion_11()));

    let mut failed = 0;
    for (n, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("{tag} criterion {n}: {name} ({})", o.detail);
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
