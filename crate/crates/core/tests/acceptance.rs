//! Acceptance suite: one test per release criterion, each printing a
//! single PASS/FAIL line (run with `--nocapture` to see them on success).

use std::path::{Path, PathBuf};
use std::time::Instant;

use causal_insight::datagen::{gen_lorenz96, GroundTruth, MotifKind};
use causal_insight::graph::{LaggedEdge, TemporalGraph};
use causal_insight::graphsel::qbic_from_mses;
use causal_insight::harness::{
    ablate_permuted_signal, ablate_qbic_correlation, run_pipeline, ClampConfig, DatasetSpec,
    ExperimentConfig, RunConfig, RunReport, SelectionConfig, VarEdge,
};
use causal_insight::metrics::{
    correlation, full_report, pod, shd, structural_scores, CorrelationKind,
};
use causal_insight::predictor::{train, Backbone, PredictorConfig, PredictorModel};
use causal_insight::series::{normalize_minmax, MultivariateSeries};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(number: &str, name: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!("criterion {number} ({name}): {status} - {detail}");
    assert!(pass, "criterion {number} ({name}) failed: {detail}");
}

fn self_loops(n: usize) -> Vec<VarEdge> {
    (0..n).map(|i| VarEdge { lag: 1, src: i, dst: i, coeff: 0.5 }).collect()
}

fn linear_predictor(window: usize, epochs: usize) -> PredictorConfig {
    PredictorConfig {
        backbone: Backbone::Linear,
        window,
        learning_rate: 0.5,
        max_epochs: epochs,
        patience: epochs,
        ..PredictorConfig::default()
    }
}

fn mlp_predictor(window: usize, epochs: usize) -> PredictorConfig {
    PredictorConfig {
        backbone: Backbone::Mlp,
        window,
        hidden_sizes: vec![32],
        learning_rate: 0.3,
        max_epochs: epochs,
        patience: 50,
        ..PredictorConfig::default()
    }
}

/// The sparse 5-variable system of the oracle criterion: lag-1 self-loops
/// everywhere plus four cross edges at lags 1..3.
fn oracle_var_dataset() -> DatasetSpec {
    let mut edges = self_loops(5);
    edges.extend([
        VarEdge { lag: 1, src: 0, dst: 1, coeff: 0.6 },
        VarEdge { lag: 2, src: 1, dst: 2, coeff: 0.55 },
        VarEdge { lag: 3, src: 2, dst: 3, coeff: 0.5 },
        VarEdge { lag: 1, src: 3, dst: 4, coeff: -0.6 },
    ]);
    DatasetSpec::LinearVar { n_vars: 5, max_lag: 3, edges, t_len: 2000, noise_std: 0.05 }
}

fn assert_complexity_ledger(report: &RunReport, n_vars: u64) {
    for row in &report.rows {
        assert!(row.error.is_none(), "seed {} failed: {:?}", row.seed_index, row.error);
        assert_eq!(
            row.probe_passes,
            n_vars + 1,
            "probing must cost exactly N+1 forward passes"
        );
        assert_eq!(
            row.select_passes,
            row.qbic_trace.len() as u64,
            "selection must cost one masked evaluation per score point"
        );
    }
}

#[test]
fn criterion_1_oracle_recovery() {
    let start = Instant::now();
    let config = ExperimentConfig {
        dataset: oracle_var_dataset(),
        predictor: linear_predictor(5, 1000),
        clamp: ClampConfig::default(),
        selection: SelectionConfig { patience: 1, ..SelectionConfig::default() },
        run: RunConfig { n_seeds: 10, base_seed: 0, out_dir: None },
    };
    let report = run_pipeline(&config).unwrap();
    assert_complexity_ledger(&report, 5);
    let f1 = report.aggregate.f1.unwrap();
    let pod = report.aggregate.pod.unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        "1",
        "oracle recovery",
        f1.mean >= 0.90 && pod.mean >= 0.90,
        &format!(
            "mean F1 {:.3} (>= 0.90), mean PoD {:.3} (>= 0.90), runtime {elapsed:.1}s",
            f1.mean, pod.mean
        ),
    );
}

#[test]
fn criterion_2_motif_recovery() {
    let mut detail = String::new();
    let mut pass = true;
    for kind in MotifKind::ALL {
        let config = ExperimentConfig {
            dataset: DatasetSpec::Motif { motif: kind, t_len: 1000, lags: None, noise_std: 0.1 },
            predictor: mlp_predictor(5, 300),
            clamp: ClampConfig::default(),
            selection: SelectionConfig::default(),
            run: RunConfig { n_seeds: 10, base_seed: 100, out_dir: None },
        };
        let report = run_pipeline(&config).unwrap();
        assert_complexity_ledger(&report, kind.n_vars() as u64);
        let f1 = report.aggregate.f1.unwrap();
        let pod = report.aggregate.pod.unwrap();
        pass &= f1.mean >= 0.70 && pod.mean >= 0.40;
        detail.push_str(&format!(
            "{}: F1 {:.3} PoD {:.3}; ",
            kind.name(),
            f1.mean,
            pod.mean
        ));
    }
    detail.push_str("(thresholds: F1 >= 0.70, PoD >= 0.40 per motif)");
    verdict("2", "motif recovery", pass, &detail);
}

#[test]
fn criterion_3_qbic_selection_quality() {
    let mut detail = String::new();
    let mut pass = true;

    let mut check = |name: &str, config: &ExperimentConfig| {
        let report = ablate_qbic_correlation(config).unwrap();
        let negative = report
            .seeds
            .iter()
            .filter(|s| s.pearson.is_some_and(|p| p < 0.0))
            .count();
        let ratio = report.mean_f1_ratio.unwrap();
        pass &= negative >= 8 && ratio >= 0.84;
        detail.push_str(&format!("{name}: neg {negative}/10 ratio {ratio:.3}; "));
    };

    for kind in MotifKind::ALL {
        let config = ExperimentConfig {
            dataset: DatasetSpec::Motif { motif: kind, t_len: 1000, lags: None, noise_std: 0.1 },
            predictor: linear_predictor(5, 800),
            clamp: ClampConfig::default(),
            selection: SelectionConfig::default(),
            run: RunConfig { n_seeds: 10, base_seed: 300, out_dir: None },
        };
        check(kind.name(), &config);
    }
    let mut edges = self_loops(5);
    edges.extend([
        VarEdge { lag: 1, src: 0, dst: 1, coeff: 0.6 },
        VarEdge { lag: 2, src: 1, dst: 2, coeff: 0.55 },
        VarEdge { lag: 2, src: 2, dst: 3, coeff: 0.5 },
        VarEdge { lag: 1, src: 3, dst: 4, coeff: -0.6 },
    ]);
    let var_config = ExperimentConfig {
        dataset: DatasetSpec::LinearVar { n_vars: 5, max_lag: 2, edges, t_len: 2000, noise_std: 0.05 },
        predictor: linear_predictor(3, 800),
        clamp: ClampConfig::default(),
        selection: SelectionConfig::default(),
        run: RunConfig { n_seeds: 10, base_seed: 300, out_dir: None },
    };
    check("linear-var", &var_config);

    detail.push_str("(thresholds: negative Pearson >= 8/10, mean ratio >= 0.84)");
    verdict("3", "qbic selection quality", pass, &detail);
}

#[test]
fn criterion_4_permutation_ablation() {
    let mut edges = self_loops(10);
    edges.extend([
        VarEdge { lag: 1, src: 0, dst: 1, coeff: 0.6 },
        VarEdge { lag: 2, src: 1, dst: 2, coeff: 0.55 },
        VarEdge { lag: 1, src: 2, dst: 3, coeff: 0.6 },
        VarEdge { lag: 2, src: 3, dst: 4, coeff: 0.55 },
        VarEdge { lag: 1, src: 4, dst: 5, coeff: 0.6 },
        VarEdge { lag: 2, src: 5, dst: 6, coeff: 0.55 },
        VarEdge { lag: 1, src: 6, dst: 7, coeff: 0.6 },
        VarEdge { lag: 1, src: 8, dst: 9, coeff: 0.55 },
    ]);
    let config = ExperimentConfig {
        dataset: DatasetSpec::LinearVar {
            n_vars: 10,
            max_lag: 2,
            edges,
            t_len: 1000,
            noise_std: 0.05,
        },
        predictor: linear_predictor(3, 600),
        clamp: ClampConfig::default(),
        selection: SelectionConfig { patience: 1, ..SelectionConfig::default() },
        run: RunConfig { n_seeds: 6, base_seed: 40, out_dir: None },
    };
    let ablation = ablate_permuted_signal(&config).unwrap();
    let orig = ablation.original.aggregate.f1.unwrap().mean;
    let perm = ablation.permuted.aggregate.f1.unwrap().mean;
    let delta = orig - perm;
    verdict(
        "4",
        "permutation ablation",
        delta >= 0.15,
        &format!("mean F1 original {orig:.3} vs permuted {perm:.3}, delta {delta:.3} (>= 0.15)"),
    );
}

#[test]
fn criterion_5_complexity_accounting() {
    // Small runs across both backbones; every row must satisfy the
    // forward-pass ledger exactly.
    let mut checked = 0;
    for (dataset, predictor) in [
        (
            DatasetSpec::Motif {
                motif: MotifKind::Fork,
                t_len: 400,
                lags: Some(vec![1, 2]),
                noise_std: 0.1,
            },
            linear_predictor(4, 300),
        ),
        (
            DatasetSpec::Motif {
                motif: MotifKind::Diamond,
                t_len: 400,
                lags: None,
                noise_std: 0.1,
            },
            mlp_predictor(4, 60),
        ),
    ] {
        let n_vars = match &dataset {
            DatasetSpec::Motif { motif, .. } => motif.n_vars() as u64,
            _ => unreachable!(),
        };
        let config = ExperimentConfig {
            dataset,
            predictor,
            clamp: ClampConfig::default(),
            selection: SelectionConfig::default(),
            run: RunConfig { n_seeds: 3, base_seed: 7, out_dir: None },
        };
        let report = run_pipeline(&config).unwrap();
        assert_complexity_ledger(&report, n_vars);
        checked += report.rows.len();
    }
    verdict(
        "5",
        "complexity accounting",
        true,
        &format!("{checked} runs: probe = N+1 passes, select = one pass per score point"),
    );
}

#[test]
fn criterion_6_metric_unit_suite() {
    let graph = |n: usize, edges: &[(usize, usize, usize)]| {
        TemporalGraph::with_bidirected(
            n,
            edges.iter().map(|&(s, d, l)| LaggedEdge::new(s, d, l, 1.0)).collect(),
        )
        .unwrap()
    };

    // Reversed edge costs two operations.
    let truth = graph(2, &[(0, 1, 1)]);
    let reversed = graph(2, &[(1, 0, 1)]);
    assert_eq!(shd(&reversed, &truth).unwrap(), 2);
    assert_eq!(shd(&truth, &truth).unwrap(), 0);

    // Rate identities on a hand-computed fixture: TP=1, FP=1, FN=1.
    let t2 = graph(3, &[(0, 1, 1), (1, 2, 1)]);
    let p2 = graph(3, &[(0, 1, 1), (2, 1, 1)]);
    let r = structural_scores(&p2, &t2).unwrap();
    assert_eq!((r.precision, r.recall, r.f1), (0.5, 0.5, 0.5));
    assert_eq!(r.tpr, r.recall);
    assert_eq!(r.fdr, 1.0 - r.precision);

    // PoD conventions: half right, exact, and vacuous.
    let truth_lags = GroundTruth { graph: graph(3, &[(0, 1, 1), (1, 2, 2)]), has_lags: true };
    assert_eq!(pod(&graph(3, &[(0, 1, 1), (1, 2, 3)]), &truth_lags).unwrap(), 0.5);
    assert_eq!(pod(&graph(3, &[(0, 1, 1), (1, 2, 2)]), &truth_lags).unwrap(), 1.0);
    assert_eq!(pod(&graph(3, &[(2, 0, 9)]), &truth_lags).unwrap(), 1.0);

    // Normalized SHD divides by the true edge count.
    let full = full_report(&graph(3, &[(0, 1, 1)]), &truth_lags).unwrap();
    assert_eq!(full.shd_raw, 1);
    assert_eq!(full.shd_normalized, 0.5);

    // Score formula against an independent hand evaluation.
    let qbic = qbic_from_mses(100, &[0.01, 0.04], &[1, 2], 0.4);
    assert!((qbic - -776.8783968624435).abs() < 1e-9);

    // Correlation fixtures.
    let xs = [1.0, 2.0, 3.0];
    let spearman = correlation(&xs, &[3.0, 5.0, 4.0], CorrelationKind::Spearman).unwrap();
    assert!((spearman - 0.5).abs() < 1e-12);
    let pearson = correlation(&xs, &[2.0, 4.0, 6.0], CorrelationKind::Pearson).unwrap();
    assert!((pearson - 1.0).abs() < 1e-12);

    verdict("6", "metric unit suite", true, "all hand-computed fixtures match exactly");
}

#[test]
fn criterion_7_no_leakage_property_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let n = 4;
    let t_len = 60;
    let values = Array2::from_shape_fn((n, t_len), |_| rng.gen_range(0.0..1.0));
    let names = (0..n).map(|i| format!("x{i}")).collect();
    let series =
        normalize_minmax(&MultivariateSeries::new(values, names).unwrap());

    let mut violations = 0usize;
    let mut trials = 0usize;
    for backbone in [Backbone::Linear, Backbone::Mlp] {
        let config = PredictorConfig {
            backbone,
            window: 4,
            max_epochs: 30,
            learning_rate: 0.2,
            ..PredictorConfig::default()
        };
        let pred = train(&series, &config).unwrap();
        let baseline = pred.predict_series(&series).unwrap();
        for _ in 0..250 {
            // Self-mask trial: the lag-0 self slot never reaches the head.
            let j = rng.gen_range(0..n);
            let t = rng.gen_range(pred.valid_from()..t_len);
            let bumped = series.with_entry(j, t, rng.gen_range(0.0..1.0)).unwrap();
            let out = pred.predict_series(&bumped).unwrap();
            trials += 1;
            if out.values[[j, t]] != baseline.values[[j, t]] {
                violations += 1;
            }

            // Anti-causality trial: a future bump never moves the past.
            let i = rng.gen_range(0..n);
            let t_future = rng.gen_range(1..t_len);
            let bumped = series.with_entry(i, t_future, rng.gen_range(0.0..1.0)).unwrap();
            let out = pred.predict_series(&bumped).unwrap();
            trials += 1;
            let mut bad = false;
            for jj in 0..n {
                for tt in 0..t_future {
                    if out.values[[jj, tt]] != baseline.values[[jj, tt]] {
                        bad = true;
                    }
                }
            }
            if bad {
                violations += 1;
            }
        }
    }
    verdict(
        "7",
        "no-leakage property suite",
        trials == 1000 && violations == 0,
        &format!("{trials} randomized trials, {violations} violations"),
    );
}

#[test]
fn criterion_8_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let values = Array2::from_shape_fn((3, 40), |_| rng.gen_range(0.0..1.0));
    let names = (0..3).map(|i| format!("x{i}")).collect();
    let series = normalize_minmax(&MultivariateSeries::new(values, names).unwrap());

    let mut worst: f64 = 0.0;
    for backbone in [Backbone::Linear, Backbone::Mlp] {
        let config = PredictorConfig {
            backbone,
            window: 3,
            hidden_sizes: vec![6, 4],
            seed: 5,
            ..PredictorConfig::default()
        };
        let mut model = PredictorModel::init(config, 3).unwrap();
        if backbone == Backbone::Linear {
            let perturbed: Vec<f64> =
                model.params_flat().iter().map(|_| rng.gen_range(-0.5..0.5)).collect();
            model.set_params_flat(&perturbed).unwrap();
        }
        let (_, grad) = model.loss_and_grad(&series).unwrap();
        let params = model.params_flat();
        let h = 1e-5;
        for idx in 0..params.len() {
            let mut plus = params.clone();
            plus[idx] += h;
            let mut minus = params.clone();
            minus[idx] -= h;
            let mut m = model.clone();
            m.set_params_flat(&plus).unwrap();
            let lp = m.loss(&series).unwrap();
            m.set_params_flat(&minus).unwrap();
            let lm = m.loss(&series).unwrap();
            let numeric = (lp - lm) / (2.0 * h);
            let denom = grad[idx].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((grad[idx] - numeric).abs() / denom);
        }
    }
    verdict(
        "8",
        "gradient check",
        worst < 1e-4,
        &format!("max relative error {worst:.2e} (< 1e-4), both backbones"),
    );
}

fn walk_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path);
            }
        }
    }
    out.sort();
    out
}

#[test]
fn criterion_9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let base = ExperimentConfig {
        dataset: DatasetSpec::Motif {
            motif: MotifKind::Mediator,
            t_len: 500,
            lags: None,
            noise_std: 0.1,
        },
        predictor: linear_predictor(4, 300),
        clamp: ClampConfig::default(),
        selection: SelectionConfig::default(),
        run: RunConfig { n_seeds: 2, base_seed: 21, out_dir: Some(dir.path().join("a")) },
    };
    run_pipeline(&base).unwrap();
    let mut again = base.clone();
    again.run.out_dir = Some(dir.path().join("b"));
    run_pipeline(&again).unwrap();

    let a_files = walk_files(&dir.path().join("a"));
    let b_files = walk_files(&dir.path().join("b"));
    let rel = |files: &[PathBuf], root: &Path| -> Vec<PathBuf> {
        files.iter().map(|f| f.strip_prefix(root).unwrap().to_path_buf()).collect()
    };
    let same_tree = rel(&a_files, &dir.path().join("a")) == rel(&b_files, &dir.path().join("b"));
    let mut identical = same_tree;
    let mut compared = 0;
    if same_tree {
        for (a, b) in a_files.iter().zip(&b_files) {
            identical &= std::fs::read(a).unwrap() == std::fs::read(b).unwrap();
            compared += 1;
        }
    }
    verdict(
        "9",
        "determinism",
        identical && compared >= 12,
        &format!("{compared} artifact files byte-identical across reruns"),
    );
}

#[test]
fn lorenz96_mlp_sanity() {
    // Reported but only sanity-bounded: the MLP backbone on the chaotic
    // lattice. Exact figures are backbone- and budget-dependent.
    let mut f1s = Vec::new();
    let mut pods = Vec::new();
    for seed in 0..5u64 {
        let (raw, truth) = gen_lorenz96(10, 1000, 8.0, 0.05, seed).unwrap();
        let series = normalize_minmax(&raw);
        let config = PredictorConfig {
            seed: seed + 500,
            window: 3,
            ..mlp_predictor(3, 300)
        };
        let pred = train(&series, &config).unwrap();
        let policy = causal_insight::probing::ClampPolicy::with_t0(
            causal_insight::probing::ClampMode::PerVariableMax,
            pred.valid_from(),
        );
        let tensor =
            causal_insight::probing::influence_tensor(&pred, &series, &policy).unwrap();
        let (graph, _) =
            causal_insight::graphsel::select_graph(&pred, &series, &tensor, 0.4, 55, 5).unwrap();
        let report = full_report(&graph, &truth).unwrap();
        f1s.push(report.f1);
        pods.push(report.pod.unwrap());
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    verdict(
        "L",
        "lorenz96 mlp sanity",
        mean(&f1s) >= 0.35,
        &format!("mean F1 {:.3} (>= 0.35), mean PoD {:.3} over 5 seeds", mean(&f1s), mean(&pods)),
    );
}
