//! Command-line pipeline: generate data, train predictors, probe them,
//! select graphs, evaluate against ground truth, and run experiments.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use causal_insight::datagen::{load_truth_json, save_truth_json, GroundTruth};
use causal_insight::graph::{load_graph_json, save_graph_json};
use causal_insight::graphsel::{peak_reduce, rank_candidates, select_graph};
use causal_insight::harness::{
    ablate_clamp_sweep, ablate_permuted_signal, ablate_qbic_correlation, bench_runtime,
    run_pipeline, write_bench_csv, write_trace_csv, ExperimentConfig,
};
use causal_insight::metrics::full_report;
use causal_insight::predictor::{load_predictor, save_predictor, train};
use causal_insight::probing::{influence_tensor, load_tensor, save_tensor, ClampMode, ClampPolicy};
use causal_insight::series::{load_series_csv, normalize_minmax, save_series_csv};

#[derive(Parser)]
#[command(name = "causal-insight", version, about = "Directed lagged influence graphs from trained temporal predictors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Override [run].base_seed from the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Override [run].out_dir from the config file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override [selection].lambda from the config file.
    #[arg(long)]
    lambda: Option<f64>,
}

impl Overrides {
    fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            config.run.base_seed = seed;
        }
        if let Some(out) = &self.out {
            config.run.out_dir = Some(out.clone());
        }
        if let Some(lambda) = self.lambda {
            config.selection.lambda = lambda;
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ClampModeArg {
    PerVariableMax,
    Zero,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum AblationKind {
    Permuted,
    ClampSweep,
    QbicCorrelation,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset: <name>_series.csv + <name>_truth.json.
    Generate {
        /// Experiment config (the [dataset] section drives generation).
        #[arg(long)]
        config: PathBuf,
        /// Base name of the emitted files.
        #[arg(long, default_value = "dataset")]
        name: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train a predictor on a series CSV and write the predictor file.
    Train {
        #[arg(long)]
        series: PathBuf,
        /// Experiment config (the [predictor] section is used).
        #[arg(long)]
        config: PathBuf,
        /// Output predictor file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Probe a predictor with per-variable clamps and write the tensor.
    Probe {
        #[arg(long)]
        predictor: PathBuf,
        #[arg(long)]
        series: PathBuf,
        /// Output tensor file (binary; a .meta.json sidecar is added).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "per-variable-max")]
        clamp: ClampModeArg,
        /// Clamp value for --clamp fixed.
        #[arg(long)]
        x_star: Option<f64>,
        /// Clamp time index; defaults to the first fully-windowed index.
        #[arg(long)]
        t0: Option<usize>,
    },
    /// Select a graph from a probed tensor and write graph + trace.
    Select {
        #[arg(long)]
        predictor: PathBuf,
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        tensor: PathBuf,
        /// Output graph JSON.
        #[arg(long)]
        out: PathBuf,
        /// Output trace CSV (default: <out>.trace.csv).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 0.4)]
        lambda: f64,
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long, default_value_t = 5)]
        patience: usize,
    },
    /// Score a predicted graph against a ground truth.
    Evaluate {
        /// Predicted graph JSON.
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth JSON (graph plus optional has_lags flag).
        #[arg(long)]
        truth: PathBuf,
        /// Output prefix: writes <prefix>.csv and <prefix>.json.
        #[arg(long)]
        out: PathBuf,
        /// Drop self-loops from both graphs before scoring.
        #[arg(long)]
        no_self_loops: bool,
    },
    /// Run the full per-seed pipeline described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run an ablation: permuted signal, clamp sweep, or score/F1 correlation.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        kind: AblationKind,
        /// Clamp values for --kind clamp-sweep (comma separated).
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Measure probe + select runtime across variable counts.
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        n_vars: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, default_value_t = 400)]
        t_len: usize,
        /// Output CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate { config, name, overrides } => {
            let mut config = ExperimentConfig::load(&config)?;
            overrides.apply(&mut config);
            let seed = causal_insight::harness::sub_seed(config.run.base_seed, "data");
            let (series, truth) = config.dataset.materialize(seed)?;
            let dir = config.run.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir)?;
            let series_path = dir.join(format!("{name}_series.csv"));
            save_series_csv(&series, &series_path)?;
            println!("wrote {}", series_path.display());
            if let Some(truth) = truth {
                let truth_path = dir.join(format!("{name}_truth.json"));
                save_truth_json(&truth, &truth_path)?;
                println!("wrote {}", truth_path.display());
            }
            Ok(())
        }
        Command::Train { series, config, out, seed } => {
            let config = ExperimentConfig::load(&config)?;
            let mut predictor_config = config.predictor;
            if let Some(seed) = seed {
                predictor_config.seed = seed;
            }
            let raw = load_series_csv(&series)?;
            let normalized = normalize_minmax(&raw);
            let pred = train(&normalized, &predictor_config)?;
            save_predictor(&pred, &out)?;
            println!(
                "trained {} epochs, final loss {:.6e}; wrote {}",
                pred.loss_trace().len(),
                pred.final_loss(),
                out.display()
            );
            Ok(())
        }
        Command::Probe { predictor, series, out, clamp, x_star, t0 } => {
            let pred = load_predictor(&predictor)?;
            let raw = load_series_csv(&series)?;
            let normalized = normalize_minmax(&raw);
            let mode = match clamp {
                ClampModeArg::PerVariableMax => ClampMode::PerVariableMax,
                ClampModeArg::Zero => ClampMode::Zero,
                ClampModeArg::Fixed => ClampMode::Fixed(
                    x_star.context("--clamp fixed requires --x-star")?,
                ),
            };
            let policy = ClampPolicy { mode, t0: t0.unwrap_or(pred.valid_from()) };
            let tensor = influence_tensor(&pred, &normalized, &policy)?;
            save_tensor(&tensor, &policy, &out)?;
            println!(
                "probed {} variables with {} forward passes; wrote {}",
                pred.n_vars(),
                pred.forward_passes(),
                out.display()
            );
            Ok(())
        }
        Command::Select { predictor, series, tensor, out, trace, lambda, m_max, patience } => {
            let pred = load_predictor(&predictor)?;
            let raw = load_series_csv(&series)?;
            let normalized = normalize_minmax(&raw);
            let (tensor, _) = load_tensor(&tensor)?;
            let eligible = rank_candidates(&peak_reduce(&tensor)).len();
            let m_max = m_max.map_or(eligible, |m| m.min(eligible));
            let (graph, qbic_trace) =
                select_graph(&pred, &normalized, &tensor, lambda, m_max, patience)?;
            save_graph_json(&graph, &out)?;
            let trace_path = trace.unwrap_or_else(|| {
                let mut p = out.as_os_str().to_os_string();
                p.push(".trace.csv");
                PathBuf::from(p)
            });
            write_trace_csv(&qbic_trace, &trace_path)?;
            println!(
                "selected m = {} of {} candidates; wrote {} and {}",
                qbic_trace.selected_m,
                eligible,
                out.display(),
                trace_path.display()
            );
            Ok(())
        }
        Command::Evaluate { pred, truth, out, no_self_loops } => {
            let pred_graph = load_graph_json(&pred)?;
            let truth = load_truth_json(&truth)?;
            let (pred_graph, truth) = if no_self_loops {
                (
                    pred_graph.without_self_loops(),
                    GroundTruth {
                        graph: truth.graph.without_self_loops(),
                        has_lags: truth.has_lags,
                    },
                )
            } else {
                (pred_graph, truth)
            };
            let report = full_report(&pred_graph, &truth)?;
            let json_path = out.with_extension("json");
            let csv_path = out.with_extension("csv");
            std::fs::write(&json_path, serde_json::to_string_pretty(&report)? + "\n")?;
            let mut csv =
                String::from("precision,recall,f1,tpr,fdr,shd_raw,shd_normalized,pod\n");
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                report.precision,
                report.recall,
                report.f1,
                report.tpr,
                report.fdr,
                report.shd_raw,
                report.shd_normalized,
                report.pod.map_or(String::new(), |p| p.to_string()),
            ));
            std::fs::write(&csv_path, csv)?;
            println!(
                "f1 = {:.4}, shd = {}; wrote {} and {}",
                report.f1,
                report.shd_raw,
                json_path.display(),
                csv_path.display()
            );
            Ok(())
        }
        Command::Run { config, overrides } => {
            let mut config = ExperimentConfig::load(&config)?;
            overrides.apply(&mut config);
            let report = run_pipeline(&config)?;
            let agg = &report.aggregate;
            println!(
                "{} of {} seeds succeeded",
                agg.n_succeeded,
                agg.n_succeeded + agg.n_failed
            );
            if let Some(f1) = agg.f1 {
                println!("f1  = {:.4} +- {:.4}", f1.mean, f1.std);
            }
            if let Some(pod) = agg.pod {
                println!("pod = {:.4} +- {:.4}", pod.mean, pod.std);
            }
            let total_ms: f64 = report.rows.iter().map(|r| r.runtime_ms).sum();
            eprintln!("total runtime: {total_ms:.0} ms (not persisted)");
            if agg.n_failed > 0 {
                bail!("{} seed(s) failed", agg.n_failed);
            }
            Ok(())
        }
        Command::Ablate { config, kind, grid, overrides } => {
            let mut config = ExperimentConfig::load(&config)?;
            overrides.apply(&mut config);
            match kind {
                AblationKind::Permuted => {
                    let ablation = ablate_permuted_signal(&config)?;
                    let orig = ablation.original.aggregate.f1.map(|m| m.mean);
                    let perm = ablation.permuted.aggregate.f1.map(|m| m.mean);
                    println!(
                        "mean f1: original {:?} vs permuted {:?} (delta {:?})",
                        orig, perm, ablation.mean_f1_delta
                    );
                }
                AblationKind::ClampSweep => {
                    let grid = if grid.is_empty() {
                        vec![0.0, 0.25, 0.5, 0.75, 1.0]
                    } else {
                        grid
                    };
                    let sweep = ablate_clamp_sweep(&config, &grid)?;
                    for (x, report) in &sweep.points {
                        println!(
                            "x* = {x:<5}: f1 = {:?}",
                            report.aggregate.f1.map(|m| m.mean)
                        );
                    }
                }
                AblationKind::QbicCorrelation => {
                    let report = ablate_qbic_correlation(&config)?;
                    println!(
                        "pearson {:?}, spearman {:?}, f1 ratio {:?}",
                        report.mean_pearson, report.mean_spearman, report.mean_f1_ratio
                    );
                }
            }
            Ok(())
        }
        Command::Bench { n_vars, repeats, t_len, out } => {
            let report = bench_runtime(&n_vars, repeats, t_len)?;
            for (n, probe, select) in &report.summary {
                println!(
                    "N = {n:<3} probe {:8.2} +- {:6.2} ms  select {:8.2} +- {:6.2} ms",
                    probe.mean, probe.std, select.mean, select.std
                );
            }
            if let Some(path) = out {
                write_bench_csv(&report, &path)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}
