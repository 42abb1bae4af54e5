//! End-to-end experiment orchestration: configuration, per-seed pipeline
//! runs, ablations, and runtime benchmarking.
//!
//! A run executes generate/load, normalize, train, probe, select, and
//! evaluate once per seed, persisting every artifact. Stochastic stages
//! derive sub-seeds from `base_seed + seed_index` under fixed labels, so
//! ablation branches share their data and differ only where intended.
//! Reruns of the same configuration are byte-identical; wall-clock
//! timings are therefore reported in memory and on the console but never
//! written into run artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{
    gen_linear_var, gen_lorenz96, gen_motif, load_truth_json, save_truth_json, var_coeffs,
    GroundTruth, MotifKind,
};
use crate::error::{Error, Result};
use crate::graph::{save_graph_json, TemporalGraph};
use crate::graphsel::{conservative_argmin, qbic_score, rank_candidates, peak_reduce, select_graph, QbicTrace};
use crate::metrics::{correlation, full_report, structural_scores, CorrelationKind, StructuralReport};
use crate::predictor::{train, Backbone, PredictorConfig, TrainedPredictor, save_predictor};
use crate::probing::{influence_tensor, permute_tensor, save_tensor, ClampMode, ClampPolicy, InfluenceTensor};
use crate::series::{load_series_csv, normalize_minmax, save_series_csv, MultivariateSeries};

/// Deterministic sub-seed for a labelled stochastic stage (FNV-1a over
/// the label folded with the seed).
pub fn sub_seed(base: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for chunk in base.to_le_bytes() {
        h ^= u64::from(chunk);
        h = h.wrapping_mul(0x100000001b3);
    }
    for byte in label.bytes() {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// One nonzero VAR coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarEdge {
    pub lag: usize,
    pub src: usize,
    pub dst: usize,
    pub coeff: f64,
}

/// What data a run consumes: a generator or CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatasetSpec {
    Motif {
        motif: MotifKind,
        t_len: usize,
        #[serde(default)]
        lags: Option<Vec<usize>>,
        noise_std: f64,
    },
    Lorenz96 {
        n_vars: usize,
        t_len: usize,
        #[serde(default = "default_forcing")]
        forcing: f64,
        #[serde(default = "default_dt")]
        dt: f64,
        /// Set false to drop the lag-1 annotations from the truth.
        #[serde(default = "default_true")]
        lag_annotations: bool,
    },
    LinearVar {
        n_vars: usize,
        max_lag: usize,
        edges: Vec<VarEdge>,
        t_len: usize,
        noise_std: f64,
    },
    Csv {
        series_path: PathBuf,
        #[serde(default)]
        truth_path: Option<PathBuf>,
    },
}

fn default_forcing() -> f64 {
    8.0
}
fn default_dt() -> f64 {
    0.05
}
fn default_true() -> bool {
    true
}

impl DatasetSpec {
    /// Generate or load the raw series and its truth (if any).
    pub fn materialize(&self, data_seed: u64) -> Result<(MultivariateSeries, Option<GroundTruth>)> {
        match self {
            DatasetSpec::Motif { motif, t_len, lags, noise_std } => {
                let (series, truth) =
                    gen_motif(*motif, *t_len, lags.as_deref(), *noise_std, data_seed)?;
                Ok((series, Some(truth)))
            }
            DatasetSpec::Lorenz96 { n_vars, t_len, forcing, dt, lag_annotations } => {
                let (series, mut truth) = gen_lorenz96(*n_vars, *t_len, *forcing, *dt, data_seed)?;
                truth.has_lags = *lag_annotations;
                Ok((series, Some(truth)))
            }
            DatasetSpec::LinearVar { n_vars, max_lag, edges, t_len, noise_std } => {
                let entries: Vec<(usize, usize, usize, f64)> =
                    edges.iter().map(|e| (e.lag, e.src, e.dst, e.coeff)).collect();
                let coeffs = var_coeffs(*n_vars, *max_lag, &entries)?;
                let (series, truth) = gen_linear_var(&coeffs, *t_len, *noise_std, data_seed)?;
                Ok((series, Some(truth)))
            }
            DatasetSpec::Csv { series_path, truth_path } => {
                let series = load_series_csv(series_path)?;
                let truth = truth_path.as_ref().map(load_truth_json).transpose()?;
                Ok((series, truth))
            }
        }
    }
}

/// Clamp configuration; `t0 = None` resolves to the first index with a
/// full input window (`K - 1`), where every lagged response is observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClampConfig {
    pub mode: ClampMode,
    pub t0: Option<usize>,
}

impl Default for ClampConfig {
    fn default() -> Self {
        Self { mode: ClampMode::PerVariableMax, t0: None }
    }
}

impl ClampConfig {
    pub fn resolve(&self, window: usize) -> ClampPolicy {
        ClampPolicy { mode: self.mode, t0: self.t0.unwrap_or(window - 1) }
    }
}

/// Sparsity-selection configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    pub lambda: f64,
    /// Cap on the number of evaluated candidates; `None` = all eligible.
    pub m_max: Option<usize>,
    pub patience: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self { lambda: 0.4, m_max: None, patience: 5 }
    }
}

/// Run-level settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub n_seeds: usize,
    pub base_seed: u64,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { n_seeds: 1, base_seed: 0, out_dir: None }
    }
}

/// Complete experiment description, loadable from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub predictor: PredictorConfig,
    #[serde(default)]
    pub clamp: ClampConfig,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.predictor.validate()?;
        if self.run.n_seeds < 1 {
            return Err(Error::InvalidConfig("n_seeds must be >= 1".into()));
        }
        if !self.selection.lambda.is_finite() || self.selection.lambda <= 0.0 {
            return Err(Error::InvalidConfig("lambda must be positive".into()));
        }
        if self.selection.patience < 1 {
            return Err(Error::InvalidConfig("selection patience must be >= 1".into()));
        }
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let config: ExperimentConfig = toml::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }
}

/// Outcome of one seed of a run. `runtime_ms` is kept in memory only;
/// artifacts must be byte-identical across reruns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedRow {
    pub seed_index: usize,
    pub data_seed: u64,
    pub init_seed: u64,
    pub report: Option<StructuralReport>,
    pub selected_m: usize,
    pub qbic_trace: Vec<(usize, f64)>,
    pub probe_passes: u64,
    pub select_passes: u64,
    #[serde(skip)]
    pub runtime_ms: f64,
    pub error: Option<String>,
}

/// Mean and sample standard deviation of a metric across seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

pub fn mean_std(values: &[f64]) -> Option<MeanStd> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some(MeanStd { mean, std })
}

/// Aggregates across successful seeds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n_succeeded: usize,
    pub n_failed: usize,
    pub f1: Option<MeanStd>,
    pub precision: Option<MeanStd>,
    pub recall: Option<MeanStd>,
    pub tpr: Option<MeanStd>,
    pub fdr: Option<MeanStd>,
    pub shd_normalized: Option<MeanStd>,
    pub pod: Option<MeanStd>,
    pub selected_m: Option<MeanStd>,
}

impl AggregateReport {
    pub fn from_rows(rows: &[SeedRow]) -> Self {
        let ok: Vec<&SeedRow> = rows.iter().filter(|r| r.error.is_none()).collect();
        let scored: Vec<&StructuralReport> =
            ok.iter().filter_map(|r| r.report.as_ref()).collect();
        let pick = |f: &dyn Fn(&StructuralReport) -> f64| {
            mean_std(&scored.iter().map(|r| f(r)).collect::<Vec<_>>())
        };
        AggregateReport {
            n_succeeded: ok.len(),
            n_failed: rows.len() - ok.len(),
            f1: pick(&|r| r.f1),
            precision: pick(&|r| r.precision),
            recall: pick(&|r| r.recall),
            tpr: pick(&|r| r.tpr),
            fdr: pick(&|r| r.fdr),
            shd_normalized: pick(&|r| r.shd_normalized),
            pod: mean_std(
                &scored.iter().filter_map(|r| r.pod).collect::<Vec<_>>(),
            ),
            selected_m: mean_std(
                &ok.iter().map(|r| r.selected_m as f64).collect::<Vec<_>>(),
            ),
        }
    }
}

/// Full run record: per-seed rows plus aggregates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub rows: Vec<SeedRow>,
    pub aggregate: AggregateReport,
}

/// Everything shared by the probing/selection stages of one seed.
struct Prepared {
    raw: MultivariateSeries,
    normalized: MultivariateSeries,
    truth: Option<GroundTruth>,
    pred: TrainedPredictor,
}

fn prepare_seed(config: &ExperimentConfig, seed_index: usize) -> Result<Prepared> {
    let seed = config.run.base_seed.wrapping_add(seed_index as u64);
    let (raw, truth) = config.dataset.materialize(sub_seed(seed, "data"))?;
    let normalized = normalize_minmax(&raw);
    let predictor_config =
        PredictorConfig { seed: sub_seed(seed, "init"), ..config.predictor.clone() };
    let pred = train(&normalized, &predictor_config)?;
    Ok(Prepared { raw, normalized, truth, pred })
}

fn probe_seed(
    prep: &Prepared,
    policy: &ClampPolicy,
) -> Result<(InfluenceTensor, u64)> {
    let before = prep.pred.forward_passes();
    let tensor = influence_tensor(&prep.pred, &prep.normalized, policy)?;
    Ok((tensor, prep.pred.forward_passes() - before))
}

fn select_seed(
    config: &ExperimentConfig,
    prep: &Prepared,
    tensor: &InfluenceTensor,
) -> Result<(TemporalGraph, QbicTrace, u64)> {
    let eligible = rank_candidates(&peak_reduce(tensor)).len();
    let m_max = config.selection.m_max.map_or(eligible, |m| m.min(eligible));
    let before = prep.pred.forward_passes();
    let (graph, trace) = select_graph(
        &prep.pred,
        &prep.normalized,
        tensor,
        config.selection.lambda,
        m_max,
        config.selection.patience,
    )?;
    Ok((graph, trace, prep.pred.forward_passes() - before))
}

fn evaluate_seed(prep: &Prepared, graph: &TemporalGraph) -> Result<Option<StructuralReport>> {
    prep.truth.as_ref().map(|truth| full_report(graph, truth)).transpose()
}

fn seed_dir(out_dir: &Path, seed_index: usize) -> PathBuf {
    out_dir.join(format!("seed_{seed_index:03}"))
}

#[allow(clippy::too_many_arguments)]
fn persist_seed(
    out_dir: &Path,
    seed_index: usize,
    prep: &Prepared,
    policy: &ClampPolicy,
    tensor: &InfluenceTensor,
    graph: &TemporalGraph,
    trace: &QbicTrace,
    report: Option<&StructuralReport>,
) -> Result<()> {
    let dir = seed_dir(out_dir, seed_index);
    std::fs::create_dir_all(&dir)?;
    save_series_csv(&prep.raw, dir.join("series.csv"))?;
    if let Some(truth) = &prep.truth {
        save_truth_json(truth, dir.join("truth.json"))?;
    }
    save_predictor(&prep.pred, dir.join("predictor.json"))?;
    save_tensor(tensor, policy, dir.join("tensor.bin"))?;
    save_graph_json(graph, dir.join("graph.json"))?;
    write_trace_csv(trace, dir.join("trace.csv"))?;
    if let Some(report) = report {
        std::fs::write(
            dir.join("report.json"),
            serde_json::to_string_pretty(report)? + "\n",
        )?;
    }
    Ok(())
}

/// Trace CSV: `m,qbic`, one row per evaluated sparsity level.
pub fn write_trace_csv<P: AsRef<Path>>(trace: &QbicTrace, path: P) -> Result<()> {
    let mut text = String::from("m,qbic\n");
    for (m, v) in &trace.entries {
        text.push_str(&format!("{m},{v}\n"));
    }
    std::fs::write(path.as_ref(), text)?;
    Ok(())
}

fn run_seed(config: &ExperimentConfig, seed_index: usize) -> SeedRow {
    let start = Instant::now();
    let seed = config.run.base_seed.wrapping_add(seed_index as u64);
    let mut row = SeedRow {
        seed_index,
        data_seed: sub_seed(seed, "data"),
        init_seed: sub_seed(seed, "init"),
        report: None,
        selected_m: 0,
        qbic_trace: Vec::new(),
        probe_passes: 0,
        select_passes: 0,
        runtime_ms: 0.0,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let prep = prepare_seed(config, seed_index)?;
        let policy = config.clamp.resolve(config.predictor.window);
        let (tensor, probe_passes) = probe_seed(&prep, &policy)?;
        let (graph, trace, select_passes) = select_seed(config, &prep, &tensor)?;
        let report = evaluate_seed(&prep, &graph)?;
        if let Some(out_dir) = &config.run.out_dir {
            persist_seed(
                out_dir,
                seed_index,
                &prep,
                &policy,
                &tensor,
                &graph,
                &trace,
                report.as_ref(),
            )?;
        }
        row.report = report;
        row.selected_m = trace.selected_m;
        row.qbic_trace = trace.entries;
        row.probe_passes = probe_passes;
        row.select_passes = select_passes;
        Ok(())
    })();
    if let Err(e) = outcome {
        row.error = Some(e.to_string());
    }
    row.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    row
}

/// Execute the full pipeline for every seed. Fails only if all seeds
/// fail; individual failures are recorded in their rows.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    if let Some(dir) = &config.run.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let rows: Vec<SeedRow> = (0..config.run.n_seeds)
        .into_par_iter()
        .map(|idx| run_seed(config, idx))
        .collect();
    finalize_run(config, rows)
}

fn finalize_run(config: &ExperimentConfig, rows: Vec<SeedRow>) -> Result<RunReport> {
    if rows.iter().all(|r| r.error.is_some()) {
        let first = rows.iter().find_map(|r| r.error.clone()).unwrap_or_default();
        return Err(Error::Pipeline(format!(
            "all {} seeds failed; first error: {first}",
            rows.len()
        )));
    }
    let aggregate = AggregateReport::from_rows(&rows);
    let report = RunReport { rows, aggregate };
    if let Some(dir) = &config.run.out_dir {
        std::fs::write(
            dir.join("report.json"),
            serde_json::to_string_pretty(&report)? + "\n",
        )?;
        write_report_csv(&report, dir.join("report.csv"))?;
    }
    Ok(report)
}

/// Per-seed metric table (one row per seed).
pub fn write_report_csv<P: AsRef<Path>>(report: &RunReport, path: P) -> Result<()> {
    let mut text = String::from(
        "seed_index,f1,precision,recall,tpr,fdr,shd_raw,shd_normalized,pod,selected_m,probe_passes,select_passes,error\n",
    );
    for row in &report.rows {
        let fmt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v}"));
        let r = row.report.as_ref();
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.seed_index,
            fmt(r.map(|r| r.f1)),
            fmt(r.map(|r| r.precision)),
            fmt(r.map(|r| r.recall)),
            fmt(r.map(|r| r.tpr)),
            fmt(r.map(|r| r.fdr)),
            r.map_or(String::new(), |r| r.shd_raw.to_string()),
            fmt(r.map(|r| r.shd_normalized)),
            fmt(r.and_then(|r| r.pod)),
            row.selected_m,
            row.probe_passes,
            row.select_passes,
            row.error.as_deref().unwrap_or(""),
        ));
    }
    std::fs::write(path.as_ref(), text)?;
    Ok(())
}

/// Result of the permuted-signal control: selection runs twice per seed,
/// once on the probed tensor and once on its permutation, with identical
/// downstream settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PermutationAblation {
    pub original: RunReport,
    pub permuted: RunReport,
    /// Per-seed `f1(original) - f1(permuted)` where both succeeded.
    pub f1_deltas: Vec<f64>,
    pub mean_f1_delta: Option<f64>,
}

pub fn ablate_permuted_signal(config: &ExperimentConfig) -> Result<PermutationAblation> {
    config.validate()?;
    let results: Vec<(SeedRow, SeedRow)> = (0..config.run.n_seeds)
        .into_par_iter()
        .map(|idx| permuted_seed(config, idx))
        .collect();
    let (orig_rows, perm_rows): (Vec<SeedRow>, Vec<SeedRow>) = results.into_iter().unzip();

    let mut deltas = Vec::new();
    for (o, p) in orig_rows.iter().zip(&perm_rows) {
        if let (Some(ro), Some(rp)) = (&o.report, &p.report) {
            deltas.push(ro.f1 - rp.f1);
        }
    }
    let mean = mean_std(&deltas).map(|m| m.mean);

    let original = RunReport {
        aggregate: AggregateReport::from_rows(&orig_rows),
        rows: orig_rows,
    };
    let permuted = RunReport {
        aggregate: AggregateReport::from_rows(&perm_rows),
        rows: perm_rows,
    };
    if original.rows.iter().all(|r| r.error.is_some()) {
        return Err(Error::Pipeline("all seeds failed in permutation ablation".into()));
    }
    let ablation =
        PermutationAblation { original, permuted, f1_deltas: deltas, mean_f1_delta: mean };
    if let Some(dir) = &config.run.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join("permutation.json"),
            serde_json::to_string_pretty(&ablation)? + "\n",
        )?;
        let mut csv = String::from("seed_index,f1_original,f1_permuted,delta\n");
        for (o, p) in ablation.original.rows.iter().zip(&ablation.permuted.rows) {
            if let (Some(ro), Some(rp)) = (&o.report, &p.report) {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    o.seed_index,
                    ro.f1,
                    rp.f1,
                    ro.f1 - rp.f1
                ));
            }
        }
        std::fs::write(dir.join("permutation.csv"), csv)?;
    }
    Ok(ablation)
}

fn permuted_seed(config: &ExperimentConfig, seed_index: usize) -> (SeedRow, SeedRow) {
    let seed = config.run.base_seed.wrapping_add(seed_index as u64);
    let mut orig = SeedRow {
        seed_index,
        data_seed: sub_seed(seed, "data"),
        init_seed: sub_seed(seed, "init"),
        report: None,
        selected_m: 0,
        qbic_trace: Vec::new(),
        probe_passes: 0,
        select_passes: 0,
        runtime_ms: 0.0,
        error: None,
    };
    let mut perm = orig.clone();
    let outcome = (|| -> Result<()> {
        let prep = prepare_seed(config, seed_index)?;
        let policy = config.clamp.resolve(config.predictor.window);
        let (tensor, probe_passes) = probe_seed(&prep, &policy)?;
        orig.probe_passes = probe_passes;
        perm.probe_passes = probe_passes;

        let (graph, trace, passes) = select_seed(config, &prep, &tensor)?;
        orig.report = evaluate_seed(&prep, &graph)?;
        orig.selected_m = trace.selected_m;
        orig.qbic_trace = trace.entries;
        orig.select_passes = passes;

        let shuffled = permute_tensor(&tensor, sub_seed(seed, "permute"));
        let (p_graph, p_trace, p_passes) = select_seed(config, &prep, &shuffled)?;
        perm.report = evaluate_seed(&prep, &p_graph)?;
        perm.selected_m = p_trace.selected_m;
        perm.qbic_trace = p_trace.entries;
        perm.select_passes = p_passes;
        Ok(())
    })();
    if let Err(e) = outcome {
        let msg = e.to_string();
        orig.error = Some(msg.clone());
        perm.error = Some(msg);
    }
    (orig, perm)
}

/// Clamp-magnitude sweep: the full pipeline per grid point with a fixed
/// clamp value, sharing data and training across points within a seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClampSweep {
    /// `(x_star, report)` per grid point.
    pub points: Vec<(f64, RunReport)>,
}

pub fn ablate_clamp_sweep(config: &ExperimentConfig, grid: &[f64]) -> Result<ClampSweep> {
    config.validate()?;
    if grid.is_empty() {
        return Err(Error::InvalidConfig("clamp sweep grid is empty".into()));
    }
    if let Some(&bad) = grid.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidConfig(format!("clamp value {bad} outside [0, 1]")));
    }

    // One prepared pipeline per seed, probed once per grid point.
    let per_seed: Vec<Vec<SeedRow>> = (0..config.run.n_seeds)
        .into_par_iter()
        .map(|idx| clamp_sweep_seed(config, idx, grid))
        .collect();

    let mut points = Vec::with_capacity(grid.len());
    for (g, &x_star) in grid.iter().enumerate() {
        let rows: Vec<SeedRow> = per_seed.iter().map(|rows| rows[g].clone()).collect();
        points.push((
            x_star,
            RunReport { aggregate: AggregateReport::from_rows(&rows), rows },
        ));
    }
    let sweep = ClampSweep { points };
    if let Some(dir) = &config.run.out_dir {
        std::fs::create_dir_all(dir)?;
        let mut csv = String::from("x_star,seed_index,f1,pod,selected_m,error\n");
        for (x, report) in &sweep.points {
            for row in &report.rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    x,
                    row.seed_index,
                    row.report.as_ref().map_or(String::new(), |r| r.f1.to_string()),
                    row.report.as_ref().and_then(|r| r.pod).map_or(String::new(), |p| p.to_string()),
                    row.selected_m,
                    row.error.as_deref().unwrap_or(""),
                ));
            }
        }
        std::fs::write(dir.join("clamp_sweep.csv"), csv)?;
        std::fs::write(
            dir.join("clamp_sweep.json"),
            serde_json::to_string_pretty(&sweep)? + "\n",
        )?;
    }
    Ok(sweep)
}

fn clamp_sweep_seed(config: &ExperimentConfig, seed_index: usize, grid: &[f64]) -> Vec<SeedRow> {
    let seed = config.run.base_seed.wrapping_add(seed_index as u64);
    let template = SeedRow {
        seed_index,
        data_seed: sub_seed(seed, "data"),
        init_seed: sub_seed(seed, "init"),
        report: None,
        selected_m: 0,
        qbic_trace: Vec::new(),
        probe_passes: 0,
        select_passes: 0,
        runtime_ms: 0.0,
        error: None,
    };
    let prep = match prepare_seed(config, seed_index) {
        Ok(p) => p,
        Err(e) => {
            let mut row = template;
            row.error = Some(e.to_string());
            return vec![row; grid.len()];
        }
    };
    grid.iter()
        .map(|&x_star| {
            let mut row = template.clone();
            let policy = ClampPolicy {
                mode: ClampMode::Fixed(x_star),
                t0: config.clamp.t0.unwrap_or(config.predictor.window - 1),
            };
            let outcome = (|| -> Result<()> {
                let (tensor, probe_passes) = probe_seed(&prep, &policy)?;
                let (graph, trace, select_passes) = select_seed(config, &prep, &tensor)?;
                row.report = evaluate_seed(&prep, &graph)?;
                row.selected_m = trace.selected_m;
                row.qbic_trace = trace.entries;
                row.probe_passes = probe_passes;
                row.select_passes = select_passes;
                Ok(())
            })();
            if let Err(e) = outcome {
                row.error = Some(e.to_string());
            }
            row
        })
        .collect()
}

/// Per-seed scoring-vs-accuracy diagnostics for the selection criterion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QbicCorrelationSeed {
    pub seed_index: usize,
    /// Pearson correlation of (score, F1) across the full trace; absent
    /// when degenerate (constant inputs).
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    /// `F1(selected m) / max_m F1` (1.0 when the maximum is 0).
    pub f1_ratio: f64,
    pub selected_m: usize,
    pub error: Option<String>,
}

/// Aggregated correlation ablation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QbicCorrelationReport {
    pub seeds: Vec<QbicCorrelationSeed>,
    pub mean_pearson: Option<f64>,
    pub mean_spearman: Option<f64>,
    pub mean_f1_ratio: Option<f64>,
}

/// Evaluate the full score trace (no early stop) together with F1 at
/// every sparsity level, and report how well minimizing the score tracks
/// the best achievable F1.
pub fn ablate_qbic_correlation(config: &ExperimentConfig) -> Result<QbicCorrelationReport> {
    config.validate()?;
    let seeds: Vec<QbicCorrelationSeed> = (0..config.run.n_seeds)
        .into_par_iter()
        .map(|idx| qbic_correlation_seed(config, idx))
        .collect();
    if seeds.iter().all(|s| s.error.is_some()) {
        return Err(Error::Pipeline("all seeds failed in correlation ablation".into()));
    }
    let collect = |f: &dyn Fn(&QbicCorrelationSeed) -> Option<f64>| {
        let vals: Vec<f64> = seeds.iter().filter(|s| s.error.is_none()).filter_map(f).collect();
        mean_std(&vals).map(|m| m.mean)
    };
    let report = QbicCorrelationReport {
        mean_pearson: collect(&|s| s.pearson),
        mean_spearman: collect(&|s| s.spearman),
        mean_f1_ratio: collect(&|s| {
            if s.error.is_none() {
                Some(s.f1_ratio)
            } else {
                None
            }
        }),
        seeds,
    };
    if let Some(dir) = &config.run.out_dir {
        std::fs::create_dir_all(dir)?;
        let mut csv = String::from("seed_index,pearson,spearman,f1_ratio,selected_m,error\n");
        for s in &report.seeds {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.seed_index,
                s.pearson.map_or(String::new(), |v| v.to_string()),
                s.spearman.map_or(String::new(), |v| v.to_string()),
                s.f1_ratio,
                s.selected_m,
                s.error.as_deref().unwrap_or(""),
            ));
        }
        std::fs::write(dir.join("qbic_correlation.csv"), csv)?;
        std::fs::write(
            dir.join("qbic_correlation.json"),
            serde_json::to_string_pretty(&report)? + "\n",
        )?;
    }
    Ok(report)
}

fn qbic_correlation_seed(config: &ExperimentConfig, seed_index: usize) -> QbicCorrelationSeed {
    let mut out = QbicCorrelationSeed {
        seed_index,
        pearson: None,
        spearman: None,
        f1_ratio: 0.0,
        selected_m: 0,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let prep = prepare_seed(config, seed_index)?;
        let truth = prep
            .truth
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("correlation ablation needs ground truth".into()))?
            .clone();
        let policy = config.clamp.resolve(config.predictor.window);
        let (tensor, _) = probe_seed(&prep, &policy)?;

        let candidates = rank_candidates(&peak_reduce(&tensor));
        let eligible = candidates.len();
        let m_max = config.selection.m_max.map_or(eligible, |m| m.min(eligible));
        let mut scores = Vec::with_capacity(m_max);
        let mut f1s = Vec::with_capacity(m_max);
        let mut trace = Vec::with_capacity(m_max);
        for m in 1..=m_max {
            let graph = TemporalGraph::new(tensor.n_vars(), candidates[..m].to_vec())?;
            let score =
                qbic_score(&prep.pred, &prep.normalized, &graph, config.selection.lambda)?;
            let f1 = structural_scores(&graph, &truth.graph)?.f1;
            scores.push(score);
            f1s.push(f1);
            trace.push((m, score));
        }
        if trace.is_empty() {
            return Err(Error::InsufficientData("no candidates to evaluate".into()));
        }
        out.selected_m = conservative_argmin(&trace);
        out.pearson = correlation(&scores, &f1s, CorrelationKind::Pearson).ok();
        out.spearman = correlation(&scores, &f1s, CorrelationKind::Spearman).ok();
        let max_f1 = f1s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        out.f1_ratio = if max_f1 <= 0.0 { 1.0 } else { f1s[out.selected_m - 1] / max_f1 };
        Ok(())
    })();
    if let Err(e) = outcome {
        out.error = Some(e.to_string());
    }
    out
}

/// One benchmark measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub n_vars: usize,
    pub repeat: usize,
    pub probe_ms: f64,
    pub select_ms: f64,
    pub probe_passes: u64,
    pub select_passes: u64,
    pub qbic_evaluations: usize,
}

/// Wall-clock scaling of probe + select with the variable count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// `(n_vars, probe_ms mean/std, select_ms mean/std)` per grid point.
    pub summary: Vec<(usize, MeanStd, MeanStd)>,
}

/// Benchmark probing and selection on ring-coupled VAR systems of
/// increasing size. Verifies the forward-pass ledger on every run:
/// probing costs exactly `N + 1` passes and selection one pass per score
/// evaluation.
pub fn bench_runtime(n_vars_grid: &[usize], repeats: usize, t_len: usize) -> Result<BenchReport> {
    if n_vars_grid.is_empty() || repeats == 0 {
        return Err(Error::InvalidConfig("bench needs a grid and repeats >= 1".into()));
    }
    let mut rows = Vec::new();
    for &n in n_vars_grid {
        for repeat in 0..repeats {
            // Ring topology: i -> i+1 with self-loops; stable by
            // construction (|0.5| + |0.35| < 1 on the circulant spectrum).
            let mut entries: Vec<(usize, usize, usize, f64)> = Vec::new();
            for i in 0..n {
                entries.push((1, i, i, 0.5));
                entries.push((1, i, (i + 1) % n, 0.35));
            }
            let coeffs = var_coeffs(n, 1, &entries)?;
            let (raw, _) =
                gen_linear_var(&coeffs, t_len, 0.1, sub_seed(repeat as u64, "bench"))?;
            let series = normalize_minmax(&raw);
            let pred_config = PredictorConfig {
                backbone: Backbone::Linear,
                window: 3,
                learning_rate: 0.2,
                max_epochs: 300,
                patience: 20,
                seed: repeat as u64,
                ..PredictorConfig::default()
            };
            let pred = train(&series, &pred_config)?;
            let policy = ClampPolicy::with_t0(ClampMode::PerVariableMax, pred.valid_from());

            let before_probe = pred.forward_passes();
            let probe_start = Instant::now();
            let tensor = influence_tensor(&pred, &series, &policy)?;
            let probe_ms = probe_start.elapsed().as_secs_f64() * 1e3;
            let probe_passes = pred.forward_passes() - before_probe;

            let eligible = rank_candidates(&peak_reduce(&tensor)).len();
            let before_select = pred.forward_passes();
            let select_start = Instant::now();
            let (_, trace) = select_graph(&pred, &series, &tensor, 0.4, eligible, 5)?;
            let select_ms = select_start.elapsed().as_secs_f64() * 1e3;
            let select_passes = pred.forward_passes() - before_select;

            if probe_passes != (n as u64 + 1) || select_passes != trace.entries.len() as u64 {
                return Err(Error::Pipeline(format!(
                    "forward-pass ledger mismatch at N={n}: probe {probe_passes} (expected {}), select {select_passes} (expected {})",
                    n + 1,
                    trace.entries.len()
                )));
            }
            rows.push(BenchRow {
                n_vars: n,
                repeat,
                probe_ms,
                select_ms,
                probe_passes,
                select_passes,
                qbic_evaluations: trace.entries.len(),
            });
        }
    }
    let mut summary = Vec::new();
    for &n in n_vars_grid {
        let probe: Vec<f64> =
            rows.iter().filter(|r| r.n_vars == n).map(|r| r.probe_ms).collect();
        let select: Vec<f64> =
            rows.iter().filter(|r| r.n_vars == n).map(|r| r.select_ms).collect();
        summary.push((n, mean_std(&probe).unwrap(), mean_std(&select).unwrap()));
    }
    Ok(BenchReport { rows, summary })
}

/// Bench table as CSV (`bench.csv`): per-measurement rows.
pub fn write_bench_csv<P: AsRef<Path>>(report: &BenchReport, path: P) -> Result<()> {
    let mut text = String::from(
        "n_vars,repeat,probe_ms,select_ms,probe_passes,select_passes,qbic_evaluations\n",
    );
    for r in &report.rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n_vars, r.repeat, r.probe_ms, r.select_ms, r.probe_passes, r.select_passes, r.qbic_evaluations
        ));
    }
    std::fs::write(path.as_ref(), text)?;
    Ok(())
}
