//! Candidate ranking and sparsity selection over the influence tensor.
//!
//! The tensor is reduced to per-pair peaks and peak lags; candidates are
//! ranked by peak magnitude with one dominant direction per unordered
//! pair; prefixes of the ranking are scored with a BIC-style criterion
//! (lower is better) under parent-only masking of the frozen predictor,
//! and the sparsity level at the first stable minimum is selected.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LaggedEdge, TemporalGraph};
use crate::predictor::TrainedPredictor;
use crate::probing::InfluenceTensor;
use crate::series::MultivariateSeries;

/// Guard against `log(0)` on perfectly fit data.
pub const MSE_FLOOR: f64 = 1e-12;

/// Per-pair peak influence and the delay at which it occurs.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakSummary {
    /// `peak[i][j]` = max over valid `t` of `S[i][j][t]`.
    pub peak: Array2<f64>,
    /// Delay of the (first) attaining index, relative to the clamp time
    /// `t0`. Negative only for all-zero slices with `t0` past the first
    /// valid index.
    pub lag: Array2<i64>,
}

/// Reduce the tensor over time: per-pair max and first attaining index.
pub fn peak_reduce(tensor: &InfluenceTensor) -> PeakSummary {
    let n = tensor.n_vars();
    let t_len = tensor.t_len();
    let from = tensor.valid_from().min(t_len.saturating_sub(1));
    let mut peak = Array2::zeros((n, n));
    let mut lag = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut best_v = f64::NEG_INFINITY;
            let mut best_t = from;
            for t in from..t_len {
                let v = tensor.get(i, j, t);
                if v > best_v {
                    best_v = v;
                    best_t = t;
                }
            }
            peak[[i, j]] = best_v.max(0.0);
            lag[[i, j]] = best_t as i64 - tensor.t0() as i64;
        }
    }
    PeakSummary { peak, lag }
}

/// Rank candidate edges by descending peak.
///
/// Per unordered pair only the direction with the larger peak is eligible
/// (ties go to the smaller source index); self-loops compete in the same
/// ranking. Entries with zero peak produced no response at all and are
/// not candidates. Ties in the ordering are broken by `(src, dst)`.
pub fn rank_candidates(summary: &PeakSummary) -> Vec<LaggedEdge> {
    let n = summary.peak.nrows();
    let mut edges = Vec::new();
    let mut push = |i: usize, j: usize| {
        if summary.peak[[i, j]] > 0.0 {
            edges.push(LaggedEdge::new(
                i,
                j,
                summary.lag[[i, j]].max(0) as usize,
                summary.peak[[i, j]],
            ));
        }
    };
    for i in 0..n {
        push(i, i);
        for j in (i + 1)..n {
            if summary.peak[[i, j]] >= summary.peak[[j, i]] {
                push(i, j);
            } else {
                push(j, i);
            }
        }
    }
    edges.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("peaks are finite")
            .then(a.src.cmp(&b.src))
            .then(a.dst.cmp(&b.dst))
    });
    edges
}

/// Evaluate the score from per-target MSEs and in-degrees:
/// `sum_j [ n ln(MSE_j) + lambda k_j ln(n) ]` (natural log).
pub fn qbic_from_mses(n_valid: usize, mses: &[f64], in_degrees: &[usize], lambda: f64) -> f64 {
    let n = n_valid as f64;
    mses.iter()
        .zip(in_degrees)
        .map(|(&mse, &k)| n * mse.max(MSE_FLOOR).ln() + lambda * k as f64 * n.ln())
        .sum()
}

/// Score a candidate graph against the frozen predictor: predictions for
/// each target use only its parents (one masked forward evaluation for
/// all targets), and the fit/complexity balance is returned.
pub fn qbic_score(
    pred: &TrainedPredictor,
    series: &MultivariateSeries,
    graph: &TemporalGraph,
    lambda: f64,
) -> Result<f64> {
    if graph.n_vars() != pred.n_vars() {
        return Err(Error::InvalidInput(format!(
            "graph over {} variables scored against predictor with {}",
            graph.n_vars(),
            pred.n_vars()
        )));
    }
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
    }
    let parents = graph.parent_sets();
    let prediction = pred.predict_with_parents(series, &parents)?;
    let n_valid = series.len() - prediction.valid_from;
    if n_valid == 0 {
        return Err(Error::InsufficientData("no valid prediction time points".into()));
    }
    let mses = prediction.mse_per_target(series)?;
    let in_degrees: Vec<usize> = parents.iter().map(|p| p.len()).collect();
    Ok(qbic_from_mses(n_valid, &mses, &in_degrees, lambda))
}

/// Scores along the ranked-prefix family of graphs plus the selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QbicTrace {
    /// `(m, score)` for m = 1.. in evaluation order.
    pub entries: Vec<(usize, f64)>,
    /// Selected edge count (0 when nothing was evaluated).
    pub selected_m: usize,
    pub lambda: f64,
    pub n_valid: usize,
}

/// Smallest `m` attaining the minimum of the trace.
pub fn conservative_argmin(entries: &[(usize, f64)]) -> usize {
    let mut best_m = 0;
    let mut best = f64::INFINITY;
    for &(m, v) in entries {
        if v < best {
            best = v;
            best_m = m;
        }
    }
    best_m
}

/// Evaluate prefixes of the candidate ranking and pick the sparsity level.
///
/// Scores are evaluated for m = 1, 2, ...; evaluation stops early once
/// `patience` consecutive values fail to improve the running minimum (the
/// first stable minimum). The smallest `m` attaining the minimal observed
/// score wins. The returned graph carries the peak lags and scores.
pub fn select_graph(
    pred: &TrainedPredictor,
    series: &MultivariateSeries,
    tensor: &InfluenceTensor,
    lambda: f64,
    m_max: usize,
    patience: usize,
) -> Result<(TemporalGraph, QbicTrace)> {
    if patience < 1 {
        return Err(Error::InvalidConfig("patience must be >= 1".into()));
    }
    let n_vars = tensor.n_vars();
    if n_vars != pred.n_vars() {
        return Err(Error::InvalidInput(format!(
            "tensor over {} variables probed from predictor with {}",
            n_vars,
            pred.n_vars()
        )));
    }
    let summary = peak_reduce(tensor);
    let candidates = rank_candidates(&summary);
    let cap = m_max.min(candidates.len());
    let n_valid = series.len().saturating_sub(pred.valid_from());

    if cap == 0 {
        return Ok((
            TemporalGraph::empty(n_vars),
            QbicTrace { entries: Vec::new(), selected_m: 0, lambda, n_valid },
        ));
    }

    let mut entries = Vec::new();
    let mut best = f64::INFINITY;
    let mut strikes = 0usize;
    for m in 1..=cap {
        let graph = TemporalGraph::new(n_vars, candidates[..m].to_vec())?;
        let score = qbic_score(pred, series, &graph, lambda)?;
        entries.push((m, score));
        if score < best {
            best = score;
            strikes = 0;
        } else {
            strikes += 1;
            if strikes >= patience {
                break;
            }
        }
    }

    let selected_m = conservative_argmin(&entries);
    let graph = TemporalGraph::new(n_vars, candidates[..selected_m].to_vec())?;
    Ok((graph, QbicTrace { entries, selected_m, lambda, n_valid }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_linear_var, var_coeffs};
    use crate::predictor::{train, Backbone, PredictorConfig};
    use crate::probing::{influence_tensor, ClampMode, ClampPolicy};
    use crate::series::normalize_minmax;
    use ndarray::{array, Array3};

    fn tensor_from_slice(slice: &[f64], valid_from: usize) -> InfluenceTensor {
        // 2 variables; the interesting slice is S[0][1][.].
        let t_len = slice.len();
        let mut values = Array3::zeros((2, 2, t_len));
        for (t, &v) in slice.iter().enumerate() {
            values[[0, 1, t]] = v;
        }
        InfluenceTensor::from_values(values, valid_from, 0).unwrap()
    }

    #[test]
    fn peak_reduce_takes_max_and_argmax() {
        let t = tensor_from_slice(&[0.0, 0.1, 0.5, 0.2], 1);
        let summary = peak_reduce(&t);
        assert_eq!(summary.peak[[0, 1]], 0.5);
        assert_eq!(summary.lag[[0, 1]], 2);
    }

    #[test]
    fn peak_reduce_zero_slice_points_at_first_valid_index() {
        let t = tensor_from_slice(&[0.0, 0.0, 0.0, 0.0], 1);
        let summary = peak_reduce(&t);
        assert_eq!(summary.peak[[0, 1]], 0.0);
        assert_eq!(summary.lag[[0, 1]], 1);
    }

    #[test]
    fn peak_reduce_breaks_ties_at_first_occurrence() {
        let t = tensor_from_slice(&[0.0, 0.3, 0.3], 1);
        let summary = peak_reduce(&t);
        assert_eq!(summary.lag[[0, 1]], 1);
    }

    #[test]
    fn ranking_keeps_the_dominant_direction() {
        let summary = PeakSummary {
            peak: array![[0.0, 0.9], [0.4, 0.0]],
            lag: array![[0, 1], [1, 0]],
        };
        let edges = rank_candidates(&summary);
        assert!(edges.iter().any(|e| e.src == 0 && e.dst == 1));
        assert!(!edges.iter().any(|e| e.src == 1 && e.dst == 0));
    }

    #[test]
    fn ranking_tie_goes_to_smaller_source() {
        let summary = PeakSummary {
            peak: array![[0.0, 0.4], [0.4, 0.0]],
            lag: array![[0, 2], [3, 0]],
        };
        let edges = rank_candidates(&summary);
        assert!(edges.iter().any(|e| e.src == 0 && e.dst == 1));
        assert!(!edges.iter().any(|e| e.src == 1 && e.dst == 0));
    }

    #[test]
    fn ranking_orders_by_descending_peak() {
        let summary = PeakSummary {
            peak: array![[0.8, 0.9], [0.4, 0.7]],
            lag: array![[1, 1], [1, 1]],
        };
        let edges = rank_candidates(&summary);
        let order: Vec<(usize, usize)> = edges.iter().map(|e| (e.src, e.dst)).collect();
        assert_eq!(order, vec![(0, 1), (0, 0), (1, 1)]);
    }

    #[test]
    fn qbic_matches_hand_evaluation() {
        // n ln(mse) + lambda k ln(n), summed over two targets.
        let value = qbic_from_mses(100, &[0.01, 0.04], &[1, 2], 0.4);
        assert!((value - -776.8783968624435).abs() < 1e-9, "{value}");
    }

    #[test]
    fn qbic_empty_graph_has_zero_penalty() {
        let fit_only = qbic_from_mses(50, &[0.1, 0.2], &[0, 0], 0.4);
        let expected = 50.0 * (0.1f64).ln() + 50.0 * (0.2f64).ln();
        assert!((fit_only - expected).abs() < 1e-9);
    }

    #[test]
    fn qbic_penalty_grows_by_lambda_log_n_per_parent() {
        let base = qbic_from_mses(200, &[0.05, 0.05], &[1, 1], 0.4);
        let more = qbic_from_mses(200, &[0.05, 0.05], &[1, 2], 0.4);
        assert!((more - base - 0.4 * (200f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn qbic_is_invariant_to_edge_order() {
        let coeffs = var_coeffs(2, 1, &[(1, 0, 1, 0.6), (1, 0, 0, 0.5)]).unwrap();
        let (raw, _) = gen_linear_var(&coeffs, 300, 0.1, 1).unwrap();
        let series = normalize_minmax(&raw);
        let config = PredictorConfig {
            backbone: Backbone::Linear,
            window: 3,
            max_epochs: 200,
            learning_rate: 0.2,
            ..PredictorConfig::default()
        };
        let pred = train(&series, &config).unwrap();
        let e1 = vec![LaggedEdge::new(0, 1, 1, 0.6), LaggedEdge::new(0, 0, 1, 0.5)];
        let e2 = vec![LaggedEdge::new(0, 0, 1, 0.5), LaggedEdge::new(0, 1, 1, 0.6)];
        let a = qbic_score(&pred, &series, &TemporalGraph::new(2, e1).unwrap(), 0.4).unwrap();
        let b = qbic_score(&pred, &series, &TemporalGraph::new(2, e2).unwrap(), 0.4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn conservative_rule_picks_smallest_argmin() {
        let trace = vec![(1, -10.0), (2, -12.0), (3, -12.0), (4, -11.0)];
        assert_eq!(conservative_argmin(&trace), 2);
        let increasing = vec![(1, -5.0), (2, -4.0), (3, -1.0)];
        assert_eq!(conservative_argmin(&increasing), 1);
    }

    #[test]
    fn selection_recovers_a_strong_linear_system() {
        // 3 cross edges + 5 self-loops; the linear head represents the
        // generator exactly, so the selected graph must be the truth.
        let entries = [
            (1, 0, 0, 0.5),
            (1, 1, 1, 0.5),
            (1, 2, 2, 0.5),
            (1, 3, 3, 0.5),
            (1, 4, 4, 0.5),
            (1, 0, 1, 0.7),
            (2, 1, 2, -0.6),
            (2, 2, 3, 0.6),
        ];
        let coeffs = var_coeffs(5, 2, &entries).unwrap();
        let (raw, truth) = gen_linear_var(&coeffs, 2000, 0.05, 0).unwrap();
        let series = normalize_minmax(&raw);
        let config = PredictorConfig {
            backbone: Backbone::Linear,
            window: 3,
            max_epochs: 1000,
            learning_rate: 0.5,
            patience: 1000,
            seed: 0,
            ..PredictorConfig::default()
        };
        let pred = train(&series, &config).unwrap();
        let policy = ClampPolicy::with_t0(ClampMode::PerVariableMax, pred.valid_from());
        let tensor = influence_tensor(&pred, &series, &policy).unwrap();

        let (graph, trace) = select_graph(&pred, &series, &tensor, 0.4, 15, 1).unwrap();
        assert_eq!(graph.edge_count(), truth.graph.edge_count(), "trace: {:?}", trace.entries);
        for e in truth.graph.edges() {
            assert!(graph.has_edge(e.src, e.dst), "missing {} -> {}", e.src, e.dst);
            assert_eq!(
                graph.edge(e.src, e.dst).unwrap().lag,
                e.lag,
                "lag of {} -> {}",
                e.src,
                e.dst
            );
        }
        // The early-stopped pick attains the minimum of everything it
        // evaluated.
        let best = trace.entries.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
        let picked = trace.entries[trace.selected_m - 1].1;
        assert_eq!(picked, best);

        // The exhaustive trace agrees on this system: its global argmin
        // is the true edge count.
        let (exhaustive, full_trace) =
            select_graph(&pred, &series, &tensor, 0.4, 15, 15).unwrap();
        assert_eq!(full_trace.entries.len(), 15);
        assert_eq!(conservative_argmin(&full_trace.entries), truth.graph.edge_count());
        assert_eq!(exhaustive, graph);
    }

    #[test]
    fn selection_counts_one_forward_pass_per_evaluation() {
        let coeffs = var_coeffs(3, 1, &[(1, 0, 0, 0.5), (1, 0, 1, 0.6), (1, 1, 2, 0.5)]).unwrap();
        let (raw, _) = gen_linear_var(&coeffs, 500, 0.05, 3).unwrap();
        let series = normalize_minmax(&raw);
        let config = PredictorConfig {
            backbone: Backbone::Linear,
            window: 3,
            max_epochs: 500,
            learning_rate: 0.2,
            ..PredictorConfig::default()
        };
        let pred = train(&series, &config).unwrap();
        let policy = ClampPolicy::with_t0(ClampMode::PerVariableMax, pred.valid_from());
        let tensor = influence_tensor(&pred, &series, &policy).unwrap();
        let before = pred.forward_passes();
        let (_, trace) = select_graph(&pred, &series, &tensor, 0.4, 6, 3).unwrap();
        assert_eq!(pred.forward_passes() - before, trace.entries.len() as u64);
    }

    #[test]
    fn zero_m_max_returns_empty_graph_and_trace() {
        let coeffs = var_coeffs(2, 1, &[(1, 0, 1, 0.5)]).unwrap();
        let (raw, _) = gen_linear_var(&coeffs, 100, 0.1, 0).unwrap();
        let series = normalize_minmax(&raw);
        let config = PredictorConfig {
            backbone: Backbone::Linear,
            window: 2,
            max_epochs: 10,
            ..PredictorConfig::default()
        };
        let pred = train(&series, &config).unwrap();
        let policy = ClampPolicy::with_t0(ClampMode::PerVariableMax, 1);
        let tensor = influence_tensor(&pred, &series, &policy).unwrap();
        let (graph, trace) = select_graph(&pred, &series, &tensor, 0.4, 0, 5).unwrap();
        assert_eq!(graph.edge_count(), 0);
        assert!(trace.entries.is_empty());
        assert_eq!(trace.selected_m, 0);
    }

    #[test]
    fn zero_tensor_yields_no_candidates_and_an_empty_graph() {
        let coeffs = var_coeffs(2, 1, &[(1, 0, 1, 0.5)]).unwrap();
        let (raw, _) = gen_linear_var(&coeffs, 100, 0.1, 1).unwrap();
        let series = normalize_minmax(&raw);
        let config = PredictorConfig {
            backbone: Backbone::Linear,
            window: 2,
            max_epochs: 10,
            ..PredictorConfig::default()
        };
        let pred = train(&series, &config).unwrap();
        let zeros =
            InfluenceTensor::from_values(Array3::zeros((2, 2, series.len())), 1, 1).unwrap();
        assert!(rank_candidates(&peak_reduce(&zeros)).is_empty());
        let (graph, trace) = select_graph(&pred, &series, &zeros, 0.4, 15, 5).unwrap();
        assert_eq!(graph.edge_count(), 0);
        assert!(trace.entries.is_empty());
    }
}
