//! Structural and temporal accuracy of predicted graphs against ground
//! truth, plus the correlation statistics used by ablations.

use serde::{Deserialize, Serialize};

use crate::datagen::GroundTruth;
use crate::error::{Error, Result};
use crate::graph::TemporalGraph;

/// Edge-level accuracy summary.
///
/// `tpr` equals `recall` and `fdr` equals `1 - precision` by definition;
/// both are materialized because reports list them separately. `pod` is
/// present only when the ground truth carries lag annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tpr: f64,
    pub fdr: f64,
    pub shd_raw: usize,
    /// `shd_raw / max(1, |true edges|)`.
    pub shd_normalized: f64,
    pub pod: Option<f64>,
}

fn check_same_n(pred: &TemporalGraph, truth: &TemporalGraph) -> Result<()> {
    if pred.n_vars() != truth.n_vars() {
        return Err(Error::InvalidInput(format!(
            "graphs over different variable counts: {} vs {}",
            pred.n_vars(),
            truth.n_vars()
        )));
    }
    Ok(())
}

/// Precision / recall / F1 / TPR / FDR over directed edges (exact ordered
/// pairs, lags ignored). SHD fields are zeroed and `pod` is absent; use
/// [`full_report`] for the complete record.
pub fn structural_scores(pred: &TemporalGraph, truth: &TemporalGraph) -> Result<StructuralReport> {
    check_same_n(pred, truth)?;
    let tp = pred.edges().iter().filter(|e| truth.has_edge(e.src, e.dst)).count();
    let fp = pred.edge_count() - tp;
    let fn_ = truth.edges().iter().filter(|e| !pred.has_edge(e.src, e.dst)).count();

    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(StructuralReport {
        precision,
        recall,
        f1,
        tpr: recall,
        fdr: 1.0 - precision,
        shd_raw: 0,
        shd_normalized: 0.0,
        pod: None,
    })
}

/// Structural Hamming Distance on directed adjacency matrices (diagonal
/// included): additions plus deletions, so a reversed edge costs 2.
pub fn shd(pred: &TemporalGraph, truth: &TemporalGraph) -> Result<usize> {
    check_same_n(pred, truth)?;
    let a = pred.adjacency();
    let b = truth.adjacency();
    let n = pred.n_vars();
    let mut edits = 0;
    for i in 0..n {
        for j in 0..n {
            if a[i][j] != b[i][j] {
                edits += 1;
            }
        }
    }
    Ok(edits)
}

/// Precision of Delay: among edges present in both graphs, the fraction
/// whose lags match exactly. Vacuous truth (no true positives) scores 1.0
/// so aggregate averages stay total.
pub fn pod(pred: &TemporalGraph, truth: &GroundTruth) -> Result<f64> {
    if !truth.has_lags {
        return Err(Error::UnsupportedMetric(
            "ground truth has no delay annotations".into(),
        ));
    }
    check_same_n(pred, &truth.graph)?;
    let mut matched = 0usize;
    let mut correct = 0usize;
    for e in pred.edges() {
        if let Some(true_edge) = truth.graph.edge(e.src, e.dst) {
            matched += 1;
            if true_edge.lag == e.lag {
                correct += 1;
            }
        }
    }
    if matched == 0 {
        return Ok(1.0);
    }
    Ok(correct as f64 / matched as f64)
}

/// Full report: structural scores, SHD (raw and normalized by the number
/// of true edges), and PoD when the truth has lags.
pub fn full_report(pred: &TemporalGraph, truth: &GroundTruth) -> Result<StructuralReport> {
    let mut report = structural_scores(pred, &truth.graph)?;
    report.shd_raw = shd(pred, &truth.graph)?;
    report.shd_normalized = report.shd_raw as f64 / truth.graph.edge_count().max(1) as f64;
    report.pod = if truth.has_lags { Some(pod(pred, truth)?) } else { None };
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationKind {
    Pearson,
    Spearman,
}

/// Sample correlation. Spearman is Pearson on fractional ranks with
/// average-rank ties.
pub fn correlation(xs: &[f64], ys: &[f64], kind: CorrelationKind) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 points, got {}",
            xs.len()
        )));
    }
    match kind {
        CorrelationKind::Pearson => pearson(xs, ys),
        CorrelationKind::Spearman => pearson(&ranks(xs), &ranks(ys)),
    }
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx).powi(2);
        vy += (y - my).powi(2);
    }
    if vx <= 0.0 || vy <= 0.0 {
        return Err(Error::UndefinedCorrelation("constant input".into()));
    }
    Ok(cov / (vx.sqrt() * vy.sqrt()))
}

/// Fractional ranks (1-based), average rank for ties.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = avg;
        }
        i = j + 1;
    }
    out
}
