//! Synthetic benchmark generators with known lagged causal graphs.
//!
//! Three families are provided: small linear-SCM motifs (fork, v-structure,
//! mediator, diamond), the chaotic Lorenz-96 lattice, and a linear VAR
//! process used as a fully controllable oracle. All generators are pure
//! functions of their configuration and seed.

use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LaggedEdge, TemporalGraph};
use crate::series::MultivariateSeries;

/// Steps discarded before sampling a Lorenz-96 trajectory.
pub const LORENZ_BURN_IN: usize = 1000;

/// Self-coupling applied to every motif variable at lag 1.
pub const MOTIF_SELF_COEFF: f64 = 0.5;

/// A true graph paired with a flag saying whether its lags are meaningful.
///
/// `has_lags = false` marks truths without delay annotations; delay metrics
/// are unavailable for those.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub graph: TemporalGraph,
    pub has_lags: bool,
}

/// The four canonical motif topologies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotifKind {
    Fork,
    VStructure,
    Mediator,
    Diamond,
}

impl MotifKind {
    pub const ALL: [MotifKind; 4] =
        [MotifKind::Fork, MotifKind::VStructure, MotifKind::Mediator, MotifKind::Diamond];

    pub fn n_vars(self) -> usize {
        match self {
            MotifKind::Diamond => 4,
            _ => 3,
        }
    }

    /// Cross edges in canonical order (sources precede destinations).
    pub fn cross_edges(self) -> &'static [(usize, usize)] {
        match self {
            MotifKind::Fork => &[(0, 1), (0, 2)],
            MotifKind::VStructure => &[(0, 2), (1, 2)],
            MotifKind::Mediator => &[(0, 1), (0, 2), (1, 2)],
            MotifKind::Diamond => &[(0, 1), (0, 2), (1, 3), (2, 3)],
        }
    }

    pub fn var_names(self) -> Vec<String> {
        ["A", "B", "C", "D"][..self.n_vars()].iter().map(|s| s.to_string()).collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            MotifKind::Fork => "fork",
            MotifKind::VStructure => "v-structure",
            MotifKind::Mediator => "mediator",
            MotifKind::Diamond => "diamond",
        }
    }
}

/// Generate a motif series with a linear additive-noise SCM.
///
/// Each child is `sum_parents w * parent_{t-lag} + 0.5 * self_{t-1} + eps`,
/// with `|w|` drawn uniformly from `[0.5, 1.0]` and a random sign. Cross-edge
/// lags come from `lag_assignment` (canonical edge order) or are drawn
/// uniformly from `{1, 2, 3}`. Every variable carries a lag-1 self-loop in
/// the ground truth.
pub fn gen_motif(
    kind: MotifKind,
    t_len: usize,
    lag_assignment: Option<&[usize]>,
    noise_std: f64,
    seed: u64,
) -> Result<(MultivariateSeries, GroundTruth)> {
    if !noise_std.is_finite() || noise_std <= 0.0 {
        return Err(Error::InvalidConfig(format!("noise_std must be positive, got {noise_std}")));
    }
    let edges = kind.cross_edges();
    if let Some(lags) = lag_assignment {
        if lags.len() != edges.len() {
            return Err(Error::InvalidConfig(format!(
                "{} lags supplied for {} edges of {}",
                lags.len(),
                edges.len(),
                kind.name()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Draw order is fixed: weight (sign, magnitude) then lag, per edge.
    let mut weights = Vec::with_capacity(edges.len());
    let mut lags = Vec::with_capacity(edges.len());
    for (idx, _) in edges.iter().enumerate() {
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let magnitude: f64 = rng.gen_range(0.5..1.0);
        weights.push(sign * magnitude);
        let lag = match lag_assignment {
            Some(assigned) => assigned[idx],
            None => rng.gen_range(1..=3usize),
        };
        lags.push(lag);
    }

    let max_lag = lags.iter().copied().max().unwrap_or(1).max(1);
    if t_len < 10 * max_lag {
        return Err(Error::InvalidConfig(format!(
            "series length {t_len} is shorter than 10 x max lag {max_lag}"
        )));
    }

    let n = kind.n_vars();
    let mut values = Array2::zeros((n, t_len));
    for t in 0..t_len {
        // Variables are indexed in topological order, so parents at the
        // same time step (lag 0) are already available.
        for j in 0..n {
            let mut v = 0.0;
            if t >= 1 {
                v += MOTIF_SELF_COEFF * values[[j, t - 1]];
            }
            for (idx, &(src, dst)) in edges.iter().enumerate() {
                if dst == j && t >= lags[idx] {
                    v += weights[idx] * values[[src, t - lags[idx]]];
                }
            }
            let eps: f64 = rng.sample(StandardNormal);
            values[[j, t]] = v + noise_std * eps;
        }
    }

    let mut truth_edges: Vec<LaggedEdge> = (0..n)
        .map(|i| LaggedEdge::new(i, i, 1, MOTIF_SELF_COEFF))
        .collect();
    for (idx, &(src, dst)) in edges.iter().enumerate() {
        truth_edges.push(LaggedEdge::new(src, dst, lags[idx], weights[idx].abs()));
    }
    let graph = TemporalGraph::new(n, truth_edges)?;
    let series = MultivariateSeries::new(values, kind.var_names())?;
    Ok((series, GroundTruth { graph, has_lags: true }))
}

/// Integrate the Lorenz-96 system with fixed-step RK4 and return `t_len`
/// post-burn-in samples.
///
/// Dynamics: `dx_i/dt = (x_{i+1} - x_{i-2}) x_{i-1} - x_i + F` with cyclic
/// indices. The ground truth assigns every variable the parents
/// `{i-2, i-1, i, i+1}` at lag 1; neighbouring pairs are mutually coupled,
/// so the truth graph contains both directions for them.
pub fn gen_lorenz96(
    n_vars: usize,
    t_len: usize,
    forcing: f64,
    dt: f64,
    seed: u64,
) -> Result<(MultivariateSeries, GroundTruth)> {
    if n_vars < 4 {
        return Err(Error::InvalidConfig(format!("lorenz96 needs N >= 4, got {n_vars}")));
    }
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(Error::InvalidConfig(format!("dt must lie in (0, 0.1], got {dt}")));
    }
    if t_len < 50 {
        return Err(Error::InvalidConfig(format!("lorenz96 needs T >= 50, got {t_len}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state: Vec<f64> = (0..n_vars)
        .map(|_| forcing + 0.01 * rng.sample::<f64, _>(StandardNormal))
        .collect();

    let deriv = |x: &[f64], out: &mut [f64]| {
        let n = x.len();
        for i in 0..n {
            let ip1 = (i + 1) % n;
            let im1 = (i + n - 1) % n;
            let im2 = (i + n - 2) % n;
            out[i] = (x[ip1] - x[im2]) * x[im1] - x[i] + forcing;
        }
    };

    let n = n_vars;
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut values = Array2::zeros((n, t_len));

    let total_steps = LORENZ_BURN_IN + t_len;
    for step in 0..total_steps {
        deriv(&state, &mut k1);
        for i in 0..n {
            tmp[i] = state[i] + 0.5 * dt * k1[i];
        }
        deriv(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = state[i] + 0.5 * dt * k2[i];
        }
        deriv(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = state[i] + dt * k3[i];
        }
        deriv(&tmp, &mut k4);
        for i in 0..n {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let magnitude = state.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if magnitude > 1e6 {
            return Err(Error::Integration { step, magnitude });
        }
        if step >= LORENZ_BURN_IN {
            let t = step - LORENZ_BURN_IN;
            for i in 0..n {
                values[[i, t]] = state[i];
            }
        }
    }

    let mut edges = Vec::new();
    for i in 0..n {
        for offset in [n - 2, n - 1, 0, 1] {
            let parent = (i + offset) % n;
            edges.push(LaggedEdge::new(parent, i, 1, 1.0));
        }
    }
    // Deduplicate: when N = 4, i-2 and i+2 coincide.
    edges.sort_by_key(|e| (e.src, e.dst));
    edges.dedup_by_key(|e| (e.src, e.dst));

    let graph = TemporalGraph::with_bidirected(n, edges)?;
    let names = (0..n).map(|i| format!("x{i}")).collect();
    let series = MultivariateSeries::new(values, names)?;
    Ok((series, GroundTruth { graph, has_lags: true }))
}

/// Build a lag-indexed VAR coefficient tensor from `(lag, src, dst, coeff)`
/// entries. Index 0 of the result is the (empty) lag-0 matrix.
pub fn var_coeffs(
    n_vars: usize,
    max_lag: usize,
    entries: &[(usize, usize, usize, f64)],
) -> Result<Vec<Array2<f64>>> {
    if max_lag < 1 {
        return Err(Error::InvalidConfig("max lag must be >= 1".into()));
    }
    let mut coeffs = vec![Array2::zeros((n_vars, n_vars)); max_lag + 1];
    for &(lag, src, dst, coeff) in entries {
        if lag == 0 || lag > max_lag {
            return Err(Error::InvalidConfig(format!(
                "coefficient lag {lag} outside 1..={max_lag}"
            )));
        }
        if src >= n_vars || dst >= n_vars {
            return Err(Error::InvalidConfig(format!(
                "coefficient endpoint ({src}, {dst}) out of range for N={n_vars}"
            )));
        }
        coeffs[lag][[src, dst]] = coeff;
    }
    Ok(coeffs)
}

/// Simulate `X_{j,t} = sum_l sum_i A[l][i][j] X_{i,t-l} + eps` with Gaussian
/// noise. `coeffs[l]` is the lag-`l` coefficient matrix; the lag-0 matrix
/// must be zero (contemporaneous structure is unsupported).
///
/// The ground truth contains an edge `(i -> j)` for every pair with a
/// nonzero coefficient at some lag, keeping the lag of largest magnitude.
pub fn gen_linear_var(
    coeffs: &[Array2<f64>],
    t_len: usize,
    noise_std: f64,
    seed: u64,
) -> Result<(MultivariateSeries, GroundTruth)> {
    if coeffs.len() < 2 {
        return Err(Error::InvalidConfig("coefficient tensor needs max lag >= 1".into()));
    }
    let n = coeffs[0].nrows();
    for (l, m) in coeffs.iter().enumerate() {
        if m.dim() != (n, n) {
            return Err(Error::InvalidConfig(format!(
                "lag-{l} matrix has shape {:?}, expected ({n}, {n})",
                m.dim()
            )));
        }
    }
    if coeffs[0].iter().any(|&v| v != 0.0) {
        return Err(Error::InvalidConfig(
            "lag-0 coefficients must be zero (no contemporaneous terms)".into(),
        ));
    }
    if !noise_std.is_finite() || noise_std < 0.0 {
        return Err(Error::InvalidConfig(format!("noise_std must be >= 0, got {noise_std}")));
    }
    let max_lag = coeffs.len() - 1;
    if t_len <= max_lag + 1 {
        return Err(Error::InvalidConfig(format!(
            "series length {t_len} too short for max lag {max_lag}"
        )));
    }

    let rho = companion_spectral_radius(coeffs);
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Array2::zeros((n, t_len));
    for t in 0..t_len {
        for j in 0..n {
            let mut v = 0.0;
            for (l, m) in coeffs.iter().enumerate().skip(1) {
                if t >= l {
                    for i in 0..n {
                        let a = m[[i, j]];
                        if a != 0.0 {
                            v += a * values[[i, t - l]];
                        }
                    }
                }
            }
            let eps: f64 = rng.sample(StandardNormal);
            values[[j, t]] = v + noise_std * eps;
        }
    }

    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let mut best: Option<(usize, f64)> = None;
            for (l, m) in coeffs.iter().enumerate().skip(1) {
                let a = m[[i, j]].abs();
                if a > 0.0 && best.is_none_or(|(_, b)| a > b) {
                    best = Some((l, a));
                }
            }
            if let Some((lag, score)) = best {
                edges.push(LaggedEdge::new(i, j, lag, score));
            }
        }
    }
    let graph = TemporalGraph::with_bidirected(n, edges)?;
    let names = (0..n).map(|i| format!("x{i}")).collect();
    let series = MultivariateSeries::new(values, names)?;
    Ok((series, GroundTruth { graph, has_lags: true }))
}

/// Upper estimate of the companion-matrix spectral radius via
/// `||C^(2^q)||_F^(1/2^q)` with repeated squaring.
fn companion_spectral_radius(coeffs: &[Array2<f64>]) -> f64 {
    let n = coeffs[0].nrows();
    let max_lag = coeffs.len() - 1;
    let dim = n * max_lag;
    let mut c = Array2::zeros((dim, dim));
    for l in 1..=max_lag {
        for i in 0..n {
            for j in 0..n {
                // Row block 0: X_t = sum_l B_l X_{t-l}, (B_l)[j][i] = A[l][i][j].
                c[[j, (l - 1) * n + i]] = coeffs[l][[i, j]];
            }
        }
    }
    for r in n..dim {
        c[[r, r - n]] = 1.0;
    }

    let q = 8u32; // C^256
    let mut power = c;
    for step in 0..q {
        let norm = power.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e12 {
            // Already explosive; report the bound at this power.
            return norm.powf(1.0 / f64::from(1u32 << step));
        }
        power = power.dot(&power);
    }
    let norm = power.iter().map(|v| v * v).sum::<f64>().sqrt();
    norm.max(f64::MIN_POSITIVE).powf(1.0 / f64::from(1u32 << q))
}

#[derive(Serialize, Deserialize)]
struct TruthDoc {
    n_vars: usize,
    edges: Vec<LaggedEdge>,
    has_lags: bool,
}

/// Persist a ground truth, including its `has_lags` flag.
pub fn save_truth_json<P: AsRef<Path>>(truth: &GroundTruth, path: P) -> Result<()> {
    let mut edges = truth.graph.edges().to_vec();
    edges.sort_by_key(|e| (e.src, e.dst));
    let doc = TruthDoc { n_vars: truth.graph.n_vars(), edges, has_lags: truth.has_lags };
    let text = serde_json::to_string_pretty(&doc)?;
    std::fs::write(path.as_ref(), text + "\n")?;
    Ok(())
}

/// Load a ground truth; mutual pairs are allowed, `has_lags` defaults to
/// true when the field is absent (plain graph files).
pub fn load_truth_json<P: AsRef<Path>>(path: P) -> Result<GroundTruth> {
    #[derive(Deserialize)]
    struct MaybeTruthDoc {
        n_vars: usize,
        edges: Vec<LaggedEdge>,
        #[serde(default = "default_true")]
        has_lags: bool,
    }
    fn default_true() -> bool {
        true
    }
    let doc: MaybeTruthDoc = serde_json::from_str(&std::fs::read_to_string(path.as_ref())?)?;
    let graph = TemporalGraph::with_bidirected(doc.n_vars, doc.edges)?;
    Ok(GroundTruth { graph, has_lags: doc.has_lags })
}
