//! Intervention-inspired input clamping against a frozen predictor, and
//! the influence signal tensor built from the responses.
//!
//! Clamping sets one variable at one time index `t0` to a reference value
//! and re-runs inference; the absolute deviation from the baseline
//! prediction, collected for every probed variable, forms the `N x N x T`
//! influence tensor `S`. Responses are read off at delay `t - t0`.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::TrainedPredictor;
use crate::series::MultivariateSeries;

/// How the clamp value `x*` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClampMode {
    /// `x* = max(X_i)`: a strong but plausible deviation within the
    /// empirical range (the default for synthetic data).
    PerVariableMax,
    /// `x* = 0`, for domains where zero has semantic meaning.
    Zero,
    /// Explicit clamp value, used by magnitude sweeps.
    Fixed(f64),
}

/// Clamp mode plus the time index at which the clamp is applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampPolicy {
    pub mode: ClampMode,
    pub t0: usize,
}

impl ClampPolicy {
    /// Policy clamping at `t0 = 0`.
    pub fn new(mode: ClampMode) -> Self {
        Self { mode, t0: 0 }
    }

    pub fn with_t0(mode: ClampMode, t0: usize) -> Self {
        Self { mode, t0 }
    }

    pub fn validate(&self, t_len: usize) -> Result<()> {
        if self.t0 >= t_len {
            return Err(Error::InvalidInput(format!(
                "clamp index t0 = {} outside series of length {t_len}",
                self.t0
            )));
        }
        if let ClampMode::Fixed(v) = self.mode {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite clamp value {v}")));
            }
        }
        Ok(())
    }

    /// Resolve the clamp value for variable `i` of a series.
    pub fn resolve(&self, series: &MultivariateSeries, var: usize) -> f64 {
        match self.mode {
            ClampMode::PerVariableMax => {
                series.values().row(var).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            }
            ClampMode::Zero => 0.0,
            ClampMode::Fixed(v) => v,
        }
    }
}

/// The `N x N x T` influence signal tensor: entry `(i, j, t)` is the
/// absolute prediction deviation of target `j` at time `t` caused by
/// clamping variable `i` at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceTensor {
    values: Array3<f64>,
    valid_from: usize,
    t0: usize,
}

impl InfluenceTensor {
    /// Wrap raw values, enforcing non-negativity, finiteness, and a zeroed
    /// invalid prefix.
    pub fn from_values(values: Array3<f64>, valid_from: usize, t0: usize) -> Result<Self> {
        let (n_src, n_dst, t_len) = values.dim();
        if n_src != n_dst {
            return Err(Error::InvalidInput(format!(
                "influence tensor must be square in variables, got {n_src} x {n_dst}"
            )));
        }
        if valid_from > t_len {
            return Err(Error::InvalidInput(format!(
                "valid_from {valid_from} beyond length {t_len}"
            )));
        }
        for ((i, j, t), &v) in values.indexed_iter() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "influence entry ({i}, {j}, {t}) = {v} is not a finite non-negative value"
                )));
            }
            if t < valid_from && v != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "influence entry ({i}, {j}, {t}) nonzero before valid_from {valid_from}"
                )));
            }
        }
        Ok(Self { values, valid_from, t0 })
    }

    pub fn n_vars(&self) -> usize {
        self.values.dim().0
    }

    pub fn t_len(&self) -> usize {
        self.values.dim().2
    }

    /// First time index carrying signal (= K - 1 of the predictor).
    pub fn valid_from(&self) -> usize {
        self.valid_from
    }

    /// Clamp time index the tensor was probed at; lags are read relative
    /// to it.
    pub fn t0(&self) -> usize {
        self.t0
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub fn get(&self, src: usize, dst: usize, t: usize) -> f64 {
        self.values[[src, dst, t]]
    }
}

/// Copy of the series with variable `i` clamped at `(i, t0)` according to
/// the policy. Everything else is unchanged.
pub fn clamp_input(
    series: &MultivariateSeries,
    var: usize,
    policy: &ClampPolicy,
) -> Result<MultivariateSeries> {
    if var >= series.n_vars() {
        return Err(Error::InvalidInput(format!(
            "clamp variable {var} out of range for {} variables",
            series.n_vars()
        )));
    }
    policy.validate(series.len())?;
    let value = policy.resolve(series, var);
    series.with_entry(var, policy.t0, value)
}

/// Probe the predictor with one clamp per variable and collect absolute
/// deviations from the baseline prediction. Exactly `N + 1` predictor
/// calls: one baseline plus one per clamped variable.
///
/// Entries before the predictor's first valid index are zero; within the
/// first `K - 1` steps after the series start the window is incomplete,
/// which is the boundary effect that zeroing absorbs.
pub fn influence_tensor(
    pred: &TrainedPredictor,
    series: &MultivariateSeries,
    policy: &ClampPolicy,
) -> Result<InfluenceTensor> {
    policy.validate(series.len())?;
    let n = series.n_vars();
    let t_len = series.len();
    let baseline = pred.predict_series(series)?;
    let valid_from = baseline.valid_from;

    // Clamped runs are independent; each fills its own S[i] slice, so the
    // result is identical regardless of scheduling.
    let slices: Vec<Array3<f64>> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Array3<f64>> {
            let clamped = clamp_input(series, i, policy)
                .and_then(|input| pred.predict_series(&input))
                .map_err(|e| Error::Probe { variable: i, source: Box::new(e) })?;
            let mut slice = Array3::zeros((1, n, t_len));
            for j in 0..n {
                for t in valid_from..t_len {
                    slice[[0, j, t]] =
                        (clamped.values[[j, t]] - baseline.values[[j, t]]).abs();
                }
            }
            Ok(slice)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut values = Array3::zeros((n, n, t_len));
    for (i, slice) in slices.iter().enumerate() {
        for j in 0..n {
            for t in 0..t_len {
                values[[i, j, t]] = slice[[0, j, t]];
            }
        }
    }
    InfluenceTensor::from_values(values, valid_from, policy.t0)
}

/// Uniformly permute the valid-region entries of the tensor
/// (Fisher-Yates, deterministic in the seed). The multiset of values is
/// preserved exactly; all structure is destroyed.
pub fn permute_tensor(tensor: &InfluenceTensor, seed: u64) -> InfluenceTensor {
    let (n_src, n_dst, t_len) = tensor.values.dim();
    let valid_from = tensor.valid_from;
    let mut pool: Vec<f64> = Vec::new();
    for i in 0..n_src {
        for j in 0..n_dst {
            for t in valid_from..t_len {
                pool.push(tensor.values[[i, j, t]]);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for idx in (1..pool.len()).rev() {
        let swap_with = rng.gen_range(0..=idx);
        pool.swap(idx, swap_with);
    }
    let mut values = Array3::zeros((n_src, n_dst, t_len));
    let mut cursor = 0;
    for i in 0..n_src {
        for j in 0..n_dst {
            for t in valid_from..t_len {
                values[[i, j, t]] = pool[cursor];
                cursor += 1;
            }
        }
    }
    InfluenceTensor { values, valid_from, t0: tensor.t0 }
}

/// Sidecar metadata stored next to the binary tensor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorMeta {
    pub policy: ClampPolicy,
    pub n_vars: usize,
    pub t_len: usize,
    pub valid_from: usize,
}

/// `<path>.meta.json`
pub fn tensor_sidecar_path<P: AsRef<Path>>(path: P) -> PathBuf {
    let mut name = path.as_ref().as_os_str().to_os_string();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Write the tensor as a flat binary file: an 8-byte-aligned header of
/// four little-endian u64 (N, N, T, valid_from) followed by little-endian
/// f64 values in `(i, j, t)` row-major order, plus a JSON sidecar with the
/// clamp policy.
pub fn save_tensor<P: AsRef<Path>>(
    tensor: &InfluenceTensor,
    policy: &ClampPolicy,
    path: P,
) -> Result<()> {
    let (n_src, _, t_len) = tensor.values.dim();
    let mut file = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
    for header in [n_src as u64, n_src as u64, t_len as u64, tensor.valid_from as u64] {
        file.write_all(&header.to_le_bytes())?;
    }
    for &v in tensor.values.iter() {
        file.write_all(&v.to_le_bytes())?;
    }
    file.flush()?;

    let meta = TensorMeta {
        policy: *policy,
        n_vars: n_src,
        t_len,
        valid_from: tensor.valid_from,
    };
    std::fs::write(
        tensor_sidecar_path(path.as_ref()),
        serde_json::to_string_pretty(&meta)? + "\n",
    )?;
    Ok(())
}

/// Read a tensor saved by [`save_tensor`]. The sidecar supplies `t0`; a
/// missing sidecar defaults it to 0.
pub fn load_tensor<P: AsRef<Path>>(path: P) -> Result<(InfluenceTensor, Option<TensorMeta>)> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path.as_ref())?);
    let mut header = [0u8; 32];
    file.read_exact(&mut header)?;
    let word = |k: usize| u64::from_le_bytes(header[k * 8..(k + 1) * 8].try_into().unwrap());
    let n_src = word(0) as usize;
    let n_dst = word(1) as usize;
    let t_len = word(2) as usize;
    let valid_from = word(3) as usize;
    if n_src != n_dst {
        return Err(Error::InvalidInput(format!(
            "tensor header declares {n_src} x {n_dst} variables"
        )));
    }
    let count = n_src * n_dst * t_len;
    let mut raw = vec![0u8; count * 8];
    file.read_exact(&mut raw)?;
    let mut values = Array3::zeros((n_src, n_dst, t_len));
    for (idx, chunk) in raw.chunks_exact(8).enumerate() {
        let t = idx % t_len;
        let j = (idx / t_len) % n_dst;
        let i = idx / (t_len * n_dst);
        values[[i, j, t]] = f64::from_le_bytes(chunk.try_into().unwrap());
    }

    let meta: Option<TensorMeta> = std::fs::read_to_string(tensor_sidecar_path(path.as_ref()))
        .ok()
        .and_then(|text| serde_json::from_str(&text).ok());
    let t0 = meta.as_ref().map_or(0, |m| m.policy.t0);
    Ok((InfluenceTensor::from_values(values, valid_from, t0)?, meta))
}
