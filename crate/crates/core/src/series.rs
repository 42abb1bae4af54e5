//! Multivariate series storage, min-max normalization, and CSV I/O.
//!
//! In memory a series is an `N x T` matrix (row = variable). On disk the
//! layout is time-major: a header row of variable names followed by one row
//! per time step.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Denominator guard: ranges below this are treated as constant.
const MIN_RANGE: f64 = 1e-12;

/// An `N x T` multivariate time series with optional normalization metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateSeries {
    values: Array2<f64>,
    var_names: Vec<String>,
    /// Per-variable `(min, max)` recorded when the series was normalized.
    norm_meta: Option<Vec<(f64, f64)>>,
}

impl MultivariateSeries {
    /// Build a series from an `N x T` matrix, validating shape and finiteness.
    pub fn new(values: Array2<f64>, var_names: Vec<String>) -> Result<Self> {
        let (n, t) = values.dim();
        if n < 1 {
            return Err(Error::InvalidInput("series needs at least one variable".into()));
        }
        if t < 2 {
            return Err(Error::InvalidInput(format!(
                "series needs at least two time steps, got {t}"
            )));
        }
        if var_names.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} variable names for {} variables",
                var_names.len(),
                n
            )));
        }
        if let Some(((i, t), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry {v} at variable {i}, time {t}"
            )));
        }
        Ok(Self { values, var_names, norm_meta: None })
    }

    /// Number of variables N.
    pub fn n_vars(&self) -> usize {
        self.values.nrows()
    }

    /// Number of time steps T.
    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn norm_meta(&self) -> Option<&[(f64, f64)]> {
        self.norm_meta.as_deref()
    }

    /// Copy of the series with a single entry replaced. Metadata is preserved.
    pub fn with_entry(&self, var: usize, t: usize, value: f64) -> Result<Self> {
        if var >= self.n_vars() || t >= self.len() {
            return Err(Error::InvalidInput(format!(
                "entry ({var}, {t}) out of bounds for {}x{} series",
                self.n_vars(),
                self.len()
            )));
        }
        if !value.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite replacement value {value}")));
        }
        let mut out = self.clone();
        out.values[[var, t]] = value;
        Ok(out)
    }

    /// Per-variable mean over all time steps.
    pub fn var_means(&self) -> Vec<f64> {
        self.values
            .rows()
            .into_iter()
            .map(|row| row.sum() / row.len() as f64)
            .collect()
    }
}

/// Rescale each variable independently to `[0, 1]`, recording `(min, max)`.
///
/// Constant variables (range below `1e-12`) map to all-zeros.
pub fn normalize_minmax(series: &MultivariateSeries) -> MultivariateSeries {
    let mut values = series.values.clone();
    let mut meta = Vec::with_capacity(series.n_vars());
    for mut row in values.rows_mut() {
        let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        meta.push((min, max));
        let range = max - min;
        if range < MIN_RANGE {
            row.fill(0.0);
        } else {
            row.mapv_inplace(|v| (v - min) / range);
        }
    }
    MultivariateSeries {
        values,
        var_names: series.var_names.clone(),
        norm_meta: Some(meta),
    }
}

/// Load a series from a time-major CSV file (header row of variable names,
/// one row per time step). The matrix is transposed to `N x T` in memory.
pub fn load_series_csv<P: AsRef<Path>>(path: P) -> Result<MultivariateSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path.as_ref())?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Parse { row: 0, col: 0, msg: format!("no header: {e}") })?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].trim().is_empty()) {
        return Err(Error::Parse { row: 0, col: 0, msg: "no header".into() });
    }
    let n = headers.len();
    let var_names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row_no = idx + 1; // header is row 0
        let record = record.map_err(|e| Error::Parse {
            row: row_no,
            col: 0,
            msg: format!("unreadable record: {e}"),
        })?;
        if record.len() != n {
            return Err(Error::Parse {
                row: row_no,
                col: record.len(),
                msg: format!("ragged row: expected {n} columns, found {}", record.len()),
            });
        }
        let mut parsed = Vec::with_capacity(n);
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row: row_no,
                col,
                msg: format!("non-numeric cell {cell:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row: row_no,
                    col,
                    msg: format!("non-finite cell {cell:?}"),
                });
            }
            parsed.push(value);
        }
        rows.push(parsed);
    }

    let t = rows.len();
    if t < 2 {
        return Err(Error::Parse {
            row: t,
            col: 0,
            msg: format!("need at least two data rows, found {t}"),
        });
    }
    let mut values = Array2::zeros((n, t));
    for (ti, row) in rows.iter().enumerate() {
        for (vi, &v) in row.iter().enumerate() {
            values[[vi, ti]] = v;
        }
    }
    MultivariateSeries::new(values, var_names)
}

/// Write a series as time-major CSV (full f64 round-trip precision).
pub fn save_series_csv<P: AsRef<Path>>(series: &MultivariateSeries, path: P) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    writer.write_record(series.var_names())?;
    for t in 0..series.len() {
        let row: Vec<String> =
            (0..series.n_vars()).map(|i| format!("{}", series.values[[i, t]])).collect();
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(values: Array2<f64>) -> MultivariateSeries {
        let names = (0..values.nrows()).map(|i| format!("x{i}")).collect();
        MultivariateSeries::new(values, names).unwrap()
    }

    #[test]
    fn normalize_rescales_rows() {
        let s = series(array![[1.0, 2.0, 3.0]]);
        let n = normalize_minmax(&s);
        assert_eq!(n.values().row(0).to_vec(), vec![0.0, 0.5, 1.0]);
        assert_eq!(n.norm_meta().unwrap()[0], (1.0, 3.0));
    }

    #[test]
    fn normalize_constant_row_is_zero() {
        let s = series(array![[5.0, 5.0, 5.0]]);
        let n = normalize_minmax(&s);
        assert_eq!(n.values().row(0).to_vec(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_identity_when_already_unit_range() {
        let s = series(array![[0.0, 1.0]]);
        let n = normalize_minmax(&s);
        assert_eq!(n.values().row(0).to_vec(), vec![0.0, 1.0]);
    }

    #[test]
    fn normalize_is_idempotent_and_preserves_extrema_positions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.gen_range(1..5);
            let t = rng.gen_range(2..40);
            let values =
                Array2::from_shape_fn((n, t), |_| rng.gen_range(-50.0..50.0_f64));
            let s = series(values);
            let once = normalize_minmax(&s);
            let twice = normalize_minmax(&once);
            assert_eq!(once.values(), twice.values());
            for i in 0..n {
                let argmax = |row: &[f64]| {
                    row.iter()
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| {
                            if v > acc.1 {
                                (k, v)
                            } else {
                                acc
                            }
                        })
                        .0
                };
                let raw: Vec<f64> = s.values().row(i).to_vec();
                let norm: Vec<f64> = once.values().row(i).to_vec();
                assert_eq!(argmax(&raw), argmax(&norm));
                assert!(norm.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }

    #[test]
    fn rejects_non_finite_and_degenerate_shapes() {
        assert!(MultivariateSeries::new(array![[1.0, f64::NAN]], vec!["a".into()]).is_err());
        assert!(MultivariateSeries::new(array![[1.0]], vec!["a".into()]).is_err());
        let empty: Array2<f64> = Array2::zeros((0, 4));
        assert!(MultivariateSeries::new(empty, vec![]).is_err());
    }

    #[test]
    fn csv_roundtrip_has_expected_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        std::fs::write(&path, "a,b\n1.0,2.0\n3.0,4.0\n5.5,6.25\n").unwrap();
        let s = load_series_csv(&path).unwrap();
        assert_eq!(s.n_vars(), 2);
        assert_eq!(s.len(), 3);
        assert_eq!(s.values()[[0, 2]], 5.5);
        assert_eq!(s.var_names(), &["a".to_string(), "b".to_string()]);

        let out = dir.path().join("copy.csv");
        save_series_csv(&s, &out).unwrap();
        let again = load_series_csv(&out).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn csv_nan_cell_is_a_parse_error_at_that_cell() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b\n1.0,2.0\n3.0,NaN\n").unwrap();
        match load_series_csv(&path) {
            Err(Error::Parse { row, col, .. }) => {
                assert_eq!((row, col), (2, 1));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_empty_file_reports_missing_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        std::fs::write(&path, "").unwrap();
        match load_series_csv(&path) {
            Err(Error::Parse { msg, .. }) => assert!(msg.contains("header") || msg.contains("two data rows"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_ragged_row_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ragged.csv");
        std::fs::write(&path, "a,b\n1.0,2.0\n3.0\n").unwrap();
        match load_series_csv(&path) {
            Err(Error::Parse { row, msg, .. }) => {
                assert_eq!(row, 2);
                assert!(msg.contains("ragged"));
            }
            other => panic!("expected ragged-row error, got {other:?}"),
        }
    }

    #[test]
    fn with_entry_replaces_single_value() {
        let s = series(array![[1.0, 2.0], [3.0, 4.0]]);
        let c = s.with_entry(1, 0, 9.0).unwrap();
        assert_eq!(c.values()[[1, 0]], 9.0);
        assert_eq!(c.values()[[0, 0]], 1.0);
        assert!(s.with_entry(2, 0, 1.0).is_err());
    }
}
