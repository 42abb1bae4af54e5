//! Test-only numerical oracles kept independent of the implementation
//! paths they check.

/// Ordinary least squares via normal equations. Returns `(coefficients,
/// standard errors)`. Suitable for the small designs used in tests.
pub fn ols(targets: &[f64], regressors: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let p = regressors.len();
    let n = targets.len();
    assert!(regressors.iter().all(|r| r.len() == n));
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for a in 0..p {
        for b in 0..p {
            xtx[a][b] = regressors[a].iter().zip(&regressors[b]).map(|(x, y)| x * y).sum();
        }
        xty[a] = regressors[a].iter().zip(targets).map(|(x, y)| x * y).sum();
    }
    let inv = invert(&xtx);
    let beta: Vec<f64> = (0..p).map(|a| (0..p).map(|b| inv[a][b] * xty[b]).sum()).collect();
    let rss: f64 = (0..n)
        .map(|r| {
            let fit: f64 = (0..p).map(|a| beta[a] * regressors[a][r]).sum();
            (targets[r] - fit).powi(2)
        })
        .sum();
    let sigma2 = rss / (n - p) as f64;
    let se: Vec<f64> = (0..p).map(|a| (sigma2 * inv[a][a]).sqrt()).collect();
    (beta, se)
}

/// Invert a small symmetric positive-definite matrix by Gauss-Jordan
/// elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = m.len();
    let mut aug: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let mut a = row.clone();
            a.extend((0..p).map(|c| if c == r { 1.0 } else { 0.0 }));
            a
        })
        .collect();
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&a, &b| aug[a][col].abs().partial_cmp(&aug[b][col].abs()).unwrap())
            .unwrap();
        aug.swap(col, pivot);
        let d = aug[col][col];
        assert!(d.abs() > 1e-12, "singular design");
        for v in aug[col].iter_mut() {
            *v /= d;
        }
        for r in 0..p {
            if r != col {
                let f = aug[r][col];
                for c in 0..2 * p {
                    aug[r][c] -= f * aug[col][c];
                }
            }
        }
    }
    aug.into_iter().map(|row| row[p..].to_vec()).collect()
}
