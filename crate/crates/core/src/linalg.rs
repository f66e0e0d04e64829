//! Small dense linear-algebra helpers shared by features, models and eval.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Per-column centering and scaling learned on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Population standard deviations. Zero-variance columns keep scale 1 so
    /// they map to a constant zero column instead of `NaN`.
    pub scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mut means = Vec::with_capacity(x.ncols());
        let mut scales = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            means.push(m);
            scales.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Standardizer { means, scales }
    }

    /// Columns whose training variance is zero (or numerically negligible
    /// relative to their mean).
    pub fn degenerate_columns(x: &DMatrix<f64>) -> Vec<usize> {
        let n = x.nrows().max(1) as f64;
        x.column_iter()
            .enumerate()
            .filter(|(_, col)| {
                let m = col.sum() / n;
                let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
                var <= 1e-24 * (1.0 + m * m)
            })
            .map(|(j, _)| j)
            .collect()
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.ncols(), self.means.len());
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - self.means[j]) / self.scales[j])
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(self.means.iter().zip(&self.scales)).map(|(v, (m, s))| (v - m) / s).collect()
    }

    pub fn n_columns(&self) -> usize {
        self.means.len()
    }
}

/// Mean and population standard deviation of a slice.
pub fn mean_std(y: &[f64]) -> (f64, f64) {
    let n = y.len().max(1) as f64;
    let m = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Solve `(X'X + λI) b = X'y`.
pub fn ridge_solve(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let p = x.ncols();
    let gram = x.tr_mul(x) + DMatrix::identity(p, p) * lambda;
    let rhs = x.tr_mul(y);
    solve_spd(gram, &rhs)
}

/// Solve a symmetric positive (semi)definite system, falling back to LU and
/// then to a tiny diagonal jitter if Cholesky fails.
pub fn solve_spd(a: DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = a.clone().cholesky() {
        return ch.solve(b);
    }
    if let Some(sol) = a.clone().lu().solve(b) {
        if sol.iter().all(|v| v.is_finite()) {
            return sol;
        }
    }
    let p = a.nrows();
    let scale = (a.trace() / p.max(1) as f64).abs().max(1.0);
    let jittered = a + DMatrix::identity(p, p) * (1e-10 * scale);
    jittered
        .clone()
        .cholesky()
        .map(|c| c.solve(b))
        .unwrap_or_else(|| jittered.lu().solve(b).unwrap_or_else(|| DVector::zeros(p)))
}

/// Least squares via column-pivot-free QR. Returns `None` when `R` has a
/// (numerically) zero diagonal entry.
pub fn qr_least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let (n, p) = x.shape();
    if n < p {
        return None;
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let max_diag = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if p > 0 && (0..p).any(|i| r[(i, i)].abs() <= 1e-10 * max_diag.max(f64::MIN_POSITIVE)) {
        return None;
    }
    let qty = qr.q().tr_mul(y);
    r.solve_upper_triangular(&qty)
}

/// Principal components of a (standardized) data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    /// K×k loadings, unit-norm columns ordered by eigenvalue descending.
    pub loadings: DMatrix<f64>,
    /// All K eigenvalues of `X'X / T`, descending.
    pub eigenvalues: Vec<f64>,
    /// T×k scores `X · loadings`.
    pub scores: DMatrix<f64>,
}

impl Pca {
    /// First `k` principal components of `x`. Each component's sign is set
    /// so that its largest-magnitude loading is positive.
    pub fn fit(x: &DMatrix<f64>, k: usize) -> Pca {
        let t = x.nrows().max(1) as f64;
        let cov = x.tr_mul(x) / t;
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let kk = k.min(order.len());
        let mut loadings = DMatrix::zeros(x.ncols(), kk);
        for (c, &idx) in order.iter().take(kk).enumerate() {
            let mut v = eig.eigenvectors.column(idx).into_owned();
            let mut pivot = 0;
            for i in 1..v.len() {
                if v[i].abs() > v[pivot].abs() + 1e-12 {
                    pivot = i;
                }
            }
            if v[pivot] < 0.0 {
                v = -v;
            }
            loadings.set_column(c, &v);
        }
        let scores = x * &loadings;
        Pca { loadings, eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(), scores }
    }
}

/// Sum of squared entries.
pub fn sum_sq<'a>(v: impl IntoIterator<Item = &'a f64>) -> f64 {
    v.into_iter().map(|x| x * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| rng.random::<f64>() - 0.5)
    }

    #[test]
    fn standardizer_centers_and_scales() {
        let x = random(40, 3, 1) * 7.0;
        let z = Standardizer::fit(&x).transform(&x);
        for col in z.column_iter() {
            let (m, s) = mean_std(col.as_slice());
            assert!(m.abs() < 1e-12 && (s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn qr_matches_normal_equations() {
        let x = random(50, 4, 2);
        let y = DVector::from_fn(50, |i, _| i as f64 * 0.1);
        let a = qr_least_squares(&x, &y).unwrap();
        let b = (x.tr_mul(&x)).try_inverse().unwrap() * x.tr_mul(&y);
        assert!((a - b).amax() < 1e-9);
    }

    #[test]
    fn qr_flags_rank_deficiency() {
        let mut x = random(20, 3, 3);
        let c = x.column(0).into_owned();
        x.set_column(2, &c);
        assert!(qr_least_squares(&x, &DVector::zeros(20)).is_none());
    }

    #[test]
    fn pca_scores_are_orthogonal_and_sorted() {
        let x = Standardizer::fit(&random(50, 10, 4)).transform(&random(50, 10, 4));
        let pca = Pca::fit(&x, 10);
        let g = pca.scores.tr_mul(&pca.scores) / 50.0;
        for i in 0..10 {
            assert!((g[(i, i)] - pca.eigenvalues[i]).abs() < 1e-10);
            for j in 0..10 {
                if i != j {
                    assert!(g[(i, j)].abs() < 1e-10);
                }
            }
        }
        assert!(pca.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }
}
