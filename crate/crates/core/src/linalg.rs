//! Small dense linear-algebra kernels over row-major `f64` buffers, backed
//! by `faer`.

use faer::{Mat, MatRef};

fn view(rows: usize, cols: usize, a: &[f64]) -> MatRef<'_, f64> {
    MatRef::from_row_major_slice(a, rows, cols)
}

fn into_row_major(m: Mat<f64>) -> Vec<f64> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        out.extend((0..cols).map(|c| m[(r, c)]));
    }
    out
}

/// `C = A · B` with `A` m×k and `B` k×n, all row-major.
pub fn matmul(m: usize, k: usize, n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    into_row_major(view(m, k, a) * view(k, n, b))
}

/// `C = A · Bᵀ` with `A` m×k and `B` n×k, row-major.
pub fn matmul_nt(m: usize, k: usize, n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    into_row_major(view(m, k, a) * view(n, k, b).transpose())
}

/// `C = Aᵀ · A` for a row-major m×k matrix `A` (k×k result).
pub fn gram(m: usize, k: usize, a: &[f64]) -> Vec<f64> {
    let v = view(m, k, a);
    into_row_major(v.transpose() * v)
}

/// Relative cutoff below which [`lstsq`] drops singular values. Design
/// matrices here are themselves computed contractions, so their smallest
/// singular values carry rounding noise well above `ε·σ_max`; inverting
/// that noise makes updates increase the loss.
pub const RCOND: f64 = 1e-12;

/// Result of [`lstsq`].
pub struct LstsqSolution {
    /// cols×nrhs row-major.
    pub x: Vec<f64>,
    /// The design matrix was numerically rank-deficient, so the
    /// minimum-norm solution among all minimizers was returned.
    pub rank_deficient: bool,
}

/// Least-squares solution of `A X ≈ B` (`A` rows×cols, `B` rows×nrhs,
/// row-major) through the SVD of `A`, never forming `AᵀA`.
///
/// Singular values below `RCOND·σ_max` are treated as zero.
/// With `ridge > 0` the remaining ones are filtered as in Tikhonov
/// regularization, giving the minimizer of `‖AX − B‖² + ridge·‖X‖²`.
pub fn lstsq(rows: usize, cols: usize, a: &[f64], nrhs: usize, b: &[f64], ridge: f64) -> LstsqSolution {
    let failed = LstsqSolution {
        x: vec![0.0; cols * nrhs],
        rank_deficient: cols > 0,
    };
    if rows == 0 || cols == 0 || a.iter().any(|v| !v.is_finite()) {
        return failed;
    }
    let Ok(svd) = view(rows, cols, a).thin_svd() else {
        return failed;
    };
    let s = svd.S().column_vector();
    let q = s.nrows();
    let smax = if q > 0 { s[0] } else { 0.0 };
    let cutoff = smax * RCOND;
    let mut ut_b = svd.U().transpose() * view(rows, nrhs, b);
    let mut rank_deficient = q < cols;
    for i in 0..q {
        let x = s[i];
        let w = if x > cutoff {
            x / (x * x + ridge)
        } else {
            rank_deficient = true;
            0.0
        };
        for c in 0..nrhs {
            ut_b[(i, c)] *= w;
        }
    }
    LstsqSolution {
        x: into_row_major(svd.V() * ut_b),
        rank_deficient,
    }
}

/// Thin SVD of a row-major rows×cols matrix: `(U rows×q, σ (q), Vᵀ q×cols)`
/// with q = min(rows, cols) and singular values sorted descending.
pub fn thin_svd(rows: usize, cols: usize, a: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    if rows.min(cols) == 0 {
        return (Vec::new(), Vec::new(), Vec::new());
    }
    let svd = view(rows, cols, a).thin_svd().expect("SVD of a finite matrix");
    let s = svd.S().column_vector();
    let sigma = (0..s.nrows()).map(|i| s[i]).collect();
    (
        into_row_major(svd.U().to_owned()),
        sigma,
        into_row_major(svd.V().transpose().to_owned()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_match_loops() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]; // 2x3
        let b = [1.0, 0.0, 2.0, 1.0, 0.0, 3.0]; // 3x2
        assert_eq!(matmul(2, 3, 2, &a, &b), vec![5.0, 11.0, 14.0, 23.0]);
        // A·Aᵀ
        assert_eq!(matmul_nt(2, 3, 2, &a, &a), vec![14.0, 32.0, 32.0, 77.0]);
        // Aᵀ·A
        assert_eq!(
            gram(2, 3, &a),
            vec![17.0, 22.0, 27.0, 22.0, 29.0, 36.0, 27.0, 36.0, 45.0]
        );
    }

    #[test]
    fn singular_system_gives_min_norm_solution() {
        // A = [[1,1],[1,1]], b = [2,2] → minimum-norm solution [1,1].
        let sol = lstsq(2, 2, &[1.0, 1.0, 1.0, 1.0], 1, &[2.0, 2.0], 0.0);
        assert!(sol.rank_deficient);
        assert!((sol.x[0] - 1.0).abs() < 1e-12 && (sol.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overdetermined_and_ridge() {
        // Fit y = 2x + 1 through exact points.
        let a = [0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0, 1.0];
        let b = [1.0, 3.0, 5.0, 7.0];
        let sol = lstsq(4, 2, &a, 1, &b, 0.0);
        assert!(!sol.rank_deficient);
        assert!((sol.x[0] - 2.0).abs() < 1e-12 && (sol.x[1] - 1.0).abs() < 1e-12);
        // Tikhonov: (AᵀA + λI) x = Aᵀb.
        let ridge = 0.1;
        let g = gram(4, 2, &a);
        let lambda = ridge;
        let atb = matmul(1, 4, 2, &b, &a);
        let (g00, g01, g11) = (g[0] + lambda, g[1], g[3] + lambda);
        let det = g00 * g11 - g01 * g01;
        let expected = [(g11 * atb[0] - g01 * atb[1]) / det, (g00 * atb[1] - g01 * atb[0]) / det];
        let reg = lstsq(4, 2, &a, 1, &b, ridge);
        assert!((reg.x[0] - expected[0]).abs() < 1e-12 && (reg.x[1] - expected[1]).abs() < 1e-12);
    }

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let a = [3.0, 0.0, 0.0, 0.0, 5.0, 0.0];
        let (u, s, vt) = thin_svd(2, 3, &a);
        assert_eq!(s.len(), 2);
        assert!(s[0] >= s[1]);
        let mut us = u.clone();
        for r in 0..2 {
            for c in 0..2 {
                us[r * 2 + c] *= s[c];
            }
        }
        let rec = matmul(2, 2, 3, &us, &vt);
        for (x, y) in rec.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
