use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative threshold on `|R_ii|` below which a column subset counts as rank deficient.
const RANK_RTOL: f64 = 1e-10;

pub(crate) fn columns(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), idx.len(), |r, c| a[(r, idx[c])])
}

/// Least squares on a tall full-column-rank matrix through Householder QR.
pub(crate) fn lstsq_qr(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let k = a.ncols();
    if k == 0 {
        return Ok(DVector::zeros(0));
    }
    if k > a.nrows() {
        return Err(Error::RankDeficient { support: k });
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || r.diagonal().iter().any(|v| v.abs() <= RANK_RTOL * scale) {
        return Err(Error::RankDeficient { support: k });
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficient { support: k })
}

/// Minimum-norm least squares through the SVD; valid for any shape.
pub(crate) fn lstsq_pinv(a: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * (a.nrows().max(a.ncols()) as f64) * f64::EPSILON;
    svd.solve(y, tol)
        .unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Indices of the `k` largest `|v_i|`, ties to the lower index, returned sorted.
pub(crate) fn top_k(v: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[j].abs().total_cmp(&v[i].abs()).then(i.cmp(&j)));
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_solves_and_flags_rank() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = lstsq_qr(&a, &y).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);

        let dup = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!(lstsq_qr(&dup, &y).is_err());
    }

    #[test]
    fn pinv_handles_wide() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let x = lstsq_pinv(&a, &DVector::from_vec(vec![2.0]));
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn top_k_ties_prefer_low_index() {
        assert_eq!(top_k(&[1.0, -3.0, 3.0, 0.5], 2), vec![1, 2]);
        assert_eq!(top_k(&[2.0, 2.0, 2.0], 2), vec![0, 1]);
    }
}
