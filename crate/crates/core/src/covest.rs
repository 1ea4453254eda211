//! Marginal and lag-one sample covariances of the stacked series
//! `X̃_t = (X_{t+p−1}ᵀ, …, X_tᵀ)ᵀ`.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::varproc::TimeSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct CovPair {
    /// `S`, averaged over the `T − p + 1` stacked vectors.
    pub s: DenseMatrix,
    /// `S₁`, averaged over the `T − p` consecutive pairs.
    pub s1: DenseMatrix,
    pub n_marginal: usize,
    pub n_lag: usize,
}

/// Stacked vectors as rows of an `(T−p+1) × dp` matrix.
fn stacked_rows(ts: &TimeSeries, p: usize) -> Vec<f64> {
    let d = ts.dim();
    let n = ts.t_len() - p + 1;
    let mut out = Vec::with_capacity(n * d * p);
    for t in 0..n {
        for k in (0..p).rev() {
            out.extend_from_slice(ts.row(t + k));
        }
    }
    out
}

/// No mean is removed: the process is zero-mean by assumption.
pub fn sample_covariances(ts: &TimeSeries, p: usize) -> Result<CovPair> {
    if p == 0 {
        return Err(Error::BadParams("lag order must be at least 1".into()));
    }
    if ts.t_len() < p + 1 {
        return Err(Error::SeriesTooShort {
            t_len: ts.t_len(),
            p,
        });
    }
    let m = ts.dim() * p;
    let n = ts.t_len() - p + 1;
    let x = stacked_rows(ts, p);
    let mut s = vec![0.0; m * m];
    let mut s1 = vec![0.0; m * m];
    for t in 0..n {
        let xt = &x[t * m..(t + 1) * m];
        for (i, &a) in xt.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            // Upper triangle only; mirrored below.
            for (sv, b) in s[i * m + i..(i + 1) * m].iter_mut().zip(&xt[i..]) {
                *sv += a * b;
            }
        }
        if t + 1 < n {
            let xn = &x[(t + 1) * m..(t + 2) * m];
            for (i, &a) in xt.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (sv, b) in s1[i * m..(i + 1) * m].iter_mut().zip(xn) {
                    *sv += a * b;
                }
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    let inv_lag = 1.0 / (n - 1) as f64;
    for i in 0..m {
        for j in i..m {
            let v = s[i * m + j] * inv_n;
            s[i * m + j] = v;
            s[j * m + i] = v;
        }
    }
    s1.iter_mut().for_each(|v| *v *= inv_lag);
    Ok(CovPair {
        s: DenseMatrix::new(m, m, s)?,
        s1: DenseMatrix::new(m, m, s1)?,
        n_marginal: n,
        n_lag: n - 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_example() {
        let ts = TimeSeries::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let c = sample_covariances(&ts, 1).unwrap();
        assert_eq!(c.s, DenseMatrix::scaled_identity(2, 0.5));
        assert_eq!(
            c.s1,
            DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap()
        );
        assert_eq!((c.n_marginal, c.n_lag), (2, 1));
    }

    #[test]
    fn zero_series() {
        let ts = TimeSeries::new(5, 3, vec![0.0; 15]).unwrap();
        let c = sample_covariances(&ts, 2).unwrap();
        assert_eq!(c.s.shape(), (6, 6));
        assert_eq!(c.s.max_abs(), 0.0);
        assert_eq!(c.s1.max_abs(), 0.0);
    }

    #[test]
    fn too_short() {
        let ts = TimeSeries::new(2, 1, vec![1.0, 2.0]).unwrap();
        assert_eq!(
            sample_covariances(&ts, 2),
            Err(Error::SeriesTooShort { t_len: 2, p: 2 })
        );
    }

    #[test]
    fn lag_two_stacking_order() {
        // Scalar series 1, 2, 3: stacked vectors (2, 1) and (3, 2).
        let ts = TimeSeries::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let c = sample_covariances(&ts, 2).unwrap();
        let expect_s = DenseMatrix::from_rows(&[vec![6.5, 4.0], vec![4.0, 2.5]]).unwrap();
        assert_eq!(c.s, expect_s);
        // S₁ = X̃₁X̃₂ᵀ = (2,1)ᵀ(3,2).
        let expect_s1 = DenseMatrix::from_rows(&[vec![6.0, 4.0], vec![3.0, 2.0]]).unwrap();
        assert_eq!(c.s1, expect_s1);
    }
}
