//! Dense row-major matrices and the handful of kernels the estimators need:
//! Cholesky factorization, SPD solves, matrix norms and a power-based bound on
//! the spectral radius.

use std::fmt;

use crate::error::{Error, Result};

/// Cholesky pivots at or below this fraction of the largest diagonal entry
/// are rejected.
pub const PIVOT_TOL: f64 = 1e-12;
/// Relative residual target for factorizations and fixed-point solves.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Relative stopping tolerance for power iteration.
pub const POWER_ITER_TOL: f64 = 1e-10;
pub const POWER_ITER_MAX: usize = 10_000;
/// Smallest admissible pivot (relative to the diagonal scale) for a matrix to
/// count as positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;
/// Relative asymmetry tolerated by [`cholesky`].
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Default exponent used by [`spectral_radius_bound`].
pub const DEFAULT_RADIUS_POWER: u32 = 32;

/// A dense real matrix stored in row-major order. All entries are finite.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Matrix norms used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    Frobenius,
    /// Largest singular value.
    Spectral,
    /// Maximum absolute column sum.
    InducedL1,
    /// Maximum absolute row sum.
    InducedLinf,
    /// Largest absolute entry.
    ElementMax,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, rejecting empty shapes and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Unvalidated constructor for kernels whose output is finite by
    /// construction.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert!(rows > 0 && cols > 0 && data.len() == rows * cols);
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(n, m, rows.concat())
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self::from_raw(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, value: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = value;
        }
        m
    }

    pub fn column_vector(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        let mut out = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        Self::from_raw(self.cols, self.rows, out)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let out_row = &mut out[i * m..(i + 1) * m];
            for l in 0..k {
                let a = self.data[i * k + l];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[l * m..(l + 1) * m];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self::from_raw(n, m, out))
    }

    /// `selfᵀ · other` without materializing the transpose.
    pub fn t_matmul(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "({}x{})ᵀ times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, m) = (self.cols, other.cols);
        let mut out = vec![0.0; n * m];
        for l in 0..self.rows {
            let a_row = self.row(l);
            let b_row = other.row(l);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out[i * m..(i + 1) * m];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self::from_raw(n, m, out))
    }

    pub fn mat_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `selfᵀ · v`.
    pub fn t_mat_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "({}x{})ᵀ times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        Ok(out)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self::from_raw(self.rows, self.cols, data))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * c).collect(),
        )
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.rows,
            self.cols,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// `(self + selfᵀ) / 2`.
    pub fn symmetrized(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(
                "symmetrize needs a square matrix".into(),
            ));
        }
        let n = self.rows;
        let mut out = self.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0.0).count()
    }

    /// Copies the block of rows `r0..r0+nr` and columns `c0..c0+nc`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Result<Self> {
        if nr == 0 || nc == 0 || r0 + nr > self.rows || c0 + nc > self.cols {
            return Err(Error::DimensionMismatch(format!(
                "block ({r0},{c0})+({nr},{nc}) of {:?}",
                self.shape()
            )));
        }
        let mut data = Vec::with_capacity(nr * nc);
        for i in r0..r0 + nr {
            data.extend_from_slice(&self.data[i * self.cols + c0..i * self.cols + c0 + nc]);
        }
        Ok(Self::from_raw(nr, nc, data))
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(blocks: &[Self]) -> Result<Self> {
        let first = blocks.first().ok_or(Error::Empty)?;
        if blocks.iter().any(|b| b.cols != first.cols) {
            return Err(Error::DimensionMismatch(
                "vstack column counts differ".into(),
            ));
        }
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut data = Vec::with_capacity(rows * first.cols);
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        Ok(Self::from_raw(rows, first.cols, data))
    }

    /// Splits the rows into consecutive blocks of `block_rows` rows each.
    pub fn split_rows(&self, block_rows: usize) -> Result<Vec<Self>> {
        if block_rows == 0 || self.rows % block_rows != 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} rows do not split into blocks of {block_rows}",
                self.rows
            )));
        }
        (0..self.rows / block_rows)
            .map(|k| self.block(k * block_rows, 0, block_rows, self.cols))
            .collect()
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        matrix_norm(self, kind)
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Computes the requested norm. The spectral norm uses power iteration on
/// `mᵀm` from the normalized all-ones vector.
pub fn matrix_norm(m: &DenseMatrix, kind: NormKind) -> f64 {
    match kind {
        NormKind::Frobenius => m.data.iter().map(|v| v * v).sum::<f64>().sqrt(),
        NormKind::ElementMax => m.max_abs(),
        NormKind::InducedLinf => (0..m.rows)
            .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NormKind::InducedL1 => {
            let mut sums = vec![0.0; m.cols];
            for i in 0..m.rows {
                for (s, v) in sums.iter_mut().zip(m.row(i)) {
                    *s += v.abs();
                }
            }
            sums.into_iter().fold(0.0, f64::max)
        }
        NormKind::Spectral => spectral_norm(m),
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn spectral_norm(m: &DenseMatrix) -> f64 {
    let scale = m.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    // Working on m / scale keeps mᵀm well inside the representable range.
    let a = m.scale(1.0 / scale);
    let n = a.cols;
    let mut x = vec![1.0; n];
    normalize(&mut x);
    let mut restarted = false;
    let mut estimate: f64 = 0.0;
    for _ in 0..POWER_ITER_MAX {
        let ax = a.mat_vec(&x).expect("shape checked");
        let mut y = a.t_mat_vec(&ax).expect("shape checked");
        // Rayleigh quotient xᵀ(aᵀa)x with ‖x‖ = 1.
        let rq: f64 = ax.iter().map(|v| v * v).sum();
        let ny = normalize(&mut y);
        if ny == 0.0 {
            if restarted {
                return estimate.sqrt() * scale;
            }
            // The all-ones start is orthogonal to the row space; retry from a
            // fixed irregular vector.
            restarted = true;
            x = (0..n)
                .map(|i| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_75).fract())
                .collect();
            normalize(&mut x);
            continue;
        }
        let converged = (rq - estimate).abs() <= POWER_ITER_TOL * rq;
        estimate = rq;
        x = y;
        if converged {
            break;
        }
    }
    estimate.sqrt() * scale
}

/// Upper bound on the spectral radius of a square matrix:
/// `‖m^power‖₂^(1/power)` with `m^power` formed by repeated squaring.
pub fn spectral_radius_bound(m: &DenseMatrix, power: u32) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(
            "spectral radius needs a square matrix".into(),
        ));
    }
    if power == 0 || !power.is_power_of_two() {
        return Err(Error::BadParams(format!(
            "power {power} is not a power of two"
        )));
    }
    let mut acc = m.clone();
    let mut k = 1;
    while k < power {
        acc = acc.matmul(&acc)?;
        if acc.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow);
        }
        k *= 2;
    }
    let norm = spectral_norm(&acc);
    if !norm.is_finite() {
        return Err(Error::Overflow);
    }
    Ok(norm.powf(1.0 / f64::from(power)))
}

fn check_symmetric(m: &DenseMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} is not square",
            m.shape()
        )));
    }
    let tol = SYMMETRY_TOL * m.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..m.rows {
        for j in (i + 1)..m.cols {
            if (m.get(i, j) - m.get(j, i)).abs() > tol {
                return Err(Error::DimensionMismatch(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ = m`.
pub fn cholesky(m: &DenseMatrix) -> Result<DenseMatrix> {
    check_symmetric(m)?;
    let n = m.rows;
    let max_diag = (0..n).map(|i| m.get(i, i)).fold(0.0, f64::max);
    let threshold = PIVOT_TOL * max_diag;
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > threshold) {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Ok(DenseMatrix::from_raw(n, n, l))
}

/// Solves `L·Lᵀ·x = rhs` given the Cholesky factor `L`.
pub fn cholesky_solve(l: &DenseMatrix, rhs: &DenseMatrix) -> Result<DenseMatrix> {
    let n = l.rows;
    if rhs.rows != n {
        return Err(Error::DimensionMismatch(format!(
            "factor is {n}x{n}, right-hand side has {} rows",
            rhs.rows
        )));
    }
    let k = rhs.cols;
    let mut x = rhs.data.clone();
    // Forward substitution, all right-hand sides at once.
    for i in 0..n {
        for p in 0..i {
            let lip = l.get(i, p);
            if lip == 0.0 {
                continue;
            }
            for c in 0..k {
                x[i * k + c] -= lip * x[p * k + c];
            }
        }
        let d = l.get(i, i);
        for c in 0..k {
            x[i * k + c] /= d;
        }
    }
    for i in (0..n).rev() {
        for p in (i + 1)..n {
            let lpi = l.get(p, i);
            if lpi == 0.0 {
                continue;
            }
            for c in 0..k {
                x[i * k + c] -= lpi * x[p * k + c];
            }
        }
        let d = l.get(i, i);
        for c in 0..k {
            x[i * k + c] /= d;
        }
    }
    DenseMatrix::new(n, k, x)
}

/// Solves `m·x = rhs` for symmetric positive definite `m`.
pub fn solve_spd(m: &DenseMatrix, rhs: &DenseMatrix) -> Result<DenseMatrix> {
    if rhs.rows != m.cols {
        return Err(Error::DimensionMismatch(format!(
            "{:?} system with {:?} right-hand side",
            m.shape(),
            rhs.shape()
        )));
    }
    let l = cholesky(m)?;
    cholesky_solve(&l, rhs)
}

/// Smallest pivot of a diagonally pivoted Cholesky elimination, relative to
/// the largest diagonal entry (or one, whichever is larger).
///
/// Non-negative for positive semidefinite input up to rounding; a clearly
/// negative value certifies indefiniteness.
pub fn psd_min_pivot(m: &DenseMatrix) -> Result<f64> {
    check_symmetric(m)?;
    let n = m.rows;
    let mut a = m.data.clone();
    let scale = (0..n).map(|i| m.get(i, i).abs()).fold(1.0, f64::max);
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut min_pivot = f64::INFINITY;
    while !remaining.is_empty() {
        let (pos, &piv) = remaining
            .iter()
            .enumerate()
            .max_by(|x, y| a[x.1 * n + x.1].total_cmp(&a[y.1 * n + y.1]))
            .expect("non-empty");
        let d = a[piv * n + piv];
        if d <= PSD_TOL * scale {
            // What is left is numerically zero or negative; report the most
            // negative remaining diagonal entry.
            let worst = remaining
                .iter()
                .map(|&i| a[i * n + i])
                .fold(f64::INFINITY, f64::min);
            return Ok(min_pivot.min(worst / scale));
        }
        min_pivot = min_pivot.min(d / scale);
        remaining.swap_remove(pos);
        for &i in &remaining {
            let f = a[i * n + piv] / d;
            for &j in &remaining {
                a[i * n + j] -= f * a[piv * n + j];
            }
        }
    }
    Ok(min_pivot)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert_eq!(DenseMatrix::new(0, 2, vec![]), Err(Error::Empty));
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn cholesky_diagonal_and_identity() {
        let l = cholesky(&m(&[&[4.0, 0.0], &[0.0, 9.0]])).unwrap();
        assert_eq!(l, m(&[&[2.0, 0.0], &[0.0, 3.0]]));
        assert_eq!(
            cholesky(&DenseMatrix::identity(3)).unwrap(),
            DenseMatrix::identity(3)
        );
    }

    #[test]
    fn cholesky_reconstructs_two_by_two() {
        let a = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let l = cholesky(&a).unwrap();
        assert_eq!(l.get(0, 1), 0.0);
        let back = l.matmul(&l.transpose()).unwrap();
        assert!(back.max_abs_diff(&a).unwrap() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite_and_asymmetric() {
        let err = cholesky(&m(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { index: 1, .. }));
        assert!(matches!(
            cholesky(&m(&[&[1.0, 0.5], &[0.0, 1.0]])),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            cholesky(&DenseMatrix::zeros(2, 2)),
            Err(Error::NotPositiveDefinite { index: 0, .. })
        ));
    }

    #[test]
    fn solve_spd_small_cases() {
        let x = solve_spd(&DenseMatrix::identity(2), &m(&[&[5.0], &[7.0]])).unwrap();
        assert_eq!(x, m(&[&[5.0], &[7.0]]));
        let x = solve_spd(&m(&[&[2.0, 0.0], &[0.0, 4.0]]), &m(&[&[2.0], &[8.0]])).unwrap();
        assert!(x.max_abs_diff(&m(&[&[1.0], &[2.0]])).unwrap() < 1e-15);
    }

    #[test]
    fn norms_of_small_matrices() {
        let a = m(&[&[1.0, -2.0], &[3.0, 4.0]]);
        assert_eq!(matrix_norm(&a, NormKind::InducedL1), 6.0);
        assert_eq!(matrix_norm(&a, NormKind::InducedLinf), 7.0);
        assert_eq!(matrix_norm(&a, NormKind::ElementMax), 4.0);
        assert!((matrix_norm(&a, NormKind::Frobenius) - 30f64.sqrt()).abs() < 1e-15);
        assert!((matrix_norm(&DenseMatrix::identity(4), NormKind::Spectral) - 1.0).abs() < 1e-12);
        // mᵀm = diag(0, 4) by hand, so σ_max = 2.
        let nil = m(&[&[0.0, 2.0], &[0.0, 0.0]]);
        assert!((matrix_norm(&nil, NormKind::Spectral) - 2.0).abs() < 1e-12);
        assert_eq!(
            matrix_norm(&DenseMatrix::zeros(3, 2), NormKind::Spectral),
            0.0
        );
    }

    #[test]
    fn spectral_norm_when_ones_is_in_the_kernel() {
        // Columns cancel on the all-ones vector; singular values are 2 and 0.
        let a = m(&[&[1.0, -1.0], &[1.0, -1.0]]);
        assert!((matrix_norm(&a, NormKind::Spectral) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn spectral_radius_bound_simple_cases() {
        let half = DenseMatrix::scaled_identity(3, 0.5);
        assert!((spectral_radius_bound(&half, 32).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(
            spectral_radius_bound(&DenseMatrix::zeros(2, 2), 32).unwrap(),
            0.0
        );
        assert!(spectral_radius_bound(&half, 3).is_err());
        let huge = DenseMatrix::scaled_identity(2, 1e20);
        assert_eq!(spectral_radius_bound(&huge, 32), Err(Error::Overflow));
    }

    #[test]
    fn spectral_radius_bound_on_stable_companion() {
        // Companion of x_t = 0.5 x_{t-1} + 0.3 x_{t-2}: roots of z² - 0.5z - 0.3.
        let comp = m(&[&[0.5, 1.0], &[0.3, 0.0]]);
        let disc: f64 = 0.25 + 4.0 * 0.3;
        let rho = (0.5 + disc.sqrt()) / 2.0;
        let bound = spectral_radius_bound(&comp, 32).unwrap();
        assert!(bound < 1.0);
        assert!(bound >= rho - 1e-12);
        // The bound tightens toward ρ as the power grows.
        assert!(bound - rho < 0.05);
    }

    #[test]
    fn psd_min_pivot_detects_indefinite() {
        assert!(psd_min_pivot(&m(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap() < -1.0);
        assert!(psd_min_pivot(&m(&[&[1.0, 1.0], &[1.0, 1.0]])).unwrap() >= -PSD_TOL);
        assert!(psd_min_pivot(&DenseMatrix::zeros(3, 3)).unwrap() >= -PSD_TOL);
        assert!(psd_min_pivot(&DenseMatrix::identity(3)).unwrap() > 0.5);
    }

    #[test]
    fn block_helpers() {
        let a = DenseMatrix::from_fn(4, 2, |i, j| (i * 2 + j) as f64).unwrap();
        let parts = a.split_rows(2).unwrap();
        assert_eq!(parts[1], m(&[&[4.0, 5.0], &[6.0, 7.0]]));
        assert_eq!(DenseMatrix::vstack(&parts).unwrap(), a);
        assert!(a.split_rows(3).is_err());
        let at_b = a.t_matmul(&a).unwrap();
        assert_eq!(at_b, a.transpose().matmul(&a).unwrap());
    }
}
