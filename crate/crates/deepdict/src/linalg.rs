//! Dense matrix primitives shared by every other module.
//!
//! Everything is `f64` and row-major. Matrices are validated at construction:
//! dimensions are positive and entries are finite, so downstream code never
//! needs to re-check.

use crate::error::{Error, Result};

/// Default relative tolerance for the power iteration in [`spectral_norm`].
pub const SPECTRAL_TOL: f64 = 1e-10;

/// Default iteration cap for [`spectral_norm`].
pub const SPECTRAL_MAX_ITER: usize = 20_000;

/// Relative threshold below which a pivot/eigenvalue is treated as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Magnitude below which an entry counts as a (numerical) zero when counting
/// sparsity or detecting degenerate columns.
pub const ZERO_TOL: f64 = 1e-12;

/// Dense real matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Build from a row-major entry vector. Rejects empty dimensions,
    /// length mismatches and non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Parameter(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Parameter(format!(
                "entry vector has length {}, expected {}",
                data.len(),
                rows * cols
            )));
        }
        for (k, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: k / cols,
                    col: k % cols,
                });
            }
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_vec(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "dimensions must be positive");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Copy column `j` into `out` (length `rows`).
    pub fn column_into(&self, j: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.rows);
        for i in 0..self.rows {
            out[i] = self.data[i * self.cols + j];
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.column_into(j, &mut out);
        out
    }

    pub fn set_column(&mut self, j: usize, col: &[f64]) {
        debug_assert_eq!(col.len(), self.rows);
        for i in 0..self.rows {
            self.data[i * self.cols + j] = col[i];
        }
    }

    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let mut m = Matrix::zeros(rows, cols.max(1));
        if cols == 0 {
            return Err(Error::Parameter("no columns supplied".into()));
        }
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::Parameter(format!(
                    "column {j} has length {}, expected {rows}",
                    c.len()
                )));
            }
            m.set_column(j, c);
        }
        Matrix::from_vec(rows, cols, m.data)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self * other`, checked.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matrix product",
                got_rows: other.rows,
                got_cols: other.cols,
                want: format!("{} rows", self.cols),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        // i-k-j loop order: streams over rows of `other`.
        for i in 0..self.rows {
            let arow = &self.data[i * self.cols..(i + 1) * self.cols];
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &aik) in arow.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(brow.iter()) {
                    *o += aik * b;
                }
            }
        }
        Ok(out)
    }

    /// `out = self * x`.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            out[i] = acc;
        }
    }

    /// `out = self^T * x`.
    pub fn matvec_t(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.fill(0.0);
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (o, &a) in out.iter_mut().zip(row.iter()) {
                *o += xi * a;
            }
        }
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        assert!(c.is_finite());
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context: "elementwise op",
                got_rows: other.rows,
                got_cols: other.cols,
                want: format!("{}x{}", self.rows, self.cols),
            });
        }
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| f(*a, *b))
            .collect();
        Matrix::from_vec(self.rows, self.cols, data)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.rows {
            let v = self.data[i * self.cols + j];
            acc += v * v;
        }
        acc.sqrt()
    }

    /// Number of entries with magnitude above [`ZERO_TOL`] in column `j`.
    pub fn column_nnz(&self, j: usize) -> usize {
        (0..self.rows)
            .filter(|&i| self.data[i * self.cols + j].abs() > ZERO_TOL)
            .count()
    }

    /// Submatrix consisting of the given columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, indices.len().max(1));
        for (jj, &j) in indices.iter().enumerate() {
            for i in 0..self.rows {
                out.data[i * indices.len() + jj] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self^T * self` (cols x cols).
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.cols, self.cols);
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for a in 0..self.cols {
                let ra = row[a];
                if ra == 0.0 {
                    continue;
                }
                for b in a..self.cols {
                    g.data[a * self.cols + b] += ra * row[b];
                }
            }
        }
        for a in 0..self.cols {
            for b in 0..a {
                g.data[a * self.cols + b] = g.data[b * self.cols + a];
            }
        }
        g
    }

    /// `self * self^T` (rows x rows).
    pub fn gram_t(&self) -> Matrix {
        self.transpose().gram()
    }
}

/// Strictly increasing index set in `[0, r)`; the support of a sparse vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    pub fn new(indices: Vec<usize>, r: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Parameter("empty support".into()));
        }
        for w in indices.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Parameter(
                    "support indices must be strictly increasing".into(),
                ));
            }
        }
        if *indices.last().unwrap() >= r {
            return Err(Error::Parameter(format!(
                "support index {} out of range [0, {r})",
                indices.last().unwrap()
            )));
        }
        Ok(SupportSet { indices })
    }

    pub fn from_unsorted(mut indices: Vec<usize>, r: usize) -> Result<Self> {
        indices.sort_unstable();
        Self::new(indices, r)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest singular value via power iteration on `A^T A`, deterministic
/// all-ones start. Stops when the symmetric eigen-residual drops below
/// `tol` relative to the current estimate.
pub fn spectral_norm(a: &Matrix, tol: f64, max_iter: usize) -> Result<f64> {
    if tol <= 0.0 {
        return Err(Error::Parameter("tol must be positive".into()));
    }
    if a.max_abs() == 0.0 {
        return Err(Error::Parameter("spectral_norm of the zero matrix".into()));
    }
    let r = a.cols();
    let mut v = vec![1.0 / (r as f64).sqrt(); r];
    let mut av = vec![0.0; a.rows()];
    let mut w = vec![0.0; r];
    let mut lambda = 0.0;
    let mut fallback = 0usize;
    for _ in 0..max_iter {
        a.matvec(&v, &mut av);
        a.matvec_t(&av, &mut w);
        let wn = norm2(&w);
        if wn <= f64::MIN_POSITIVE {
            // start vector fell in the null space; restart on a basis vector
            v.fill(0.0);
            v[fallback.min(r - 1)] = 1.0;
            fallback += 1;
            if fallback > r {
                return Err(Error::NonConvergence {
                    iterations: max_iter,
                    last_estimate: 0.0,
                });
            }
            continue;
        }
        // Rayleigh quotient with unit v
        lambda = v.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>();
        let mut res = 0.0;
        for (wi, vi) in w.iter().zip(v.iter()) {
            let d = wi - lambda * vi;
            res += d * d;
        }
        if res.sqrt() <= tol * lambda.max(f64::MIN_POSITIVE) {
            return Ok(lambda.max(0.0).sqrt());
        }
        for (vi, wi) in v.iter_mut().zip(w.iter()) {
            *vi = wi / wn;
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        last_estimate: lambda.max(0.0).sqrt(),
    })
}

/// [`spectral_norm`] with default tolerance and iteration cap.
pub fn operator_norm(a: &Matrix) -> Result<f64> {
    spectral_norm(a, SPECTRAL_TOL, SPECTRAL_MAX_ITER)
}

/// Smallest singular value (of the `min(rows, cols)` spectrum).
#[derive(Clone, Copy, Debug)]
pub struct MinSingularValue {
    pub value: f64,
    /// Set when the Gram matrix is numerically singular; `value` is 0 then.
    pub rank_deficient: bool,
}

/// Smallest singular value via the eigenvalues of the smaller-side Gram
/// matrix. Near-singular input is reported through the flag, not an error.
pub fn min_singular_value(a: &Matrix, tol: f64, max_iter: usize) -> MinSingularValue {
    let g = if a.cols() <= a.rows() { a.gram() } else { a.gram_t() };
    let (eigs, _) = jacobi_eigen_sym(&g, false, tol, max_iter);
    let lam_max = eigs.last().copied().unwrap_or(0.0).max(0.0);
    let lam_min = eigs.first().copied().unwrap_or(0.0).max(0.0);
    let smax = lam_max.sqrt();
    let smin = lam_min.sqrt();
    if smin <= ZERO_TOL * smax.max(1.0) {
        MinSingularValue {
            value: 0.0,
            rank_deficient: true,
        }
    } else {
        MinSingularValue {
            value: smin,
            rank_deficient: false,
        }
    }
}

/// Extreme singular values (min, max) of `a`, via its smaller-side Gram
/// matrix. Intended for small submatrices.
pub fn singular_extremes(a: &Matrix) -> (f64, f64) {
    let g = if a.cols() <= a.rows() { a.gram() } else { a.gram_t() };
    let (eigs, _) = jacobi_eigen_sym(&g, false, 1e-14, 100);
    let lo = eigs.first().copied().unwrap_or(0.0).max(0.0).sqrt();
    let hi = eigs.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    (lo, hi)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues in ascending order and, optionally, the orthogonal
/// eigenvector matrix (columns match the eigenvalue order).
pub(crate) fn jacobi_eigen_sym(
    g: &Matrix,
    want_vectors: bool,
    tol: f64,
    max_sweeps: usize,
) -> (Vec<f64>, Option<Matrix>) {
    debug_assert_eq!(g.rows(), g.cols());
    let n = g.rows();
    let mut a = g.clone();
    let mut v = if want_vectors { Some(Matrix::identity(n)) } else { None };
    let fro = a.frobenius_norm().max(f64::MIN_POSITIVE);
    for _ in 0..max_sweeps.max(1) {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q) * a.get(p, q);
            }
        }
        if (2.0 * off).sqrt() <= tol * fro {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                if let Some(vm) = v.as_mut() {
                    for k in 0..n {
                        let vkp = vm.get(k, p);
                        let vkq = vm.get(k, q);
                        vm.set(k, p, c * vkp - s * vkq);
                        vm.set(k, q, s * vkp + c * vkq);
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).partial_cmp(&a.get(j, j)).unwrap());
    let eigs: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let vecs = v.map(|vm| {
        let mut out = Matrix::zeros(n, n);
        for (newj, &oldj) in order.iter().enumerate() {
            for i in 0..n {
                out.set(i, newj, vm.get(i, oldj));
            }
        }
        out
    });
    (eigs, vecs)
}

/// Minimizer `A` of `||B - A X||_F`; among minimizers, the one of minimum
/// Frobenius norm (pseudo-inverse semantics, `A = B X^+`).
///
/// Full-rank systems go through Householder QR with column pivoting on
/// `X^T`; rank-deficient ones fall back to a spectral pseudo-inverse of
/// `X X^T`.
pub fn least_squares_min_norm(b: &Matrix, x: &Matrix) -> Result<Matrix> {
    if b.cols() != x.cols() {
        return Err(Error::DimensionMismatch {
            context: "least squares: B and X must share the sample dimension",
            got_rows: x.rows(),
            got_cols: x.cols(),
            want: format!("{} cols", b.cols()),
        });
    }
    if x.max_abs() < ZERO_TOL {
        return Err(Error::DegenerateCodeMatrix);
    }
    let xt = x.transpose(); // n x r design matrix
    match qr_solve_full_rank(&xt, b)? {
        Some(a) => Ok(a),
        None => pinv_gram_solve(b, x),
    }
}

/// Householder QR with column pivoting on the n x r design matrix `xt`;
/// solves `xt * a_i ~ b_i` for every row `b_i` of `b`. Returns `None` when
/// the pivoted R reveals rank deficiency.
fn qr_solve_full_rank(xt: &Matrix, b: &Matrix) -> Result<Option<Matrix>> {
    let n = xt.rows();
    let r = xt.cols();
    if n < r {
        // fewer samples than unknowns: minimizers are non-unique
        return Ok(None);
    }
    let mut q = xt.clone(); // factored in place, Householder vectors below the diagonal
    let mut perm: Vec<usize> = (0..r).collect();
    let mut col_norms: Vec<f64> = (0..r).map(|j| q.column_norm(j).powi(2)).collect();
    let d = b.rows();
    // C = B^T, transformed alongside
    let mut c = b.transpose();
    let mut rdiag = vec![0.0; r];

    for k in 0..r {
        // pivot: move the column with the largest remaining norm to position k
        let (pk, _) = col_norms
            .iter()
            .enumerate()
            .skip(k)
            .fold((k, -1.0), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        if pk != k {
            for i in 0..n {
                let t = q.get(i, k);
                q.set(i, k, q.get(i, pk));
                q.set(i, pk, t);
            }
            col_norms.swap(k, pk);
            perm.swap(k, pk);
        }
        // Householder vector for column k, rows k..n
        let mut alpha = 0.0;
        for i in k..n {
            alpha += q.get(i, k) * q.get(i, k);
        }
        let alpha = alpha.sqrt();
        rdiag[k] = alpha;
        if alpha <= f64::MIN_POSITIVE {
            continue; // column already zero below the diagonal
        }
        let akk = q.get(k, k);
        let sign = if akk >= 0.0 { 1.0 } else { -1.0 };
        let v0 = akk + sign * alpha;
        rdiag[k] = -sign * alpha;
        // v = (v0, q[k+1..n, k]); beta = 2 / ||v||^2
        let mut vnorm2 = v0 * v0;
        for i in (k + 1)..n {
            vnorm2 += q.get(i, k) * q.get(i, k);
        }
        if vnorm2 <= f64::MIN_POSITIVE {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // apply to remaining columns of q
        for j in (k + 1)..r {
            let mut dot = v0 * q.get(k, j);
            for i in (k + 1)..n {
                dot += q.get(i, k) * q.get(i, j);
            }
            let f = beta * dot;
            q.set(k, j, q.get(k, j) - f * v0);
            for i in (k + 1)..n {
                q.set(i, j, q.get(i, j) - f * q.get(i, k));
            }
        }
        // apply to every right-hand side (columns of c)
        for j in 0..d {
            let mut dot = v0 * c.get(k, j);
            for i in (k + 1)..n {
                dot += q.get(i, k) * c.get(i, j);
            }
            let f = beta * dot;
            c.set(k, j, c.get(k, j) - f * v0);
            for i in (k + 1)..n {
                c.set(i, j, c.get(i, j) - f * q.get(i, k));
            }
        }
        // store the R entry; the vector stays below the diagonal
        q.set(k, k, rdiag[k]);
        // update remaining column norms
        for j in (k + 1)..r {
            let t = q.get(k, j);
            col_norms[j] = (col_norms[j] - t * t).max(0.0);
        }
    }

    let rmax = rdiag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if rmax <= f64::MIN_POSITIVE || rdiag.iter().any(|v| v.abs() <= RANK_TOL * rmax) {
        return Ok(None);
    }

    // back substitution: R w = c_upper for each right-hand side
    let mut a = Matrix::zeros(d, r);
    for j in 0..d {
        let mut w = vec![0.0; r];
        for k in (0..r).rev() {
            let mut acc = c.get(k, j);
            for m in (k + 1)..r {
                acc -= q.get(k, m) * w[m];
            }
            w[k] = acc / rdiag[k];
        }
        for k in 0..r {
            a.set(j, perm[k], w[k]);
        }
    }
    Ok(Some(a))
}

/// Rank-deficient path: `A = (B X^T) (X X^T)^+` via a spectral
/// decomposition of the r x r Gram matrix.
fn pinv_gram_solve(b: &Matrix, x: &Matrix) -> Result<Matrix> {
    let g = x.gram_t(); // r x r
    let (eigs, vecs) = jacobi_eigen_sym(&g, true, 1e-14, 100);
    let v = vecs.expect("vectors requested");
    let lam_max = eigs.iter().fold(0.0f64, |m, &e| m.max(e));
    // forming X X^T squares the condition number, so the noise floor of a
    // null eigenvalue is ~eps * lam_max; truncate well above it
    let cutoff = lam_max * 1e-10;
    let r = g.rows();
    // G^+ = V diag(1/lam) V^T over the retained spectrum
    let mut gplus = Matrix::zeros(r, r);
    for k in 0..r {
        let lam = eigs[k];
        if lam <= cutoff {
            continue;
        }
        let inv = 1.0 / lam;
        for i in 0..r {
            let vik = v.get(i, k);
            if vik == 0.0 {
                continue;
            }
            for j in 0..r {
                let w = gplus.get(i, j) + inv * vik * v.get(j, k);
                gplus.set(i, j, w);
            }
        }
    }
    let bxt = b.matmul(&x.transpose())?;
    bxt.matmul(&gplus)
}

/// Rescale every column to unit Euclidean norm.
pub fn column_normalize(a: &Matrix) -> Result<Matrix> {
    let mut out = a.clone();
    for j in 0..a.cols() {
        let nrm = a.column_norm(j);
        if nrm < ZERO_TOL {
            return Err(Error::ZeroColumn { index: j });
        }
        for i in 0..a.rows() {
            out.set(i, j, a.get(i, j) / nrm);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_rejects_bad_input() {
        assert!(Matrix::from_vec(0, 3, vec![]).is_err());
        assert!(Matrix::from_vec(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::from_vec(1, 2, vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn spectral_norm_identity() {
        let a = Matrix::identity(5);
        let s = spectral_norm(&a, 1e-10, 1000).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_diag() {
        let a = Matrix::diag(&[1.0, 2.0, 3.0]);
        let s = spectral_norm(&a, 1e-10, 5000).unwrap();
        assert!((s - 3.0).abs() < 1e-9, "got {s}");
    }

    #[test]
    fn spectral_norm_rejects_zero_matrix() {
        let a = Matrix::zeros(3, 3);
        assert!(spectral_norm(&a, 1e-10, 100).is_err());
    }

    #[test]
    fn spectral_norm_scaling() {
        // |c| * sigma_max for c in {-2, 0.5}
        let a = Matrix::from_vec(2, 3, vec![1.0, -0.5, 2.0, 0.25, 1.5, -1.0]).unwrap();
        let s = operator_norm(&a).unwrap();
        for c in [-2.0, 0.5] {
            let sc = operator_norm(&a.scaled(c)).unwrap();
            assert!((sc - c.abs() * s).abs() < 1e-9 * s.max(1.0));
        }
    }

    #[test]
    fn min_singular_identity_and_diag() {
        let id = Matrix::identity(4);
        let m = min_singular_value(&id, 1e-12, 100);
        assert!((m.value - 1.0).abs() < 1e-12 && !m.rank_deficient);

        let d = Matrix::diag(&[1.0, 2.0, 3.0]);
        let m = min_singular_value(&d, 1e-12, 100);
        assert!((m.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn min_singular_flags_rank_deficiency() {
        let a = Matrix::from_vec(2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        let m = min_singular_value(&a, 1e-12, 100);
        assert_eq!(m.value, 0.0);
        assert!(m.rank_deficient);
    }

    #[test]
    fn spectral_dominates_min_singular() {
        let a = Matrix::from_vec(3, 2, vec![0.3, 1.0, -0.7, 0.2, 0.1, 0.9]).unwrap();
        let hi = operator_norm(&a).unwrap();
        let lo = min_singular_value(&a, 1e-12, 100).value;
        assert!(hi >= lo && lo >= 0.0);
    }

    #[test]
    fn least_squares_identity_code() {
        let b = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let x = Matrix::identity(3);
        let a = least_squares_min_norm(&b, &x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn least_squares_recovers_consistent_system() {
        // B = A0 X with X full row rank
        let a0 = Matrix::from_vec(2, 2, vec![1.0, 2.0, -1.0, 0.5]).unwrap();
        let x = Matrix::from_vec(2, 4, vec![1.0, 0.0, 2.0, 1.0, 0.0, 1.0, -1.0, 3.0]).unwrap();
        let b = a0.matmul(&x).unwrap();
        let a = least_squares_min_norm(&b, &x).unwrap();
        assert!(a.sub(&a0).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn least_squares_rejects_zero_code() {
        let b = Matrix::zeros(2, 3);
        let x = Matrix::zeros(2, 3);
        assert!(matches!(
            least_squares_min_norm(&b, &x),
            Err(Error::DegenerateCodeMatrix)
        ));
    }

    #[test]
    fn least_squares_is_residual_projection() {
        let b = Matrix::from_vec(3, 4, vec![0.5, -1.0, 2.0, 0.1, 1.0, 0.3, -0.2, 0.9, 0.0, 1.2, 0.4, -0.6]).unwrap();
        let x = Matrix::from_vec(2, 4, vec![1.0, 0.5, -0.3, 0.2, 0.0, 1.0, 0.7, -0.4]).unwrap();
        let a1 = least_squares_min_norm(&b, &x).unwrap();
        let b2 = a1.matmul(&x).unwrap();
        let a2 = least_squares_min_norm(&b2, &x).unwrap();
        assert!(a2.sub(&a1).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn column_normalize_345() {
        let a = Matrix::from_vec(2, 1, vec![3.0, 4.0]).unwrap();
        let n = column_normalize(&a).unwrap();
        assert!((n.get(0, 0) - 0.6).abs() < 1e-15);
        assert!((n.get(1, 0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn column_normalize_idempotent() {
        let a = Matrix::from_vec(3, 2, vec![1.0, -2.0, 0.5, 0.3, 2.0, 1.0]).unwrap();
        let n1 = column_normalize(&a).unwrap();
        let n2 = column_normalize(&n1).unwrap();
        assert!(n2.sub(&n1).unwrap().max_abs() < 1e-15);
        for j in 0..n1.cols() {
            assert!((n1.column_norm(j) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn column_normalize_names_zero_column() {
        let a = Matrix::from_vec(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        match column_normalize(&a) {
            Err(Error::ZeroColumn { index }) => assert_eq!(index, 1),
            other => panic!("expected ZeroColumn, got {other:?}"),
        }
    }

    #[test]
    fn support_set_validation() {
        assert!(SupportSet::new(vec![0, 1, 1], 5).is_err());
        assert!(SupportSet::new(vec![0, 5], 5).is_err());
        assert!(SupportSet::new(vec![2, 0], 5).is_err());
        let s = SupportSet::from_unsorted(vec![4, 0, 2], 5).unwrap();
        assert_eq!(s.as_slice(), &[0, 2, 4]);
    }

    #[test]
    fn jacobi_eigen_diagonalizes() {
        // pseudo-random symmetric 5x5
        let mut vals = Vec::new();
        let mut st = 99u64;
        for _ in 0..25 {
            st = st.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            vals.push((st >> 11) as f64 / (1u64 << 53) as f64 - 0.5);
        }
        let m = Matrix::from_vec(5, 5, vals).unwrap();
        let g = m.add(&m.transpose()).unwrap();
        let (eigs, vecs) = jacobi_eigen_sym(&g, true, 1e-14, 100);
        let v = vecs.unwrap();
        for k in 0..5 {
            // G v_k == lambda_k v_k
            let col = v.column(k);
            let mut gv = vec![0.0; 5];
            g.matvec(&col, &mut gv);
            for i in 0..5 {
                assert!(
                    (gv[i] - eigs[k] * col[i]).abs() < 1e-10,
                    "eigenpair {k} mismatch: {} vs {}",
                    gv[i],
                    eigs[k] * col[i]
                );
            }
        }
    }

    #[test]
    fn jacobi_eigen_small_symmetric() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let g = Matrix::from_vec(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let (e, v) = jacobi_eigen_sym(&g, true, 1e-14, 50);
        assert!((e[0] - 1.0).abs() < 1e-12);
        assert!((e[1] - 3.0).abs() < 1e-12);
        let v = v.unwrap();
        // columns orthonormal
        let vtv = v.gram();
        assert!(vtv.sub(&Matrix::identity(2)).unwrap().max_abs() < 1e-12);
    }
}
