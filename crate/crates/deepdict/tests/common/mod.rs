//! Reference oracles for the integration suites. Everything here is an
//! independent computation path from the library: a one-sided Jacobi SVD
//! (the library uses power iteration and a symmetric two-sided Jacobi on
//! Gram matrices), a coordinate-descent lasso solver, an exhaustive
//! support-enumeration basis pursuit, Gaussian elimination, and the
//! harmonic-sum coupon-collector closed form.

#![allow(dead_code)]

use deepdict::Matrix;

/// Singular value decomposition by one-sided Jacobi rotations on the
/// columns: `A = U diag(s) V^T` with `s` descending.
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

/// One-sided Jacobi SVD. Operates on the tall orientation internally.
pub fn jacobi_svd(a: &Matrix) -> Svd {
    if a.rows() >= a.cols() {
        jacobi_svd_tall(a)
    } else {
        let t = jacobi_svd_tall(&a.transpose());
        Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        }
    }
}

fn jacobi_svd_tall(a: &Matrix) -> Svd {
    let m = a.rows();
    let n = a.cols();
    let mut w = a.clone(); // columns are rotated toward orthogonality
    let mut v = Matrix::identity(n);
    let eps = 1e-15;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..m {
                    let wp = w.get(i, p);
                    let wq = w.get(i, q);
                    app += wp * wp;
                    aqq += wq * wq;
                    apq += wp * wq;
                }
                off = off.max(apq.abs() / (app * aqq).sqrt().max(f64::MIN_POSITIVE));
                if apq.abs() <= eps * (app * aqq).sqrt() {
                    continue;
                }
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let wp = w.get(i, p);
                    let wq = w.get(i, q);
                    w.set(i, p, c * wp - s * wq);
                    w.set(i, q, s * wp + c * wq);
                }
                for i in 0..n {
                    let vp = v.get(i, p);
                    let vq = v.get(i, q);
                    v.set(i, p, c * vp - s * vq);
                    v.set(i, q, s * vp + c * vq);
                }
            }
        }
        if off < 1e-14 {
            break;
        }
    }
    // singular values are the column norms of the rotated matrix
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| w.column_norm(j)).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let mut u = Matrix::zeros(m, n);
    let mut vv = Matrix::zeros(n, n);
    let mut sv = Vec::with_capacity(n);
    for (newj, &oldj) in order.iter().enumerate() {
        let s = norms[oldj];
        sv.push(s);
        for i in 0..m {
            let val = if s > 1e-300 { w.get(i, oldj) / s } else { 0.0 };
            u.set(i, newj, val);
        }
        for i in 0..n {
            vv.set(i, newj, v.get(i, oldj));
        }
    }
    Svd {
        u,
        singular_values: sv,
        v: vv,
    }
}

pub fn svd_max_singular(a: &Matrix) -> f64 {
    jacobi_svd(a).singular_values[0]
}

pub fn svd_min_singular(a: &Matrix) -> f64 {
    let sv = jacobi_svd(a).singular_values;
    *sv.last().unwrap()
}

/// Moore-Penrose pseudo-inverse through the Jacobi SVD.
pub fn svd_pinv(a: &Matrix) -> Matrix {
    let svd = jacobi_svd(a);
    let smax = svd.singular_values[0];
    let cutoff = smax * 1e-12;
    let k = svd.singular_values.len();
    // pinv = V diag(1/s) U^T
    let mut out = Matrix::zeros(a.cols(), a.rows());
    for t in 0..k {
        let s = svd.singular_values[t];
        if s <= cutoff {
            continue;
        }
        for i in 0..a.cols() {
            let vit = svd.v.get(i, t) / s;
            if vit == 0.0 {
                continue;
            }
            for j in 0..a.rows() {
                out.set(i, j, out.get(i, j) + vit * svd.u.get(j, t));
            }
        }
    }
    out
}

/// Solve `Ax = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for k in 0..n {
        let (piv, _) = (k..n)
            .map(|i| (i, m.get(i, k).abs()))
            .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if piv != k {
            for j in 0..n {
                let t = m.get(k, j);
                m.set(k, j, m.get(piv, j));
                m.set(piv, j, t);
            }
            rhs.swap(k, piv);
        }
        let d = m.get(k, k);
        for i in (k + 1)..n {
            let f = m.get(i, k) / d;
            for j in k..n {
                m.set(i, j, m.get(i, j) - f * m.get(k, j));
            }
            rhs[i] -= f * rhs[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut acc = rhs[k];
        for j in (k + 1)..n {
            acc -= m.get(k, j) * x[j];
        }
        x[k] = acc / m.get(k, k);
    }
    x
}

/// Cyclic coordinate descent for the lasso
/// `0.5 ||y - Ax||^2 + lambda ||x||_1`, run to a tight duality-free
/// stopping rule (largest coordinate optimality violation).
pub fn cd_lasso(a: &Matrix, y: &[f64], lambda: f64, tol: f64, max_passes: usize) -> Vec<f64> {
    let n = a.cols();
    let cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let col_sq: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let mut x = vec![0.0; n];
    let mut resid: Vec<f64> = y.to_vec(); // y - Ax
    for _ in 0..max_passes {
        // the pass converged when no coordinate wanted to move, judged
        // BEFORE its own update (right after, it is optimal by
        // construction)
        let mut worst = 0.0f64;
        for j in 0..n {
            if col_sq[j] <= 1e-300 {
                continue;
            }
            let xj = x[j];
            // partial residual correlation
            let mut rho = 0.0;
            for (ri, ci) in resid.iter().zip(cols[j].iter()) {
                rho += ri * ci;
            }
            rho += col_sq[j] * xj;
            let new = {
                let m = rho.abs() - lambda;
                if m > 0.0 {
                    rho.signum() * m / col_sq[j]
                } else {
                    0.0
                }
            };
            let delta = new - xj;
            worst = worst.max(delta.abs());
            if delta != 0.0 {
                for (ri, ci) in resid.iter_mut().zip(cols[j].iter()) {
                    *ri -= delta * ci;
                }
                x[j] = new;
            }
        }
        if worst <= tol {
            break;
        }
    }
    x
}

pub fn lasso_objective(a: &Matrix, y: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let mut res = vec![0.0; y.len()];
    a.matvec(x, &mut res);
    let q: f64 = res.iter().zip(y.iter()).map(|(r, yi)| (yi - r) * (yi - r)).sum();
    0.5 * q + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
}

/// Exhaustive basis pursuit over supports of size `k`: for every
/// `k`-subset, the least-squares fit on that support is computed with the
/// SVD pseudo-inverse; among the feasible fits (residual within `eps`),
/// the minimum-l1 one wins. Returns `(support, coefficients)`.
pub fn enumeration_basis_pursuit(a: &Matrix, y: &[f64], k: usize, eps: f64) -> Option<(Vec<usize>, Vec<f64>)> {
    let n = a.cols();
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    let mut supp: Vec<usize> = (0..k).collect();
    loop {
        let sub = a.select_columns(&supp);
        let pinv = svd_pinv(&sub);
        let mut coef = vec![0.0; k];
        pinv.matvec(y, &mut coef);
        let mut fit = vec![0.0; a.rows()];
        sub.matvec(&coef, &mut fit);
        let resid: f64 = fit
            .iter()
            .zip(y.iter())
            .map(|(f, yi)| (yi - f) * (yi - f))
            .sum::<f64>()
            .sqrt();
        if resid <= eps.max(1e-9) {
            let l1: f64 = coef.iter().map(|v| v.abs()).sum();
            if best.as_ref().map(|(b, _, _)| l1 < *b).unwrap_or(true) {
                best = Some((l1, supp.clone(), coef));
            }
        }
        // next combination
        let mut advanced = false;
        for i in (0..k).rev() {
            if supp[i] != i + n - k {
                supp[i] += 1;
                for j in i + 1..k {
                    supp[j] = supp[j - 1] + 1;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }
    best.map(|(_, s, c)| (s, c))
}

/// `H_r = sum_{k=1..r} 1/k`.
pub fn harmonic(r: usize) -> f64 {
    (1..=r).map(|k| 1.0 / k as f64).sum()
}

/// Deterministic dense test matrix with entries of varied magnitude.
pub fn test_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    // splitmix64 stream, mapped to [-1, 1)
    let mut state = seed.wrapping_add(0x9E3779B97F4A7C15);
    let mut next = move || {
        state = state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z = z ^ (z >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    Matrix::from_fn(rows, cols, |_, _| next()).unwrap()
}

pub fn test_vector(len: usize, seed: u64) -> Vec<f64> {
    let m = test_matrix(len, 1, seed);
    m.as_slice().to_vec()
}
