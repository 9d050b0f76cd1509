//! Alternating minimization for dictionary learning: per-column
//! constrained sparse coding, hard thresholding of the codes, a
//! least-squares dictionary update, and column renormalization.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{least_squares_min_norm, operator_norm, Matrix, ZERO_TOL};
use crate::solvers::{sparse_code_constrained_with, LassoWorkspace, SparseCodeConfig};

/// Schedule and stopping parameters for [`altmin_dict`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AltMinConfig {
    /// Initial sparse-coding accuracy.
    pub eps0: f64,
    /// Geometric decay of the accuracy sequence, in (0, 1).
    pub rho: f64,
    /// Iteration cap.
    pub max_iters: usize,
    /// Multiplier `c` in the code threshold `c * s * eps_t` (9 by default).
    pub threshold_const: f64,
    /// Terminate once the dictionary change drops below this.
    pub stop_err: f64,
    /// Inner solver controls.
    #[serde(skip, default)]
    pub solver: SparseCodeConfig,
}

impl Default for AltMinConfig {
    fn default() -> Self {
        AltMinConfig {
            eps0: 0.02,
            rho: 0.5,
            max_iters: 50,
            threshold_const: 9.0,
            stop_err: 1e-5,
            solver: SparseCodeConfig::default(),
        }
    }
}

impl AltMinConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0) {
            return Err(Error::Parameter("eps0 must be positive".into()));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Parameter("rho must lie in (0, 1)".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Parameter("at least one iteration required".into()));
        }
        if self.threshold_const < 0.0 {
            return Err(Error::Parameter("threshold_const must be nonnegative".into()));
        }
        Ok(())
    }
}

/// One row per executed iteration.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct AltMinTrace {
    pub eps: Vec<f64>,
    /// Largest sign-invariant column change between successive dictionaries.
    pub dict_change: Vec<f64>,
    /// Error against the ground truth, when one was supplied.
    pub err: Vec<Option<f64>>,
    pub seconds: Vec<f64>,
    /// Inner solver iterations summed over the column sweep.
    pub solver_iterations: Vec<usize>,
    /// Columns re-initialized after collapsing to near-zero norm.
    pub collapsed_columns: usize,
}

impl AltMinTrace {
    pub fn iterations(&self) -> usize {
        self.eps.len()
    }

    /// CSV rows `iter,eps_t,dict_change,err,seconds` (err empty without truth).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,eps_t,dict_change,err,seconds\n");
        for i in 0..self.iterations() {
            let err = self.err[i].map(|e| format!("{e}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                i, self.eps[i], self.dict_change[i], err, self.seconds[i]
            ));
        }
        out
    }
}

/// Zero every entry with `|x| <= tau`; keep the rest unchanged.
pub fn hard_threshold(x: &Matrix, tau: f64) -> Matrix {
    assert!(tau >= 0.0, "threshold must be nonnegative");
    x.map(|v| if v.abs() <= tau { 0.0 } else { v })
}

/// `err(A_hat, A) = max_i sqrt(1 - <a_i, a_hat_i>^2 / (|a_i|^2 |a_hat_i|^2))`:
/// zero iff every column pair is collinear up to sign.
pub fn dict_error(a_hat: &Matrix, a: &Matrix) -> Result<f64> {
    if a_hat.rows() != a.rows() || a_hat.cols() != a.cols() {
        return Err(Error::DimensionMismatch {
            context: "dictionary error",
            got_rows: a_hat.rows(),
            got_cols: a_hat.cols(),
            want: format!("{}x{}", a.rows(), a.cols()),
        });
    }
    let mut worst = 0.0f64;
    for j in 0..a.cols() {
        let na = a.column_norm(j);
        let nh = a_hat.column_norm(j);
        if na < ZERO_TOL || nh < ZERO_TOL {
            return Err(Error::ZeroColumn { index: j });
        }
        let mut ip = 0.0;
        for i in 0..a.rows() {
            ip += a.get(i, j) * a_hat.get(i, j);
        }
        let cos2 = (ip * ip) / (na * na * nh * nh);
        worst = worst.max((1.0 - cos2).max(0.0).sqrt());
    }
    Ok(worst)
}

/// Geometric accuracy sequence `eps_t = eps0 * rho^t`, `t = 0..T-1`.
pub fn accuracy_schedule(eps0: f64, rho: f64, t: usize) -> Result<Vec<f64>> {
    if !(eps0 > 0.0) {
        return Err(Error::Parameter("eps0 must be positive".into()));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Parameter("rho must lie in (0, 1)".into()));
    }
    let mut out = Vec::with_capacity(t);
    let mut e = eps0;
    for _ in 0..t {
        out.push(e);
        e *= rho;
    }
    Ok(out)
}

/// The theory's initial accuracy `1 / (2592 s^2)`.
pub fn theory_eps0(s: usize) -> f64 {
    1.0 / (2592.0 * (s as f64) * (s as f64))
}

/// The theory's accuracy ratio `25050 mu s^3 / sqrt(d)` and whether it
/// fails to decrease (ratio >= 1), which it does at desk-scale dimensions.
pub fn theory_eps_ratio(mu: f64, s: usize, d: usize) -> (f64, bool) {
    let ratio = 25050.0 * mu * (s as f64).powi(3) / (d as f64).sqrt();
    (ratio, ratio >= 1.0)
}

/// Largest sign-invariant column distance between two dictionaries.
pub fn dict_change(a_new: &Matrix, a_old: &Matrix) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a_new.cols() {
        let mut plus = 0.0;
        let mut minus = 0.0;
        for i in 0..a_new.rows() {
            let dp = a_new.get(i, j) - a_old.get(i, j);
            let dm = a_new.get(i, j) + a_old.get(i, j);
            plus += dp * dp;
            minus += dm * dm;
        }
        worst = worst.max(plus.min(minus).sqrt());
    }
    worst
}

/// Alternating minimization (sparse coding / threshold / least squares /
/// normalize) for `Y ~ A X` with `s`-sparse codes.
///
/// Runs until the dictionary change drops below `cfg.stop_err` or
/// `cfg.max_iters` is hit. A ground-truth dictionary, when provided, only
/// feeds the error column of the trace.
pub fn altmin_dict(
    y: &Matrix,
    a0: &Matrix,
    cfg: &AltMinConfig,
    s: usize,
    truth: Option<&Matrix>,
) -> Result<(Matrix, Matrix, AltMinTrace)> {
    cfg.validate()?;
    if y.rows() != a0.rows() {
        return Err(Error::DimensionMismatch {
            context: "observations vs dictionary",
            got_rows: a0.rows(),
            got_cols: a0.cols(),
            want: format!("{} rows", y.rows()),
        });
    }
    if s == 0 || s > a0.cols() {
        return Err(Error::Parameter(format!(
            "sparsity {s} outside [1, {}]",
            a0.cols()
        )));
    }
    let n = y.cols();
    let r = a0.cols();
    let mut a = a0.clone();
    let mut x = Matrix::zeros(r, n);
    let mut have_warm = false;
    let mut hints: Vec<Option<f64>> = vec![None; n];
    let mut trace = AltMinTrace::default();
    let schedule = accuracy_schedule(cfg.eps0, cfg.rho, cfg.max_iters)?;

    // columns of Y, extracted once
    let ycols: Vec<Vec<f64>> = (0..n).map(|j| y.column(j)).collect();

    for (t, &eps_t) in schedule.iter().enumerate() {
        let started = Instant::now();
        let m = operator_norm(&a)?.powi(2);

        // sparse-coding sweep; columns are independent
        let warm_src = &x;
        let hint_src = &hints;
        let coded: Vec<Result<(Vec<f64>, f64, usize)>> = ycols
            .par_iter()
            .enumerate()
            .map(|(j, yj)| {
                let mut ws = LassoWorkspace::with_step_constant(&a, m);
                let warm_col;
                let warm = if have_warm {
                    warm_col = warm_src.column(j);
                    Some(warm_col.as_slice())
                } else {
                    None
                };
                match sparse_code_constrained_with(&a, yj, eps_t, &cfg.solver, &mut ws, warm, hint_src[j]) {
                    Ok(sol) => Ok((sol.x, sol.lambda, sol.report.iterations_used)),
                    Err(e) => Err(Error::ColumnAbort {
                        column: j,
                        iteration: t,
                        source: Box::new(e),
                    }),
                }
            })
            .collect();
        let mut cols = Vec::with_capacity(n);
        let mut solver_iters = 0usize;
        for (j, c) in coded.into_iter().enumerate() {
            let (xj, lambda, iters) = c?;
            // next iteration's target shrinks by rho; scale the hint along
            hints[j] = Some(lambda * cfg.rho);
            solver_iters += iters;
            cols.push(xj);
        }
        let coded = Matrix::from_columns(r, &cols)?;

        // threshold and dictionary update
        let tau = cfg.threshold_const * (s as f64) * eps_t;
        let thresholded = hard_threshold(&coded, tau);
        if thresholded.max_abs() < ZERO_TOL {
            return Err(Error::DegenerateCodeMatrix);
        }
        let a_raw = least_squares_min_norm(y, &thresholded)?;

        // normalize; re-initialize columns that collapsed
        let mut a_new = a_raw;
        for j in 0..r {
            let nrm = a_new.column_norm(j);
            if nrm < ZERO_TOL {
                let prev = a.column(j);
                a_new.set_column(j, &prev);
                trace.collapsed_columns += 1;
            } else {
                for i in 0..a_new.rows() {
                    a_new.set(i, j, a_new.get(i, j) / nrm);
                }
            }
        }

        let change = dict_change(&a_new, &a);
        let err = match truth {
            Some(tr) => Some(dict_error(&a_new, tr)?),
            None => None,
        };
        trace.eps.push(eps_t);
        trace.dict_change.push(change);
        trace.err.push(err);
        trace.seconds.push(started.elapsed().as_secs_f64());
        trace.solver_iterations.push(solver_iters);

        a = a_new;
        x = thresholded;
        have_warm = true;

        if change < cfg.stop_err {
            break;
        }
    }
    Ok((a, x, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hard_threshold_cases() {
        let x = Matrix::from_vec(2, 2, vec![1.0, -2.0, 0.1, 0.3]).unwrap();
        let t = hard_threshold(&x, 0.5);
        assert_eq!(t.as_slice(), &[1.0, -2.0, 0.0, 0.0]);

        let unchanged = hard_threshold(&x, 0.0);
        assert_eq!(unchanged.as_slice(), x.as_slice());

        let zeroed = hard_threshold(&x, x.max_abs());
        assert!(zeroed.max_abs() == 0.0);
    }

    #[test]
    fn hard_threshold_survivors_exceed_tau() {
        let x = Matrix::from_vec(1, 5, vec![0.2, -0.5, 0.50001, 1.0, -0.1]).unwrap();
        let tau = 0.5;
        let t = hard_threshold(&x, tau);
        for v in t.as_slice() {
            assert!(*v == 0.0 || v.abs() > tau);
        }
    }

    #[test]
    fn dict_error_basics() {
        let a = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(dict_error(&a, &a).unwrap(), 0.0);
        let neg = a.scaled(-1.0);
        assert_eq!(dict_error(&neg, &a).unwrap(), 0.0);

        let e1 = Matrix::from_vec(2, 1, vec![1.0, 0.0]).unwrap();
        let e2 = Matrix::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        assert!((dict_error(&e1, &e2).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dict_error_sign_flip_invariance() {
        let a = Matrix::from_vec(3, 4, vec![
            0.5, -0.3, 0.2, 0.9, 0.1, 0.8, -0.7, 0.2, -0.4, 0.2, 0.3, 0.1,
        ])
        .unwrap();
        let mut flipped = a.clone();
        for j in [1usize, 3usize] {
            for i in 0..3 {
                flipped.set(i, j, -flipped.get(i, j));
            }
        }
        let base = dict_error(&a, &a).unwrap();
        assert!((dict_error(&flipped, &a).unwrap() - base).abs() < 1e-15);
    }

    #[test]
    fn dict_error_names_zero_column() {
        let a = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let b = Matrix::identity(2);
        match dict_error(&a, &b) {
            Err(Error::ZeroColumn { index }) => assert_eq!(index, 1),
            other => panic!("expected ZeroColumn, got {other:?}"),
        }
    }

    #[test]
    fn accuracy_schedule_geometric() {
        let s = accuracy_schedule(1.0, 0.5, 3).unwrap();
        assert_eq!(s, vec![1.0, 0.5, 0.25]);
        assert!(accuracy_schedule(1.0, 1.5, 3).is_err());
        assert!(accuracy_schedule(0.0, 0.5, 3).is_err());
    }

    #[test]
    fn theory_schedule_values() {
        assert!((theory_eps0(3) - 1.0 / 23328.0).abs() < 1e-12);
        let (ratio, flagged) = theory_eps_ratio(1.0, 3, 100);
        assert!((ratio - 67635.0).abs() < 1e-6);
        assert!(flagged);
    }
}
