//! Sparse-coding solvers: soft thresholding, ISTA/FISTA for the lasso,
//! the l1-constrained subproblem solved by bisection on the penalty, and
//! a nested proximal scheme for the multi-layer lasso.

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, Matrix};

/// Outcome summary attached to solver results.
#[derive(Clone, Copy, Debug)]
pub struct SolverReport {
    pub iterations_used: usize,
    pub final_objective: f64,
    pub final_residual_norm: f64,
    pub converged: bool,
}

/// `s_lambda(y) = sgn(y) max(|y| - lambda, 0)`; equals
/// `ReLU(y - lambda) - ReLU(-y - lambda)` exactly.
#[inline]
pub fn soft_threshold(y: f64, lambda: f64) -> f64 {
    debug_assert!(lambda >= 0.0);
    let m = y.abs() - lambda;
    if m > 0.0 {
        y.signum() * m
    } else {
        0.0
    }
}

/// `max(y - lambda, 0)`, the one-sided (ReLU) variant.
#[inline]
pub fn nonneg_soft_threshold(y: f64, lambda: f64) -> f64 {
    debug_assert!(lambda >= 0.0);
    (y - lambda).max(0.0)
}

/// Lasso objective `0.5 ||y - Ax||^2 + lambda ||x||_1`.
pub fn lasso_objective(a: &Matrix, y: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let mut res = vec![0.0; y.len()];
    a.matvec(x, &mut res);
    let mut q = 0.0;
    for (r, yi) in res.iter().zip(y.iter()) {
        let d = yi - r;
        q += d * d;
    }
    0.5 * q + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
}

fn check_dims(a: &Matrix, y: &[f64], x0: &[f64]) -> Result<()> {
    if y.len() != a.rows() || x0.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            context: "solver input",
            got_rows: y.len(),
            got_cols: x0.len(),
            want: format!("y len {}, x0 len {}", a.rows(), a.cols()),
        });
    }
    Ok(())
}

/// Scratch buffers + cached step constant reused across many solves with
/// the same dictionary (one per alternating-minimization iteration).
pub struct LassoWorkspace {
    /// `sigma_max(A)^2`, the gradient Lipschitz constant.
    pub step_constant: f64,
    res: Vec<f64>,
    grad: Vec<f64>,
    z: Vec<f64>,
    x_prev: Vec<f64>,
}

impl LassoWorkspace {
    pub fn new(a: &Matrix) -> Result<Self> {
        let m = operator_norm(a)?.powi(2);
        Ok(Self::with_step_constant(a, m))
    }

    pub fn with_step_constant(a: &Matrix, step_constant: f64) -> Self {
        LassoWorkspace {
            step_constant,
            res: vec![0.0; a.rows()],
            grad: vec![0.0; a.cols()],
            z: vec![0.0; a.cols()],
            x_prev: vec![0.0; a.cols()],
        }
    }
}

/// One ISTA step in place; returns the largest coordinate change.
fn ista_step(a: &Matrix, y: &[f64], lambda: f64, m: f64, x: &mut [f64], ws: &mut LassoWorkspace) -> f64 {
    a.matvec(x, &mut ws.res);
    for (r, yi) in ws.res.iter_mut().zip(y.iter()) {
        *r = yi - *r;
    }
    a.matvec_t(&ws.res, &mut ws.grad);
    let thr = lambda / m;
    let mut delta = 0.0f64;
    for (xi, g) in x.iter_mut().zip(ws.grad.iter()) {
        let new = soft_threshold(*xi + g / m, thr);
        delta = delta.max((new - *xi).abs());
        *xi = new;
    }
    delta
}

/// Iterative soft thresholding with step `1/M`, `M = sigma_max(A)^2`.
/// Runs exactly `k` iterations; the lasso objective is non-increasing.
pub fn ista(a: &Matrix, y: &[f64], lambda: f64, k: usize, x0: &[f64]) -> Result<(Vec<f64>, SolverReport)> {
    check_dims(a, y, x0)?;
    if lambda < 0.0 {
        return Err(Error::Parameter("lambda must be nonnegative".into()));
    }
    let mut ws = LassoWorkspace::new(a)?;
    let m = ws.step_constant;
    let mut x = x0.to_vec();
    let mut last_delta = f64::INFINITY;
    for _ in 0..k {
        last_delta = ista_step(a, y, lambda, m, &mut x, &mut ws);
    }
    a.matvec(&x, &mut ws.res);
    let resid = ws
        .res
        .iter()
        .zip(y.iter())
        .map(|(r, yi)| (yi - r) * (yi - r))
        .sum::<f64>()
        .sqrt();
    let report = SolverReport {
        iterations_used: k,
        final_objective: lasso_objective(a, y, lambda, &x),
        final_residual_norm: resid,
        converged: last_delta <= 1e-9,
    };
    Ok((x, report))
}

/// FISTA with the standard momentum sequence
/// `t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2`.
///
/// `grad_stop = 0` disables early stopping (runs the full budget);
/// otherwise iterations end once the proximal fixed-point residual drops
/// below `grad_stop`. `adaptive_restart` resets the momentum whenever it
/// opposes the descent direction, which restores linear convergence on
/// sparse problems without moving the fixed points.
pub fn fista_with(
    a: &Matrix,
    y: &[f64],
    lambda: f64,
    max_iter: usize,
    x0: &[f64],
    grad_stop: f64,
    adaptive_restart: bool,
    ws: &mut LassoWorkspace,
) -> (Vec<f64>, SolverReport) {
    let m = ws.step_constant;
    let thr = lambda / m;
    let mut x = x0.to_vec();
    ws.x_prev.copy_from_slice(&x);
    ws.z.copy_from_slice(&x);
    let mut t = 1.0f64;
    let mut iters = 0;
    let mut converged = false;
    for _ in 0..max_iter {
        iters += 1;
        // gradient step at the extrapolated point z
        a.matvec(&ws.z, &mut ws.res);
        for (r, yi) in ws.res.iter_mut().zip(y.iter()) {
            *r = yi - *r;
        }
        a.matvec_t(&ws.res, &mut ws.grad);
        let mut delta = 0.0f64;
        let mut restart_dot = 0.0f64;
        for j in 0..x.len() {
            let new = soft_threshold(ws.z[j] + ws.grad[j] / m, thr);
            delta = delta.max((new - ws.z[j]).abs());
            restart_dot += (ws.z[j] - new) * (new - x[j]);
            ws.x_prev[j] = x[j];
            x[j] = new;
        }
        if adaptive_restart && restart_dot > 0.0 {
            t = 1.0;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for j in 0..x.len() {
            ws.z[j] = x[j] + beta * (x[j] - ws.x_prev[j]);
        }
        t = t_next;
        if grad_stop > 0.0 && delta <= grad_stop {
            converged = true;
            break;
        }
    }
    a.matvec(&x, &mut ws.res);
    let resid = ws
        .res
        .iter()
        .zip(y.iter())
        .map(|(r, yi)| (yi - r) * (yi - r))
        .sum::<f64>()
        .sqrt();
    let report = SolverReport {
        iterations_used: iters,
        final_objective: lasso_objective(a, y, lambda, &x),
        final_residual_norm: resid,
        converged,
    };
    (x, report)
}

/// FISTA for the lasso; same fixed points as [`ista`], runs exactly `k`
/// iterations.
pub fn fista(a: &Matrix, y: &[f64], lambda: f64, k: usize, x0: &[f64]) -> Result<(Vec<f64>, SolverReport)> {
    check_dims(a, y, x0)?;
    if lambda < 0.0 {
        return Err(Error::Parameter("lambda must be nonnegative".into()));
    }
    let mut ws = LassoWorkspace::new(a)?;
    Ok(fista_with(a, y, lambda, k, x0, 0.0, false, &mut ws))
}

/// Controls for [`sparse_code_constrained`].
#[derive(Clone, Copy, Debug)]
pub struct SparseCodeConfig {
    /// Accept residuals up to `eps * (1 + feas_tol)`.
    pub feas_tol: f64,
    /// Bisection step cap on the penalty bracket.
    pub max_bisections: usize,
    /// Inner FISTA iteration cap per penalty value.
    pub fista_max_iter: usize,
    /// Inner FISTA proximal fixed-point stop.
    pub grad_stop: f64,
    /// Lower bracket as a fraction of `||A^T y||_inf`.
    pub lambda_floor_ratio: f64,
}

impl Default for SparseCodeConfig {
    fn default() -> Self {
        SparseCodeConfig {
            feas_tol: 1e-3,
            max_bisections: 60,
            fista_max_iter: 2000,
            grad_stop: 1e-9,
            lambda_floor_ratio: 1e-10,
        }
    }
}

/// Result of the constrained sparse-coding search.
pub struct ConstrainedSolution {
    pub x: Vec<f64>,
    pub report: SolverReport,
    /// Penalty at which the solution was accepted; feed it back as the
    /// hint of the next solve with a nearby target.
    pub lambda: f64,
    /// `(lambda, residual)` pairs of every inner solve.
    pub trace: Vec<(f64, f64)>,
}

/// `argmin ||x||_1  s.t.  ||y - Ax||_2 <= eps`, via the lasso penalty
/// path: the residual grows with `lambda`, so a continuation descends
/// from `||A^T y||_inf` (where zero is optimal) with warm starts until the
/// constraint is met, then bisection on `log(lambda)` tightens the
/// residual into the acceptance band. Warm-starting along the path keeps
/// every inner solve close to its solution; jumping straight to a tiny
/// penalty would leave FISTA far from the minimum-l1 point.
///
/// `lambda_hint` (the accepted penalty of a previous, nearby solve)
/// starts the search close to the boundary instead of at the top of the
/// path.
pub fn sparse_code_constrained_with(
    a: &Matrix,
    y: &[f64],
    eps: f64,
    cfg: &SparseCodeConfig,
    ws: &mut LassoWorkspace,
    warm: Option<&[f64]>,
    lambda_hint: Option<f64>,
) -> Result<ConstrainedSolution> {
    if eps < 0.0 {
        return Err(Error::Parameter("eps must be nonnegative".into()));
    }
    let r = a.cols();
    let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut trace = Vec::new();
    // zero is feasible and minimal
    if ny <= eps {
        let report = SolverReport {
            iterations_used: 0,
            final_objective: 0.0,
            final_residual_norm: ny,
            converged: true,
        };
        return Ok(ConstrainedSolution {
            x: vec![0.0; r],
            report,
            lambda: 0.0,
            trace,
        });
    }
    let mut aty = vec![0.0; r];
    a.matvec_t(y, &mut aty);
    let lambda_hi0 = aty.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if lambda_hi0 <= f64::MIN_POSITIVE {
        // y is orthogonal to the range of A: the residual floor is ||y||
        return Err(Error::Infeasible { floor: ny, target: eps });
    }
    let lambda_floor = cfg.lambda_floor_ratio * lambda_hi0;
    // an absolute floor keeps eps = 0 (exact representation) solvable
    let accept_hi = (eps * (1.0 + cfg.feas_tol)).max(f64::EPSILON.sqrt() * ny);
    let accept_lo = eps * (1.0 - cfg.feas_tol);

    let mut total_iters = 0usize;
    let mut x = warm.map(|w| w.to_vec()).unwrap_or_else(|| vec![0.0; r]);
    // search solves can run coarser than the final one: feasibility is
    // always judged on the exactly computed residual of the iterate
    let search_stop = cfg.grad_stop.max(1e-5 * eps);
    let mut solve = |lam: f64, x: &mut Vec<f64>, total: &mut usize, trace: &mut Vec<(f64, f64)>| -> f64 {
        let (x_new, rep) = fista_with(a, y, lam, cfg.fista_max_iter, x, search_stop, true, ws);
        *total += rep.iterations_used;
        trace.push((lam, rep.final_residual_norm));
        *x = x_new;
        rep.final_residual_norm
    };

    const DESCENT: f64 = 0.3;
    let start = lambda_hint
        .filter(|h| h.is_finite() && *h > 0.0)
        .map(|h| h.clamp(lambda_floor, lambda_hi0 * DESCENT))
        .unwrap_or(lambda_hi0 * DESCENT);

    // bracket the boundary: (lo, feasible solution) and an infeasible hi
    let mut lam = start;
    let mut hi = lambda_hi0;
    let mut feasible: Option<(f64, Vec<f64>, f64)> = None;
    let res_start = solve(lam, &mut x, &mut total_iters, &mut trace);
    if res_start <= accept_hi {
        // feasible already; climb until infeasible to bracket the boundary
        feasible = Some((lam, x.clone(), res_start));
        let mut res = res_start;
        while res < accept_lo && lam < lambda_hi0 * DESCENT {
            lam = (lam / DESCENT).min(lambda_hi0 * DESCENT);
            res = solve(lam, &mut x, &mut total_iters, &mut trace);
            if res <= accept_hi {
                feasible = Some((lam, x.clone(), res));
            } else {
                hi = lam;
                break;
            }
        }
    } else {
        // descend until feasible (or the floor proves otherwise)
        hi = lam;
        loop {
            if lam <= lambda_floor {
                return Err(Error::Infeasible {
                    floor: trace.last().map(|t| t.1).unwrap_or(ny),
                    target: eps,
                });
            }
            lam = (lam * DESCENT).max(lambda_floor);
            let res = solve(lam, &mut x, &mut total_iters, &mut trace);
            if res <= accept_hi {
                feasible = Some((lam, x.clone(), res));
                break;
            }
            hi = lam;
        }
    }
    let (mut lo, mut best, mut best_res) = feasible.expect("bracketing ends feasible");

    // bisection on log(lambda) toward the residual band
    if best_res < accept_lo {
        for _ in 0..cfg.max_bisections {
            if hi / lo < 1.0 + 1e-6 {
                break;
            }
            let mid = (lo * hi).sqrt();
            let res = solve(mid, &mut x, &mut total_iters, &mut trace);
            if res <= accept_hi {
                lo = mid;
                best = x.clone();
                best_res = res;
                if res >= accept_lo {
                    break;
                }
            } else {
                hi = mid;
            }
        }
    }
    // refine the accepted solve at full accuracy
    if search_stop > cfg.grad_stop {
        let (x_fin, rep_fin) = fista_with(a, y, lo, cfg.fista_max_iter, &best, cfg.grad_stop, true, ws);
        total_iters += rep_fin.iterations_used;
        trace.push((lo, rep_fin.final_residual_norm));
        if rep_fin.final_residual_norm <= accept_hi {
            best = x_fin;
            best_res = rep_fin.final_residual_norm;
        }
    }
    let l1 = best.iter().map(|v| v.abs()).sum::<f64>();
    let report = SolverReport {
        iterations_used: total_iters,
        final_objective: l1,
        final_residual_norm: best_res,
        converged: best_res <= accept_hi,
    };
    Ok(ConstrainedSolution {
        x: best,
        report,
        lambda: lo,
        trace,
    })
}

/// Convenience wrapper over [`sparse_code_constrained_with`] that computes
/// the step constant itself and discards the search trace.
pub fn sparse_code_constrained(
    a: &Matrix,
    y: &[f64],
    eps: f64,
    cfg: &SparseCodeConfig,
) -> Result<(Vec<f64>, SolverReport)> {
    if y.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            context: "solver input",
            got_rows: y.len(),
            got_cols: 1,
            want: format!("y len {}", a.rows()),
        });
    }
    let mut ws = LassoWorkspace::new(a)?;
    let sol = sparse_code_constrained_with(a, y, eps, cfg, &mut ws, None, None)?;
    Ok((sol.x, sol.report))
}

/// Options for [`ml_fista`].
#[derive(Clone, Debug, Default)]
pub struct MlFistaOptions {
    /// Per-layer step constants; computed from spectral norms when absent.
    pub step_constants: Option<Vec<f64>>,
    /// Restart the momentum sequence every this many iterations.
    pub restart_every: Option<usize>,
}

/// Multi-layer lasso
/// `min 0.5 ||y - A_L...A_1 x||^2 + sum_l lambda_l ||A_{l-1}...A_1 x||_1`
/// by a nested proximal scheme: each iteration refreshes the intermediate
/// targets shallow-to-deep with per-layer proximal-gradient steps, then
/// takes a momentum step on the deepest code.
///
/// Degenerate cases collapse exactly: one layer is plain FISTA, and with
/// all inner penalties zero the scheme reduces to FISTA on the product
/// matrix.
pub fn ml_fista(
    dicts: &[Matrix],
    y: &[f64],
    lambdas: &[f64],
    k: usize,
    opts: &MlFistaOptions,
) -> Result<Vec<f64>> {
    let l = dicts.len();
    if l == 0 {
        return Err(Error::Parameter("at least one dictionary required".into()));
    }
    if lambdas.len() != l {
        return Err(Error::Parameter(format!(
            "expected {l} penalties, got {}",
            lambdas.len()
        )));
    }
    if lambdas.iter().any(|v| *v < 0.0) {
        return Err(Error::Parameter("penalties must be nonnegative".into()));
    }
    for ell in 0..l - 1 {
        if dicts[ell + 1].cols() != dicts[ell].rows() {
            return Err(Error::DimensionMismatch {
                context: "dictionary cascade",
                got_rows: dicts[ell + 1].rows(),
                got_cols: dicts[ell + 1].cols(),
                want: format!("{} cols", dicts[ell].rows()),
            });
        }
    }
    if y.len() != dicts[l - 1].rows() {
        return Err(Error::DimensionMismatch {
            context: "observation length",
            got_rows: y.len(),
            got_cols: 1,
            want: format!("{}", dicts[l - 1].rows()),
        });
    }
    let x0 = vec![0.0; dicts[0].cols()];
    if l == 1 {
        return Ok(fista(&dicts[0], y, lambdas[0], k, &x0)?.0);
    }
    if lambdas[1..].iter().all(|v| *v == 0.0) {
        let mut p = dicts[0].clone();
        for a in &dicts[1..] {
            p = a.matmul(&p)?;
        }
        return Ok(fista(&p, y, lambdas[0], k, &x0)?.0);
    }

    let steps: Vec<f64> = match &opts.step_constants {
        Some(ms) => {
            if ms.len() != l {
                return Err(Error::Parameter(format!(
                    "expected {l} step constants, got {}",
                    ms.len()
                )));
            }
            ms.clone()
        }
        None => {
            let mut v = Vec::with_capacity(l);
            for a in dicts {
                v.push(operator_norm(a)?.powi(2));
            }
            v
        }
    };
    let restart = opts.restart_every.unwrap_or(200).max(1);

    let mut x = x0.clone();
    let mut x_prev = x0;
    let mut t = 1.0f64;
    for iter in 0..k {
        let beta = (t - 1.0) / (0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()));
        t = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let z: Vec<f64> = x.iter().zip(x_prev.iter()).map(|(a, b)| a + beta * (a - b)).collect();

        // cascade predictions p[ell] = A_ell ... A_1 z  (p[0] = z)
        let mut preds: Vec<Vec<f64>> = Vec::with_capacity(l);
        preds.push(z.clone());
        for ell in 0..l - 1 {
            let mut next = vec![0.0; dicts[ell].rows()];
            dicts[ell].matvec(&preds[ell], &mut next);
            preds.push(next);
        }

        // shallow-to-deep proximal sweep; target starts at the data
        let mut target = y.to_vec();
        for ell in (1..l).rev() {
            let a = &dicts[ell];
            let m = steps[ell];
            let p = &preds[ell];
            let mut ap = vec![0.0; a.rows()];
            a.matvec(p, &mut ap);
            for (r, t) in ap.iter_mut().zip(target.iter()) {
                *r = t - *r;
            }
            let mut g = vec![0.0; a.cols()];
            a.matvec_t(&ap, &mut g);
            let thr = lambdas[ell] / m;
            let mut u = vec![0.0; a.cols()];
            for j in 0..u.len() {
                u[j] = soft_threshold(p[j] + g[j] / m, thr);
            }
            target = u;
        }
        // deepest code update toward the refreshed intermediate target
        let a = &dicts[0];
        let m = steps[0];
        let mut az = vec![0.0; a.rows()];
        a.matvec(&z, &mut az);
        for (r, t) in az.iter_mut().zip(target.iter()) {
            *r = t - *r;
        }
        let mut g = vec![0.0; a.cols()];
        a.matvec_t(&az, &mut g);
        let thr = lambdas[0] / m;
        x_prev = x.clone();
        for j in 0..x.len() {
            x[j] = soft_threshold(z[j] + g[j] / m, thr);
        }
        if (iter + 1) % restart == 0 {
            t = 1.0;
            x_prev = x.clone();
        }
    }
    Ok(x)
}
