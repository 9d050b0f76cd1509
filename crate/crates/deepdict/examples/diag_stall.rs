//! Diagnostics for stalled shallow runs (temporary scratch example).

use deepdict::altmin::{altmin_dict, AltMinConfig};
use deepdict::genmodel::{alpha_for_snr_db, perturb_dictionary, synthesize, DeepModelSpec};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let budget: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let rho: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let tc: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(9.0);
    let t: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let spec = DeepModelSpec::shallow(50, 100, 3).unwrap();
    let inst = synthesize(&spec, 1500, seed).unwrap();
    let alpha = alpha_for_snr_db(6.0);
    let (a0, _) = perturb_dictionary(&inst.dicts[0], alpha, seed).unwrap();
    let cfg = AltMinConfig {
        eps0: budget / (tc * 3.0),
        rho,
        max_iters: t,
        threshold_const: tc,
        ..AltMinConfig::default()
    };
    println!("seed {seed} budget {budget} rho {rho} threshold_const {tc} T {t}");
    let (a_hat, x_hat, trace) = altmin_dict(&inst.observations, &a0, &cfg, 3, Some(&inst.dicts[0])).unwrap();
    println!("collapsed columns: {}", trace.collapsed_columns);
    for i in 0..trace.iterations() {
        println!(
            "  iter {i}: eps {:.3e} change {:.3e} err {:.3e}",
            trace.eps[i],
            trace.dict_change[i],
            trace.err[i].unwrap_or(f64::NAN)
        );
    }

    // per-column error distribution
    let truth = &inst.dicts[0];
    let mut errs: Vec<(usize, f64)> = (0..truth.cols())
        .map(|j| {
            let mut ip = 0.0;
            let mut na = 0.0;
            let mut nh = 0.0;
            for i in 0..truth.rows() {
                ip += truth.get(i, j) * a_hat.get(i, j);
                na += truth.get(i, j) * truth.get(i, j);
                nh += a_hat.get(i, j) * a_hat.get(i, j);
            }
            let cos2 = ip * ip / (na * nh);
            (j, (1.0 - cos2).max(0.0).sqrt())
        })
        .collect();
    errs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    println!("worst column errors: {:?}", &errs[..8]);
    let bad: Vec<usize> = errs.iter().filter(|(_, e)| *e > 1e-3).map(|(j, _)| *j).collect();
    println!("{} columns above 1e-3", bad.len());

    // model fit
    let fit = a_hat.matmul(&x_hat).unwrap();
    let rel = fit.sub(&inst.observations).unwrap().frobenius_norm() / inst.observations.frobenius_norm();
    println!("relative fit residual |Y - A X|/|Y| = {rel:.3e}");

    // are the bad atoms used at all? row activity of x_hat
    for &j in bad.iter().take(6) {
        let mut used = 0;
        let mut maxv = 0.0f64;
        for c in 0..x_hat.cols() {
            let v = x_hat.get(j, c).abs();
            if v > 0.0 {
                used += 1;
                maxv = maxv.max(v);
            }
        }
        // how often is atom j active in the TRUE codes?
        let mut true_used = 0;
        for c in 0..inst.codes.cols() {
            if inst.codes.get(j, c).abs() > 0.0 {
                true_used += 1;
            }
        }
        // best-matching true atom for the learned column
        let mut best = (0usize, 0.0f64);
        for jt in 0..truth.cols() {
            let mut ip = 0.0;
            for i in 0..truth.rows() {
                ip += truth.get(i, jt) * a_hat.get(i, j);
            }
            let c = ip.abs() / (truth.column_norm(jt) * a_hat.column_norm(j));
            if c > best.1 {
                best = (jt, c);
            }
        }
        println!(
            "atom {j}: used in {used} columns (true {true_used}), max |x| {maxv:.3}, best truth match {} (cos {:.4})",
            best.0, best.1
        );
    }
}
