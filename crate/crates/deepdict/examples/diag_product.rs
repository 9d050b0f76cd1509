//! Scratch diagnostics for the forward stage-1 (product) recovery.

use deepdict::altmin::{altmin_dict, AltMinConfig};
use deepdict::genmodel::{alpha_for_snr_db, perturb_dictionary, synthesize, DeepModelSpec};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let budget: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.6);
    let rho: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let t: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(12);

    let spec = DeepModelSpec::desk_scale();
    let inst = synthesize(&spec, 2000, seed).unwrap();
    let product = inst.product_from(1).unwrap();
    let norms: Vec<f64> = (0..product.cols()).map(|j| product.column_norm(j)).collect();
    let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = norms.iter().cloned().fold(0.0f64, f64::max);
    println!("product column norms in [{lo:.3}, {hi:.3}]");

    let alpha = alpha_for_snr_db(6.0);
    let (a0, _) = perturb_dictionary(&product, alpha, seed.wrapping_add(1001)).unwrap();
    let cfg = AltMinConfig {
        eps0: budget / (9.0 * 3.0),
        rho,
        max_iters: t,
        ..AltMinConfig::default()
    };
    println!("stage 1 with budget {budget} rho {rho}:");
    let (a_hat, _x, trace) = altmin_dict(&inst.observations, &a0, &cfg, 3, Some(&product)).unwrap();
    for i in 0..trace.iterations() {
        println!(
            "  iter {i}: eps {:.3e} change {:.3e} err {:.3e} ({:.1}s)",
            trace.eps[i],
            trace.dict_change[i],
            trace.err[i].unwrap_or(f64::NAN),
            trace.seconds[i]
        );
    }
    // per-column error histogram
    let mut bad = 0;
    for j in 0..product.cols() {
        let mut ip = 0.0;
        let mut na = 0.0;
        let mut nh = 0.0;
        for i in 0..product.rows() {
            ip += product.get(i, j) * a_hat.get(i, j);
            na += product.get(i, j) * product.get(i, j);
            nh += a_hat.get(i, j) * a_hat.get(i, j);
        }
        if (1.0 - ip * ip / (na * nh)).max(0.0).sqrt() > 1e-3 {
            bad += 1;
        }
    }
    println!("{bad} columns above 1e-3");
}
