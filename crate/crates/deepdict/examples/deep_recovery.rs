//! Factorize a two-layer model with both sequential algorithms and print
//! the per-stage recovery errors.
//!
//!     cargo run --release --example deep_recovery [seed] [snr_db]

use deepdict::deepfact::{
    backward_factorize, forward_factorize, sparsity_levels, FactorizeConfig,
};
use deepdict::experiments::{backward_inits, forward_inits};
use deepdict::genmodel::{alpha_for_snr_db, synthesize, DeepModelSpec};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let snr_db: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(6.0);

    let spec = DeepModelSpec::desk_scale();
    let inst = synthesize(&spec, 2000, seed).expect("synthesis");
    let ledger = sparsity_levels(&spec);
    let alpha = alpha_for_snr_db(snr_db);
    println!(
        "two-layer model d2={} r2={} d1={} r1={} s=3 s_(1)=3 n=2000, init {snr_db} dB",
        spec.dims[1].d, spec.dims[1].r, spec.dims[0].d, spec.dims[0].r
    );
    let mut cfg = FactorizeConfig::default();
    if let Some(b) = args.next().and_then(|s| s.parse::<f64>().ok()) {
        cfg.eps0 = deepdict::deepfact::Eps0Rule::ThresholdBudget { budget: b };
    }
    if let Some(r) = args.next().and_then(|s| s.parse::<f64>().ok()) {
        cfg.rho = r;
    }

    let inits = forward_inits(&inst, alpha, seed).expect("inits");
    let fwd = forward_factorize(&inst.observations, &inits, &ledger, &cfg, Some(&inst)).expect("forward");
    for st in &fwd.stages {
        println!(
            "forward stage {}: {} iters, err(learned) {:.3e}, err(peeled) {:.3e}, inner its {:?}",
            st.stage,
            st.trace.iterations(),
            st.err_learned.unwrap_or(f64::NAN),
            st.err_peeled.unwrap_or(f64::NAN),
            st.trace.solver_iterations.iter().sum::<usize>()
        );
        for i in 0..st.trace.iterations() {
            println!(
                "    iter {i}: eps {:.3e} err {:.3e} ({:.1}s)",
                st.trace.eps[i],
                st.trace.err[i].unwrap_or(f64::NAN),
                st.trace.seconds[i]
            );
        }
    }
    if let Some(f) = &fwd.failure {
        println!("forward ABORTED at stage {}: {}", f.stage, f.message);
    }

    let inits = backward_inits(&inst, alpha, seed).expect("inits");
    let bwd = backward_factorize(&inst.observations, &inits, &ledger, &cfg, Some(&inst)).expect("backward");
    for st in &bwd.stages {
        println!(
            "backward stage {}: {} iters, err(learned) {:.3e}, rel err(peeled) {:.3e}, inner its {:?}",
            st.stage,
            st.trace.iterations(),
            st.err_learned.unwrap_or(f64::NAN),
            st.err_peeled.unwrap_or(f64::NAN),
            st.trace.solver_iterations.iter().sum::<usize>()
        );
        for i in 0..st.trace.iterations() {
            println!(
                "    iter {i}: eps {:.3e} err {:.3e} ({:.1}s)",
                st.trace.eps[i],
                st.trace.err[i].unwrap_or(f64::NAN),
                st.trace.seconds[i]
            );
        }
    }
    if let Some(f) = &bwd.failure {
        println!("backward ABORTED at stage {}: {}", f.stage, f.message);
    }
}
