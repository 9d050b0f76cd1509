//! Monte Carlo checks of the sparse random generator moments and support
//! statistics. Tolerances are three standard errors unless the identity
//! is exact by construction.

mod common;

use deepdict::genmodel::{
    perturb_dictionary, sample_codes, sample_dense_dictionary, sample_sparse_dictionary,
    sample_support, synthesize, DeepModelSpec, NonzeroDist,
};
use deepdict::linalg::Matrix;
use deepdict::rng::{domain, stream};

#[test]
fn support_frequencies_single_index() {
    // r=4, s=1: each index should appear with frequency 1/4
    let trials = 100_000;
    let mut counts = [0usize; 4];
    for t in 0..trials {
        let mut rng = stream(11, domain::SUPPORT, t as u64);
        let s = sample_support(4, 1, &mut rng).unwrap();
        counts[s.as_slice()[0]] += 1;
    }
    for (i, c) in counts.iter().enumerate() {
        let freq = *c as f64 / trials as f64;
        assert!((freq - 0.25).abs() < 0.01, "index {i}: frequency {freq}");
    }
}

#[test]
fn support_frequencies_pairs() {
    // r=6, s=2: each of the 15 pairs should appear with frequency 1/15
    let trials = 100_000;
    let mut counts = std::collections::HashMap::new();
    for t in 0..trials {
        let mut rng = stream(12, domain::SUPPORT, t as u64);
        let s = sample_support(6, 2, &mut rng).unwrap();
        *counts.entry((s.as_slice()[0], s.as_slice()[1])).or_insert(0usize) += 1;
    }
    assert_eq!(counts.len(), 15);
    for (pair, c) in counts {
        let freq = c as f64 / trials as f64;
        assert!(
            (freq - 1.0 / 15.0).abs() < 0.005,
            "pair {pair:?}: frequency {freq}"
        );
    }
}

#[test]
fn sparse_dictionary_moment_battery() {
    // the reference configuration for the moment identities
    let (d, r, s_a) = (100usize, 5000usize, 10usize);
    let a = sample_sparse_dictionary(d, r, s_a, NonzeroDist::Rademacher, 77).unwrap();

    // E[A_ij^2] over nonzero positions is exactly d/s_a for Rademacher
    let mut nz_sq_sum = 0.0;
    let mut nz_count = 0usize;
    for v in a.as_slice() {
        if *v != 0.0 {
            nz_sq_sum += v * v;
            nz_count += 1;
        }
    }
    assert_eq!(nz_count, r * s_a);
    let nz_mean = nz_sq_sum / nz_count as f64;
    assert!((nz_mean - (d as f64 / s_a as f64)).abs() < 1e-12, "nonzero mean {nz_mean}");

    // over ALL positions the second moment is 1 (entry^2 = (d/s_a) * Bernoulli(s_a/d))
    let all_mean = nz_sq_sum / (d * r) as f64;
    assert!((all_mean - 1.0).abs() < 0.05, "overall second moment {all_mean}");

    // column norms: ||a_j||^2 <= d almost surely (exactly d for Rademacher)
    for j in 0..r {
        let n2 = a.column_norm(j).powi(2);
        assert!(n2 <= d as f64 + 1e-9, "column {j}: {n2}");
    }

    // P[U_ij = 1] = s_a/d within 3 standard errors
    let p = s_a as f64 / d as f64;
    let occupied = nz_count as f64 / (d * r) as f64; // exactly p by construction
    assert!((occupied - p).abs() < 1e-12);

    // same-column pair inclusion: P[i and i' both selected] =
    // (s_a/d) ((s_a-1)/(d-1)), measured over disjoint row pairs
    let pair_target = p * (s_a as f64 - 1.0) / (d as f64 - 1.0);
    let mut pair_hits = 0usize;
    let mut pair_total = 0usize;
    for j in 0..r {
        for i in (0..d).step_by(2) {
            let both = a.get(i, j) != 0.0 && a.get(i + 1, j) != 0.0;
            pair_total += 1;
            if both {
                pair_hits += 1;
            }
        }
    }
    let pair_freq = pair_hits as f64 / pair_total as f64;
    let se = (pair_target * (1.0 - pair_target) / pair_total as f64).sqrt();
    assert!(
        (pair_freq - pair_target).abs() < 3.0 * se + 1e-4,
        "pair inclusion {pair_freq} vs {pair_target} (3se {})",
        3.0 * se
    );
}

#[test]
fn sparse_dictionary_cross_column_correlation() {
    let (d, r, s_a) = (50usize, 2000usize, 5usize);
    let a = sample_sparse_dictionary(d, r, s_a, NonzeroDist::Rademacher, 31).unwrap();
    // E[A_ij A_ij'] for j != j' should vanish; average over adjacent pairs
    let mut acc = 0.0;
    let mut count = 0usize;
    for j in (0..r).step_by(2) {
        for i in 0..d {
            acc += a.get(i, j) * a.get(i, j + 1);
            count += 1;
        }
    }
    let corr = acc / count as f64;
    assert!((-0.02..=0.02).contains(&corr), "cross correlation {corr}");
}

#[test]
fn dense_dictionary_column_norms() {
    let a = sample_dense_dictionary(100, 200, 13);
    let mean: f64 = (0..200).map(|j| a.column_norm(j)).sum::<f64>() / 200.0;
    assert!((mean - 1.0).abs() < 0.05, "mean column norm {mean}");
}

#[test]
fn code_second_moment_rademacher() {
    let (r, n, s) = (100usize, 10_000usize, 5usize);
    let x = sample_codes(r, n, s, NonzeroDist::Rademacher, 17).unwrap();
    let mean_sq: f64 = x.as_slice().iter().map(|v| v * v).sum::<f64>() / (r * n) as f64;
    let target = s as f64 / r as f64;
    assert!((mean_sq - target).abs() < 0.003, "E[X^2] {mean_sq} vs {target}");
}

#[test]
fn perturbation_variance() {
    let a = Matrix::zeros(100, 10_000);
    let (z, snr) = perturb_dictionary(&a, 0.5, 3).unwrap();
    assert!((snr - 6.0206).abs() < 1e-3);
    let var: f64 = z.as_slice().iter().map(|v| v * v).sum::<f64>() / z.as_slice().len() as f64;
    let target = 0.25 / 100.0;
    assert!(
        (var - target).abs() < 0.1 * target,
        "perturbation variance {var} vs {target}"
    );
}

#[test]
fn synthesize_reference_dims() {
    // full-size reference architecture: shapes and representation sparsity
    let spec = DeepModelSpec::paper_scale();
    let inst = synthesize(&spec, 6400, 1).unwrap();
    assert_eq!(inst.dicts[0].rows(), 200);
    assert_eq!(inst.dicts[0].cols(), 800);
    assert_eq!(inst.dicts[1].rows(), 100);
    assert_eq!(inst.dicts[1].cols(), 200);
    assert_eq!(inst.observations.rows(), 100);
    assert_eq!(inst.observations.cols(), 6400);
    for j in 0..6400 {
        assert!(inst.intermediates[0].column_nnz(j) <= 9);
        assert_eq!(inst.codes.column_nnz(j), 3);
    }
    // nonzero magnitudes of X in [1, 2]
    for v in inst.codes.as_slice() {
        let m = v.abs();
        assert!(m == 0.0 || (1.0..=2.0).contains(&m));
    }
}
