//! Sampling of the deep sparse generative model `Y = A(L)...A(1) X`.
//!
//! Dictionaries `A(1)..A(L-1)` are column-sparse, `A(L)` is dense Gaussian,
//! and the codes `X` have exactly `s` nonzeros per column. Every sampler is
//! driven by per-column streams from [`crate::rng`], so identical
//! `(spec, n, seed)` reproduce bit-identical instances.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{column_normalize, Matrix, SupportSet, ZERO_TOL};
use crate::rng::{domain, stream};

/// Law of the nonzero entries of codes / sparse dictionaries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum NonzeroDist {
    /// +1 or -1 with equal probability (zero mean, unit variance).
    Rademacher,
    /// Magnitude uniform in `[lo, hi]`, random sign.
    UniformShell { lo: f64, hi: f64 },
    /// Standard normal conditioned on `|v| <= 1` (variance about 0.29).
    GaussianTruncated,
}

impl NonzeroDist {
    pub fn validate(&self) -> Result<()> {
        if let NonzeroDist::UniformShell { lo, hi } = self {
            if !(*lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::Parameter(format!(
                    "uniform shell requires 0 < lo <= hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            NonzeroDist::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            NonzeroDist::UniformShell { lo, hi } => {
                let mag = lo + (hi - lo) * rng.random::<f64>();
                if rng.random::<bool>() {
                    mag
                } else {
                    -mag
                }
            }
            NonzeroDist::GaussianTruncated => loop {
                let v: f64 = StandardNormal.sample(rng);
                if v.abs() <= 1.0 {
                    return v;
                }
            },
        }
    }

    /// Almost-sure bound on the magnitude of a sample.
    pub fn amplitude_bound(&self) -> f64 {
        match self {
            NonzeroDist::Rademacher => 1.0,
            NonzeroDist::UniformShell { hi, .. } => *hi,
            NonzeroDist::GaussianTruncated => 1.0,
        }
    }
}

/// Per-layer dimensions: `A(l)` is `d x r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerDims {
    pub d: usize,
    pub r: usize,
}

/// Architecture of the deep model. Layer 1 is the deepest (applied first);
/// layer `L` produces the observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeepModelSpec {
    /// `(d_l, r_l)` for l = 1..=L.
    pub dims: Vec<LayerDims>,
    /// Nonzeros per column of `X`.
    pub code_sparsity: usize,
    /// Nonzeros per column of `A(l)`, l = 1..=L-1.
    pub column_sparsities: Vec<usize>,
    /// Law of the code nonzeros.
    pub code_dist: NonzeroDist,
    /// Law of the sparse-dictionary nonzeros (the `V` factor).
    pub dict_dist: NonzeroDist,
    /// Amplitude bounds `M_(0)..M_(L-1)`: `M_(0)` bounds `|X_ij|`,
    /// `M_(l)` bounds the rescaled sparse-dictionary nonzeros.
    pub amplitude_bounds: Vec<f64>,
}

impl DeepModelSpec {
    pub fn new(
        dims: Vec<LayerDims>,
        code_sparsity: usize,
        column_sparsities: Vec<usize>,
        code_dist: NonzeroDist,
        dict_dist: NonzeroDist,
    ) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Parameter("at least one layer required".into()));
        }
        let l = dims.len();
        if column_sparsities.len() != l - 1 {
            return Err(Error::Parameter(format!(
                "expected {} column sparsities for {l} layers, got {}",
                l - 1,
                column_sparsities.len()
            )));
        }
        for layer in &dims {
            if layer.d == 0 || layer.r == 0 {
                return Err(Error::Parameter("layer dimensions must be positive".into()));
            }
        }
        // chain consistency: cols of A(l+1) == rows of A(l)
        for ell in 0..l - 1 {
            if dims[ell + 1].r != dims[ell].d {
                return Err(Error::Parameter(format!(
                    "layer {} has r = {} but layer {} has d = {}; the cascade does not compose",
                    ell + 2,
                    dims[ell + 1].r,
                    ell + 1,
                    dims[ell].d
                )));
            }
        }
        if code_sparsity == 0 || code_sparsity > dims[0].r {
            return Err(Error::Parameter(format!(
                "code sparsity {code_sparsity} outside [1, {}]",
                dims[0].r
            )));
        }
        for (ell, &s) in column_sparsities.iter().enumerate() {
            if s == 0 || s > dims[ell].d {
                return Err(Error::Parameter(format!(
                    "column sparsity {s} of layer {} outside [1, {}]",
                    ell + 1,
                    dims[ell].d
                )));
            }
        }
        code_dist.validate()?;
        dict_dist.validate()?;
        let mut amplitude_bounds = vec![code_dist.amplitude_bound()];
        amplitude_bounds.extend(column_sparsities.iter().map(|_| dict_dist.amplitude_bound()));
        Ok(DeepModelSpec {
            dims,
            code_sparsity,
            column_sparsities,
            code_dist,
            dict_dist,
            amplitude_bounds,
        })
    }

    pub fn layers(&self) -> usize {
        self.dims.len()
    }

    /// Shallow single-layer model (dense dictionary).
    pub fn shallow(d: usize, r: usize, s: usize) -> Result<Self> {
        Self::new(
            vec![LayerDims { d, r }],
            s,
            vec![],
            NonzeroDist::UniformShell { lo: 1.0, hi: 2.0 },
            NonzeroDist::Rademacher,
        )
    }

    /// Two-layer instance small enough to factorize in minutes.
    pub fn desk_scale() -> Self {
        Self::new(
            vec![LayerDims { d: 60, r: 150 }, LayerDims { d: 40, r: 60 }],
            3,
            vec![3],
            NonzeroDist::UniformShell { lo: 1.0, hi: 2.0 },
            NonzeroDist::Rademacher,
        )
        .expect("desk-scale spec is valid")
    }

    /// The two-layer reference configuration (d2=100, r2=200, d1=200,
    /// r1=800, s = s_(1) = 3); pair with n = 6400.
    pub fn paper_scale() -> Self {
        Self::new(
            vec![LayerDims { d: 200, r: 800 }, LayerDims { d: 100, r: 200 }],
            3,
            vec![3],
            NonzeroDist::UniformShell { lo: 1.0, hi: 2.0 },
            NonzeroDist::Rademacher,
        )
        .expect("paper-scale spec is valid")
    }
}

/// A realized model: dictionaries, codes, intermediates and observations.
#[derive(Clone, Debug)]
pub struct DeepModelInstance {
    pub spec: DeepModelSpec,
    pub n: usize,
    pub seed: u64,
    /// `A(1)..A(L)`, all columns unit norm.
    pub dicts: Vec<Matrix>,
    /// `X`, r1 x n.
    pub codes: Matrix,
    /// `Y(1)..Y(L-1)`.
    pub intermediates: Vec<Matrix>,
    /// `Y`, d_L x n.
    pub observations: Matrix,
}

impl DeepModelInstance {
    /// Product `A(l)...A(L)` ("from layer l to the surface").
    pub fn product_from(&self, ell: usize) -> Result<Matrix> {
        let l = self.spec.layers();
        if ell == 0 || ell > l {
            return Err(Error::Parameter(format!("layer index {ell} outside 1..={l}")));
        }
        let mut p = self.dicts[l - 1].clone();
        for k in (ell - 1..l - 1).rev() {
            p = p.matmul(&self.dicts[k])?;
        }
        Ok(p)
    }

    /// Recompute `A(L)...A(1)X` from the stored factors.
    pub fn recompute_observations(&self) -> Result<Matrix> {
        let mut y = self.codes.clone();
        for a in &self.dicts {
            y = a.matmul(&y)?;
        }
        Ok(y)
    }
}

/// Uniform `s`-subset of `{0..r-1}` by partial Fisher-Yates shuffle.
pub fn sample_support(r: usize, s: usize, rng: &mut impl Rng) -> Result<SupportSet> {
    if s == 0 || s > r {
        return Err(Error::Parameter(format!("support size {s} outside [1, {r}]")));
    }
    let mut pool: Vec<usize> = (0..r).collect();
    for k in 0..s {
        let j = k + rng.random_range(0..r - k);
        pool.swap(k, j);
    }
    SupportSet::from_unsorted(pool[..s].to_vec(), r)
}

/// Column-sparse random dictionary `A_ij = sqrt(d/s_a) U_ij V_ij`:
/// each column has exactly `s_a` nonzeros on a uniform support and the
/// matrix is returned UNNORMALIZED (callers normalize where the model
/// demands unit columns; moment checks want this raw form).
pub fn sample_sparse_dictionary(
    d: usize,
    r: usize,
    s_a: usize,
    dist: NonzeroDist,
    seed: u64,
) -> Result<Matrix> {
    sample_sparse_dictionary_in(d, r, s_a, dist, seed, domain::SPARSE_DICT)
}

fn sample_sparse_dictionary_in(
    d: usize,
    r: usize,
    s_a: usize,
    dist: NonzeroDist,
    seed: u64,
    dom: u32,
) -> Result<Matrix> {
    if s_a == 0 || s_a > d {
        return Err(Error::Parameter(format!("column sparsity {s_a} outside [1, {d}]")));
    }
    dist.validate()?;
    let scale = (d as f64 / s_a as f64).sqrt();
    let mut m = Matrix::zeros(d, r);
    for j in 0..r {
        let mut rng = stream(seed, dom, j as u64);
        let supp = sample_support(d, s_a, &mut rng)?;
        for &i in supp.as_slice() {
            m.set(i, j, scale * dist.sample(&mut rng));
        }
        debug_assert!(m.column_norm(j).powi(2) <= d as f64 + 1e-9);
    }
    Ok(m)
}

/// Dense dictionary with i.i.d. `N(0, 1/d)` entries, unnormalized.
pub fn sample_dense_dictionary(d: usize, r: usize, seed: u64) -> Matrix {
    sample_dense_dictionary_in(d, r, seed, domain::DENSE_DICT)
}

fn sample_dense_dictionary_in(d: usize, r: usize, seed: u64, dom: u32) -> Matrix {
    let sd = 1.0 / (d as f64).sqrt();
    let mut m = Matrix::zeros(d, r);
    for j in 0..r {
        let mut rng = stream(seed, dom, j as u64);
        for i in 0..d {
            let g: f64 = StandardNormal.sample(&mut rng);
            m.set(i, j, sd * g);
        }
    }
    m
}

/// Code matrix: `n` columns, each exactly `s`-sparse on a uniform support,
/// nonzeros drawn from `dist`.
pub fn sample_codes(r: usize, n: usize, s: usize, dist: NonzeroDist, seed: u64) -> Result<Matrix> {
    if s == 0 || s > r {
        return Err(Error::Parameter(format!("code sparsity {s} outside [1, {r}]")));
    }
    if n == 0 {
        return Err(Error::Parameter("need at least one sample".into()));
    }
    dist.validate()?;
    let mut x = Matrix::zeros(r, n);
    for j in 0..n {
        let mut rng = stream(seed, domain::CODES, j as u64);
        let supp = sample_support(r, s, &mut rng)?;
        for &i in supp.as_slice() {
            x.set(i, j, dist.sample(&mut rng));
        }
    }
    Ok(x)
}

/// Sample a full instance: sparse dictionaries (column-normalized), a dense
/// top dictionary (column-normalized), codes, and the exact cascade of
/// intermediates.
pub fn synthesize(spec: &DeepModelSpec, n: usize, seed: u64) -> Result<DeepModelInstance> {
    let l = spec.layers();
    if n == 0 {
        return Err(Error::Parameter("need at least one sample".into()));
    }
    let mut dicts = Vec::with_capacity(l);
    for ell in 1..=l {
        let LayerDims { d, r } = spec.dims[ell - 1];
        let dom = domain::MODEL_DICT_BASE + ell as u32;
        let raw = if ell < l {
            sample_sparse_dictionary_in(d, r, spec.column_sparsities[ell - 1], spec.dict_dist, seed, dom)?
        } else {
            sample_dense_dictionary_in(d, r, seed, dom)
        };
        dicts.push(column_normalize(&raw)?);
    }
    let codes = sample_codes(spec.dims[0].r, n, spec.code_sparsity, spec.code_dist, seed)?;

    let mut intermediates = Vec::with_capacity(l.saturating_sub(1));
    let mut current = codes.clone();
    for (ell, a) in dicts.iter().enumerate() {
        current = a.matmul(&current)?;
        if ell + 1 < l {
            intermediates.push(current.clone());
        }
    }
    let observations = current;

    let instance = DeepModelInstance {
        spec: spec.clone(),
        n,
        seed,
        dicts,
        codes,
        intermediates,
        observations,
    };
    debug_assert!(intermediate_sparsity_ok(&instance));
    Ok(instance)
}

/// Column sparsity of every intermediate stays within `s * prod s_(l)`.
pub(crate) fn intermediate_sparsity_ok(inst: &DeepModelInstance) -> bool {
    let mut bound = inst.spec.code_sparsity;
    for (ell, y) in inst.intermediates.iter().enumerate() {
        bound = bound.saturating_mul(inst.spec.column_sparsities[ell]);
        for j in 0..y.cols() {
            if y.column_nnz(j) > bound {
                return false;
            }
        }
    }
    true
}

/// `A + Z` with `Z_ij` i.i.d. `alpha * N(0, 1/d)`, plus the implied
/// initialization SNR in dB (`-10 log10 alpha^2`). The output is not
/// renormalized. `alpha` above 1 is allowed: it corresponds to negative
/// SNR initializations.
pub fn perturb_dictionary(a: &Matrix, alpha: f64, seed: u64) -> Result<(Matrix, f64)> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    let d = a.rows();
    let sd = alpha / (d as f64).sqrt();
    let mut out = a.clone();
    for j in 0..a.cols() {
        let mut rng = stream(seed, domain::PERTURB, j as u64);
        for i in 0..d {
            let g: f64 = StandardNormal.sample(&mut rng);
            out.set(i, j, a.get(i, j) + sd * g);
        }
    }
    let snr_db = -10.0 * (alpha * alpha).log10();
    Ok((out, snr_db))
}

/// Alpha achieving a given initialization SNR in dB.
pub fn alpha_for_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0)
}

/// Exact nonzero count of a column of a generated matrix (entries below
/// [`ZERO_TOL`] count as cancellation zeros).
pub fn column_support(m: &Matrix, j: usize) -> Vec<usize> {
    (0..m.rows()).filter(|&i| m.get(i, j).abs() > ZERO_TOL).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_full_range_forced() {
        let mut rng = stream(1, domain::SUPPORT, 0);
        let s = sample_support(5, 5, &mut rng).unwrap();
        assert_eq!(s.as_slice(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn support_rejects_oversize() {
        let mut rng = stream(1, domain::SUPPORT, 0);
        assert!(sample_support(3, 4, &mut rng).is_err());
    }

    #[test]
    fn sparse_dictionary_scale_collapses() {
        // d = s_a = 4 makes the scale factor 1, so Rademacher entries are +-1
        let a = sample_sparse_dictionary(4, 1, 4, NonzeroDist::Rademacher, 3).unwrap();
        for i in 0..4 {
            assert!((a.get(i, 0).abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sparse_dictionary_column_count() {
        let a = sample_sparse_dictionary(20, 50, 4, NonzeroDist::Rademacher, 9).unwrap();
        for j in 0..50 {
            assert_eq!(a.column_nnz(j), 4);
            assert!(a.column_norm(j).powi(2) <= 20.0 + 1e-9);
        }
    }

    #[test]
    fn dense_dictionary_deterministic() {
        let a = sample_dense_dictionary(10, 7, 42);
        let b = sample_dense_dictionary(10, 7, 42);
        assert_eq!(a, b);
        let c = sample_dense_dictionary(10, 7, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn dense_single_entry_reproducible() {
        let a = sample_dense_dictionary(1, 1, 5);
        let b = sample_dense_dictionary(1, 1, 5);
        assert_eq!(a.get(0, 0), b.get(0, 0));
        assert!(a.get(0, 0).is_finite());
    }

    #[test]
    fn codes_dense_column_when_s_equals_r() {
        let x = sample_codes(8, 1, 8, NonzeroDist::Rademacher, 11).unwrap();
        for i in 0..8 {
            assert!((x.get(i, 0).abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn codes_shell_magnitudes() {
        let x = sample_codes(40, 200, 3, NonzeroDist::UniformShell { lo: 1.0, hi: 2.0 }, 13).unwrap();
        for j in 0..200 {
            assert_eq!(x.column_nnz(j), 3);
            for i in 0..40 {
                let v = x.get(i, j).abs();
                assert!(v == 0.0 || (1.0..=2.0).contains(&v));
            }
        }
    }

    #[test]
    fn spec_rejects_inconsistent_chain() {
        let bad = DeepModelSpec::new(
            vec![LayerDims { d: 10, r: 20 }, LayerDims { d: 5, r: 11 }],
            2,
            vec![2],
            NonzeroDist::Rademacher,
            NonzeroDist::Rademacher,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn synthesize_shallow_has_no_intermediates() {
        let spec = DeepModelSpec::shallow(10, 20, 2).unwrap();
        let inst = synthesize(&spec, 30, 1).unwrap();
        assert!(inst.intermediates.is_empty());
        assert_eq!(inst.observations.rows(), 10);
        assert_eq!(inst.observations.cols(), 30);
        let y = inst.dicts[0].matmul(&inst.codes).unwrap();
        assert!(y.sub(&inst.observations).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn synthesize_two_layer_chain_recomputes() {
        let spec = DeepModelSpec::new(
            vec![LayerDims { d: 12, r: 30 }, LayerDims { d: 8, r: 12 }],
            2,
            vec![3],
            NonzeroDist::UniformShell { lo: 1.0, hi: 2.0 },
            NonzeroDist::Rademacher,
        )
        .unwrap();
        let inst = synthesize(&spec, 40, 7).unwrap();
        assert_eq!(inst.intermediates.len(), 1);
        let y = inst.recompute_observations().unwrap();
        assert!(y.sub(&inst.observations).unwrap().max_abs() < 1e-12);
        // column sparsity of Y(1) bounded by s * s_(1)
        for j in 0..40 {
            assert!(inst.intermediates[0].column_nnz(j) <= 6);
        }
        // determinism
        let again = synthesize(&spec, 40, 7).unwrap();
        assert_eq!(again.observations, inst.observations);
        assert_eq!(again.codes, inst.codes);
    }

    #[test]
    fn perturb_snr_values() {
        let a = Matrix::identity(4);
        let (_, snr) = perturb_dictionary(&a, 0.5, 1).unwrap();
        assert!((snr - 6.0206).abs() < 1e-3);
        let (_, snr0) = perturb_dictionary(&a, 1.0, 1).unwrap();
        assert!(snr0.abs() < 1e-12);
        assert!(perturb_dictionary(&a, 0.0, 1).is_err());
        assert!(perturb_dictionary(&a, -0.5, 1).is_err());
    }

    #[test]
    fn alpha_snr_roundtrip() {
        for snr in [-3.0, 0.0, 3.0, 6.0, 9.0] {
            let a = alpha_for_snr_db(snr);
            assert!((-10.0 * (a * a).log10() - snr).abs() < 1e-12);
        }
    }
}
