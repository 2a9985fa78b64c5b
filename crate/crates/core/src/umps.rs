//! Uniform matrix product states `psi(sigma) = Tr[A^{sigma_1} ... A^{sigma_L}]`,
//! the MPS-X variant with one boundary insertion, and span-rank estimates.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::dims::binomial;
use crate::error::{Error, Result};
use crate::lattice::{orbit_decomposition, RingSpec};
use crate::linalg::{identity, norm_sqr, DenseOperator};
use crate::num::{abs, cone, czero, real, root_of_unity, Complex, Real};

/// Largest state-vector length produced here.
pub const VECTOR_GUARD: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct MpsTensor<T: Real> {
    chi: usize,
    mats: Vec<DenseOperator<T>>,
}

impl<T: Real> MpsTensor<T> {
    /// One `chi x chi` matrix per physical index.
    pub fn new(mats: Vec<DenseOperator<T>>) -> Result<Self> {
        let chi = mats.first().map(|m| m.nrows()).unwrap_or(0);
        if chi == 0 || mats.len() < 2 {
            return Err(Error::Precondition("need chi >= 1 and d >= 2".into()));
        }
        for m in &mats {
            if m.nrows() != chi || m.ncols() != chi {
                return Err(Error::LengthMismatch {
                    expected: chi,
                    got: m.nrows(),
                });
            }
            if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::Precondition("non-finite tensor entry".into()));
            }
        }
        Ok(MpsTensor { chi, mats })
    }

    /// `chi = 1` tensor of the product state `psi^{(x)L}`.
    pub fn product(psi: &[Complex<T>]) -> Result<Self> {
        Self::new(psi.iter().map(|&z| DMatrix::from_element(1, 1, z)).collect())
    }

    /// Entries independent standard complex Gaussians.
    pub fn random<R: Rng + ?Sized>(chi: usize, d: usize, rng: &mut R) -> Self {
        let mats = (0..d)
            .map(|_| {
                DMatrix::from_fn(chi, chi, |_, _| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex::new(real(re), real(im))
                })
            })
            .collect();
        MpsTensor { chi, mats }
    }

    pub fn chi(&self) -> usize {
        self.chi
    }

    pub fn d(&self) -> usize {
        self.mats.len()
    }

    pub fn matrix(&self, sigma: usize) -> &DenseOperator<T> {
        &self.mats[sigma]
    }
}

fn vector_guard(d: usize, sites: usize) -> Result<usize> {
    let dim = crate::lattice::checked_pow(d, sites).unwrap_or(u128::MAX);
    if dim > VECTOR_GUARD {
        return Err(Error::DimensionGuard {
            what: "state vector",
            dim,
            limit: VECTOR_GUARD,
        });
    }
    Ok(dim as usize)
}

/// Components `Tr[X A^{sigma_1} ... A^{sigma_L}]` over all strings, by a
/// depth-first walk sharing prefix products.
fn contract<T: Real>(a: &MpsTensor<T>, x: &DenseOperator<T>, sites: usize) -> Result<Vec<Complex<T>>> {
    if sites == 0 {
        return Err(Error::InvalidRing { sites, d: a.d() });
    }
    if x.nrows() != a.chi || x.ncols() != a.chi {
        return Err(Error::LengthMismatch {
            expected: a.chi,
            got: x.nrows(),
        });
    }
    let dim = vector_guard(a.d(), sites)?;
    let mut out = vec![czero(); dim];
    fn walk<T: Real>(
        a: &MpsTensor<T>,
        prefix: &DenseOperator<T>,
        depth: usize,
        sites: usize,
        index: usize,
        out: &mut [Complex<T>],
    ) {
        if depth == sites {
            out[index] = crate::linalg::trace(prefix);
            return;
        }
        for s in 0..a.d() {
            let next = prefix * &a.mats[s];
            walk(a, &next, depth + 1, sites, index * a.d() + s, out);
        }
    }
    walk(a, x, 0, sites, 0, &mut out);
    Ok(out)
}

/// Unnormalised uMPS amplitudes, indexed like basis strings.
pub fn umps_vector<T: Real>(a: &MpsTensor<T>, sites: usize) -> Result<Vec<Complex<T>>> {
    contract(a, &identity(a.chi), sites)
}

/// Amplitudes `Tr[X A^{sigma_1} ... A^{sigma_L}]`.
pub fn mpsx_vector<T: Real>(a: &MpsTensor<T>, x: &DenseOperator<T>, sites: usize) -> Result<Vec<Complex<T>>> {
    contract(a, x, sites)
}

/// `(A, X)` with `A^0 = 1`, `A^1 = |1><0|`, `X = |0><1|`; the MPS-X state
/// is the unnormalised W state.
pub fn w_tensor<T: Real>() -> (MpsTensor<T>, DenseOperator<T>) {
    let z = czero();
    let o = cone();
    let a1 = DMatrix::from_row_slice(2, 2, &[z, z, o, z]);
    let x = DMatrix::from_row_slice(2, 2, &[z, o, z, z]);
    (MpsTensor { chi: 2, mats: vec![identity(2), a1] }, x)
}

/// `|W> = L^{-1/2} sum_i |0..1_i..0>`.
pub fn w_state<T: Real>(sites: usize) -> Result<Vec<Complex<T>>> {
    let dim = vector_guard(2, sites)?;
    let amp = Complex::new(T::one() / real::<T>(sites as f64).sqrt(), T::zero());
    let mut v = vec![czero(); dim];
    for i in 0..sites {
        v[1 << (sites - 1 - i)] = amp;
    }
    Ok(v)
}

pub fn normalize<T: Real>(v: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = norm_sqr(v).sqrt();
    let s = Complex::new(T::one() / n, T::zero());
    v.iter().map(|&z| z * s).collect()
}

fn distance<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + crate::num::abs2(x - y))
        .sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct WCheck {
    #[serde(rename = "L")]
    pub sites: usize,
    pub mpsx_residual: f64,
    pub superposition_residual: f64,
}

/// Distances of the MPS-X construction and of
/// `normalize(sum_k w^{-k} |psi_k>^{(x)L})`, `|psi_k> = (|0> + w^k |1>)/sqrt 2`,
/// from the explicit W vector.
pub fn w_superposition_check(sites: usize) -> Result<WCheck> {
    if sites < 2 {
        return Err(Error::Precondition("W state needs L >= 2".into()));
    }
    let w = w_state::<f64>(sites)?;
    let (a, x) = w_tensor::<f64>();
    let mpsx = normalize(&mpsx_vector(&a, &x, sites)?);
    let dim = w.len();
    let mut sum = vec![czero::<f64>(); dim];
    let h = 0.5_f64.sqrt();
    for k in 0..sites {
        let wk: Complex<f64> = root_of_unity(k as i64, sites as u64);
        let psi = MpsTensor::product(&[Complex::new(h, 0.0), wk * h])?;
        let v = umps_vector(&psi, sites)?;
        let c: Complex<f64> = root_of_unity(-(k as i64), sites as u64);
        for (s, z) in sum.iter_mut().zip(v) {
            *s += c * z;
        }
    }
    Ok(WCheck {
        sites,
        mpsx_residual: distance(&mpsx, &w),
        superposition_residual: distance(&normalize(&sum), &w),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpanEstimate {
    pub chi: usize,
    pub d: usize,
    #[serde(rename = "L")]
    pub sites: usize,
    pub sample_count: usize,
    pub singular_values: Vec<f64>,
    /// Singular values above `1e-8` times the largest.
    pub numeric_rank: usize,
    /// Same count at the looser `1e-6` cut.
    pub rank_loose: usize,
    pub bound: u128,
    pub dim_t: usize,
    pub insufficient_samples: bool,
}

impl SpanEstimate {
    pub fn stable(&self) -> bool {
        self.numeric_rank == self.rank_loose
    }

    pub fn within_bound(&self) -> bool {
        (self.numeric_rank as u128) <= self.bound
    }

    /// `s_rank / s_{rank+1}`, or infinity when the spectrum ends at the rank.
    pub fn gap(&self) -> f64 {
        match (self.numeric_rank.checked_sub(1), self.singular_values.get(self.numeric_rank)) {
            (Some(i), Some(&next)) if next > 0.0 => self.singular_values[i] / next,
            _ => f64::INFINITY,
        }
    }
}

/// `binom(L + d chi^2 - 1, d chi^2 - 1)`.
pub fn span_bound(chi: usize, d: usize, sites: usize) -> Result<u128> {
    let m = (d * chi * chi) as u128;
    binomial(sites as u128 + m - 1, m - 1)
}

/// Default sample count: enough to saturate whichever of the bound and
/// `dim T` is smaller, plus ten.
pub fn default_samples(chi: usize, d: usize, sites: usize) -> Result<usize> {
    let spec = RingSpec::new(sites, d)?;
    let dim_t = orbit_decomposition(&spec)?.len() as u128;
    Ok((span_bound(chi, d, sites)?.min(dim_t) + 10) as usize)
}

fn rank_of(s: &[f64], rel: f64) -> usize {
    let top = s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&x| x > rel * top).count()
}

/// Numerical rank of the span of `samples` random uMPS vectors.
///
/// uMPS vectors are translation invariant, so each is mapped to the
/// orthonormal orbit-state coordinates (component times `sqrt(period)`),
/// which preserves singular values while shrinking the matrix from `d^L`
/// to `dim T` columns.
pub fn span_rank_estimate<R: Rng + ?Sized>(
    chi: usize,
    d: usize,
    sites: usize,
    samples: usize,
    rng: &mut R,
) -> Result<SpanEstimate> {
    let spec = RingSpec::new(sites, d)?;
    vector_guard(d, sites)?;
    let orbits = orbit_decomposition(&spec)?;
    let bound = span_bound(chi, d, sites)?;
    let cols = orbits.len();
    let weights: Vec<f64> = orbits.periods().iter().map(|&p| (p as f64).sqrt()).collect();
    let mut m = DMatrix::<Complex<f64>>::zeros(samples, cols);
    for r in 0..samples {
        let a = MpsTensor::<f64>::random(chi, d, rng);
        let v = umps_vector(&a, sites)?;
        let row: Vec<Complex<f64>> = orbits
            .representative_indices()
            .iter()
            .zip(&weights)
            .map(|(&i, &w)| v[i] * w)
            .collect();
        let n = norm_sqr(&row).sqrt();
        for (c, z) in row.into_iter().enumerate() {
            m[(r, c)] = z / n;
        }
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(SpanEstimate {
        chi,
        d,
        sites,
        sample_count: samples,
        numeric_rank: rank_of(&s, 1e-8),
        rank_loose: rank_of(&s, 1e-6),
        singular_values: s,
        bound,
        dim_t: cols,
        insufficient_samples: (samples as u128) < bound.saturating_add(10),
    })
}

/// Numerical rank of the span of random MPS-X vectors (random `A` and
/// `X`), in plain basis coordinates. Recorded only; no bound is known.
pub fn mpsx_span_rank<R: Rng + ?Sized>(chi: usize, d: usize, sites: usize, samples: usize, rng: &mut R) -> Result<usize> {
    let dim = vector_guard(d, sites)?;
    let mut m = DMatrix::<Complex<f64>>::zeros(samples, dim);
    for r in 0..samples {
        let a = MpsTensor::<f64>::random(chi, d, rng);
        let x = MpsTensor::<f64>::random(chi, 2, rng).mats.swap_remove(0);
        let v = normalize(&mpsx_vector(&a, &x, sites)?);
        for (c, z) in v.into_iter().enumerate() {
            m[(r, c)] = z;
        }
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(rank_of(&s, 1e-8))
}

/// `max |psi(T sigma) - psi(sigma)|`.
pub fn translation_defect<T: Real>(spec: &RingSpec, v: &[Complex<T>]) -> T {
    (0..v.len()).fold(T::zero(), |acc, i| acc.max(abs(v[spec.shift_index(i)] - v[i])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigenvalues;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn product_and_ghz() {
        let psi = [c(0.6, 0.0), c(0.0, 0.8)];
        let v = umps_vector(&MpsTensor::product(&psi).unwrap(), 3).unwrap();
        for (i, z) in v.iter().enumerate() {
            let want = (0..3).fold(c(1.0, 0.0), |acc, s| acc * psi[(i >> (2 - s)) & 1]);
            assert!((z - want).norm() < 1e-15);
        }
        let ghz = MpsTensor::new(vec![
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
            DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
        ])
        .unwrap();
        let v = umps_vector(&ghz, 4).unwrap();
        for (i, z) in v.iter().enumerate() {
            let want = if i == 0 || i == 15 { 1.0 } else { 0.0 };
            assert!((z - c(want, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn random_tensor_matches_explicit_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = MpsTensor::<f64>::random(2, 2, &mut rng);
        let v = umps_vector(&a, 4).unwrap();
        for s0 in 0..2 {
            for s1 in 0..2 {
                for s2 in 0..2 {
                    for s3 in 0..2 {
                        let p = a.matrix(s0) * a.matrix(s1) * a.matrix(s2) * a.matrix(s3);
                        let idx = ((s0 * 2 + s1) * 2 + s2) * 2 + s3;
                        assert!((v[idx] - crate::linalg::trace(&p)).norm() < 1e-12);
                    }
                }
            }
        }
        let spec = RingSpec::new(4, 2).unwrap();
        assert!(translation_defect(&spec, &v) < 1e-12);
    }

    #[test]
    fn mpsx_special_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = MpsTensor::<f64>::random(3, 2, &mut rng);
        assert_eq!(mpsx_vector(&a, &identity(3), 5).unwrap(), umps_vector(&a, 5).unwrap());
        let zero = DMatrix::zeros(3, 3);
        assert!(mpsx_vector(&a, &zero, 5).unwrap().iter().all(|z| z.norm() == 0.0));
        assert!(mpsx_vector(&a, &identity(2), 5).is_err());
    }

    #[test]
    fn w_identities() {
        for l in [2, 4, 7] {
            let r = w_superposition_check(l).unwrap();
            assert!(r.mpsx_residual < 1e-12 && r.superposition_residual < 1e-10, "{r:?}");
        }
        assert!(w_superposition_check(1).is_err());
    }

    #[test]
    fn chi_one_span_is_symmetric_subspace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (l, want) in [(4, 5), (6, 7)] {
            let n = default_samples(1, 2, l).unwrap();
            let e = span_rank_estimate(1, 2, l, n, &mut rng).unwrap();
            assert_eq!(e.numeric_rank, want);
            assert_eq!(e.bound, want as u128);
            assert!(e.stable() && e.gap() > 1e3 && !e.insufficient_samples);
        }
    }

    #[test]
    fn span_rank_agrees_with_gram_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (chi, d, l) = (2, 2, 4);
        let n = default_samples(chi, d, l).unwrap();
        let e = span_rank_estimate(chi, d, l, n, &mut rng).unwrap();
        assert!(e.insufficient_samples);
        assert!(e.within_bound() && e.numeric_rank <= 16);
        // Gram oracle on fresh samples in plain coordinates.
        let vs: Vec<Vec<Complex<f64>>> = (0..n)
            .map(|_| normalize(&umps_vector(&MpsTensor::<f64>::random(chi, d, &mut rng), l).unwrap()))
            .collect();
        let g = DMatrix::from_fn(n, n, |i, j| {
            vs[i].iter().zip(&vs[j]).fold(c(0.0, 0.0), |acc, (x, y)| acc + x * y.conj())
        });
        let eig = hermitian_eigenvalues(&g);
        let gram_rank = eig.iter().filter(|&&x| x > 1e-10 * eig[0]).count();
        assert_eq!(gram_rank, e.numeric_rank);
        assert_eq!(e.numeric_rank, e.dim_t);
    }

    #[test]
    fn mpsx_rank_is_recorded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = mpsx_span_rank(2, 2, 4, 30, &mut rng).unwrap();
        assert!(r >= 6 && r <= 16);
    }
}
