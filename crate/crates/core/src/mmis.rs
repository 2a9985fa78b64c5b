//! The zero-momentum projector `P_T = (1/L) sum_n T^n`, the maximally
//! mixed invariant state `rho_T = P_T / dim T`, and its orbit ensemble.
//!
//! `P_T` has entry `1/p` between any two strings of the same orbit of
//! period `p`, and zero otherwise, so `P_T = sum_r |r><r|` over the
//! normalised orbit states `|r> = p^{-1/2} sum_j |T^j sigma_r>`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{orbit_decomposition, BasisString, OrbitTable, RingSpec};
use crate::linalg::{
    hermitian_eigenvalues, kron, max_abs_diff, partial_trace, von_neumann_entropy, DenseOperator,
    DensityMatrix, SparseHermitian,
};
use crate::num::{abs, conj, czero, real, Complex, Real};

/// Dense `P_T`.
pub fn build_pt<T: Real>(spec: &RingSpec) -> Result<DenseOperator<T>> {
    spec.dense_guard()?;
    let orbits = orbit_decomposition(spec)?;
    let dim = spec.dim();
    let mut p = DMatrix::from_element(dim, dim, czero());
    for k in 0..orbits.len() {
        let members = orbits.members(k);
        let w = Complex::new(T::one() / real(members.len() as f64), T::zero());
        for &i in &members {
            for &j in &members {
                p[(i, j)] = w;
            }
        }
    }
    Ok(p)
}

/// `P_T v` as the average of the `L` translated copies of `v`.
pub fn apply_pt<T: Real>(spec: &RingSpec, v: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    if v.len() != spec.dim() {
        return Err(Error::LengthMismatch {
            expected: spec.dim(),
            got: v.len(),
        });
    }
    let l = spec.sites();
    let mut out: Vec<Complex<T>> = vec![czero(); v.len()];
    let mut shifted = v.to_vec();
    for _ in 0..l {
        for (o, s) in out.iter_mut().zip(&shifted) {
            *o += *s;
        }
        // (T w)[T i] = w[i]
        let mut next = vec![czero(); v.len()];
        for (i, &z) in shifted.iter().enumerate() {
            next[spec.shift_index(i)] = z;
        }
        shifted = next;
    }
    let s = Complex::new(T::one() / real(l as f64), T::zero());
    Ok(out.into_iter().map(|z| z * s).collect())
}

/// Matrix-free handle on `rho_T`: the orbit table is all that is stored.
#[derive(Debug, Clone)]
pub struct Mmis {
    spec: RingSpec,
    orbits: OrbitTable,
}

impl Mmis {
    pub fn new(spec: &RingSpec) -> Result<Self> {
        Ok(Mmis {
            spec: *spec,
            orbits: orbit_decomposition(spec)?,
        })
    }

    pub fn spec(&self) -> RingSpec {
        self.spec
    }

    pub fn orbits(&self) -> &OrbitTable {
        &self.orbits
    }

    /// `dim T`, the number of orbits.
    pub fn rank(&self) -> usize {
        self.orbits.len()
    }

    /// `<i| rho_T |j>`.
    pub fn entry<T: Real>(&self, i: usize, j: usize) -> T {
        let k = self.orbits.orbit_of(i);
        if k != self.orbits.orbit_of(j) {
            return T::zero();
        }
        T::one() / real((self.orbits.periods()[k] * self.rank()) as f64)
    }

    /// Calls `f(i, j, value)` for every nonzero entry of `rho_T`.
    pub fn for_each_entry<T: Real>(&self, mut f: impl FnMut(usize, usize, T)) {
        let n = self.rank();
        for k in 0..n {
            let members = self.orbits.members(k);
            let v = T::one() / real((members.len() * n) as f64);
            for &i in &members {
                for &j in &members {
                    f(i, j, v);
                }
            }
        }
    }

    pub fn dense<T: Real>(&self) -> Result<DensityMatrix<T>> {
        self.spec.dense_guard()?;
        let dim = self.spec.dim();
        let mut m = DMatrix::from_element(dim, dim, czero());
        self.for_each_entry::<T>(|i, j, v| m[(i, j)] = Complex::new(v, T::zero()));
        Ok(DensityMatrix::from_unchecked(m))
    }

    /// Reduced state on the (0-based) sites `keep`, built orbit by orbit
    /// without forming `rho_T`.
    pub fn reduced<T: Real>(&self, keep: &[usize]) -> Result<DensityMatrix<T>> {
        let l = self.spec.sites();
        let d = self.spec.d();
        let mut mask = vec![false; l];
        for &s in keep {
            if s >= l || mask[s] {
                return Err(Error::InvalidRegion(format!("site {s} invalid for L = {l}")));
            }
            mask[s] = true;
        }
        let kdim = d.pow(keep.len() as u32);
        if kdim as u128 > crate::lattice::DENSE_GUARD {
            return Err(Error::DimensionGuard {
                what: "reduced density matrix",
                dim: kdim as u128,
                limit: crate::lattice::DENSE_GUARD,
            });
        }
        let n = self.rank();
        let mut out = DMatrix::from_element(kdim, kdim, czero());
        let mut split = Vec::new();
        for k in 0..n {
            split.clear();
            for idx in self.orbits.members(k) {
                split.push(kept_and_rest(&self.spec, idx, keep, &mask));
            }
            let v = Complex::new(T::one() / real((split.len() * n) as f64), T::zero());
            for &(a, c) in &split {
                for &(b, c2) in &split {
                    if c == c2 {
                        out[(a, b)] += v;
                    }
                }
            }
        }
        Ok(DensityMatrix::from_unchecked(out))
    }

    /// Members `(r_k, 1/dim T, |r_k>)` of the uniform orbit ensemble.
    pub fn ensemble<T: Real>(&self) -> Vec<EnsembleMember<T>> {
        let n = self.rank();
        let w = T::one() / real(n as f64);
        (0..n)
            .map(|k| {
                let members = self.orbits.members(k);
                let amp = Complex::new(T::one() / real::<T>(members.len() as f64).sqrt(), T::zero());
                EnsembleMember {
                    representative: BasisString::from_index(&self.spec, members[0])
                        .expect("orbit member in range"),
                    weight: w,
                    support: members.into_iter().map(|i| (i, amp)).collect(),
                }
            })
            .collect()
    }
}

/// Kept-sites index (in order of `keep`) and rest index (ring order).
pub(crate) fn kept_and_rest(spec: &RingSpec, idx: usize, keep: &[usize], mask: &[bool]) -> (usize, usize) {
    let d = spec.d();
    let digits = spec.digits(idx);
    let a = keep.iter().fold(0, |acc, &s| acc * d + digits[s]);
    let c = (0..spec.sites())
        .filter(|&s| !mask[s])
        .fold(0, |acc, s| acc * d + digits[s]);
    (a, c)
}

pub fn mmis_density<T: Real>(spec: &RingSpec) -> Result<DensityMatrix<T>> {
    Mmis::new(spec)?.dense()
}

#[derive(Debug, Clone)]
pub struct EnsembleMember<T: Real> {
    pub representative: BasisString,
    pub weight: T,
    /// Nonzero amplitudes `(basis index, amplitude)` of the unit vector.
    pub support: Vec<(usize, Complex<T>)>,
}

impl<T: Real> EnsembleMember<T> {
    pub fn to_dense(&self, dim: usize) -> Vec<Complex<T>> {
        let mut v = vec![czero(); dim];
        for &(i, z) in &self.support {
            v[i] = z;
        }
        v
    }

    /// Reduced state of the member on `keep`, from its Schmidt matrix.
    pub fn reduced(&self, spec: &RingSpec, keep: &[usize]) -> Result<DenseOperator<T>> {
        let mut mask = vec![false; spec.sites()];
        for &s in keep {
            mask[s] = true;
        }
        let kdim = spec.d().pow(keep.len() as u32);
        let mut out = DMatrix::from_element(kdim, kdim, czero());
        let split: Vec<(usize, usize, Complex<T>)> = self
            .support
            .iter()
            .map(|&(i, z)| {
                let (a, c) = kept_and_rest(spec, i, keep, &mask);
                (a, c, z)
            })
            .collect();
        for &(a, c, z) in &split {
            for &(b, c2, w) in &split {
                if c == c2 {
                    out[(a, b)] += z * conj(w);
                }
            }
        }
        Ok(out)
    }
}

pub fn ensemble_decomposition<T: Real>(spec: &RingSpec) -> Result<Vec<EnsembleMember<T>>> {
    spec.dense_guard()?;
    Ok(Mmis::new(spec)?.ensemble())
}

/// `max |sum_a w_a |psi_a><psi_a| - rho_T|`.
pub fn ensemble_residual<T: Real>(spec: &RingSpec) -> Result<T> {
    let rho = mmis_density::<T>(spec)?;
    let dim = spec.dim();
    let mut recon = DMatrix::from_element(dim, dim, czero());
    for m in ensemble_decomposition::<T>(spec)? {
        let w = Complex::new(m.weight, T::zero());
        for &(i, a) in &m.support {
            for &(j, b) in &m.support {
                recon[(i, j)] += w * a * conj(b);
            }
        }
    }
    Ok(max_abs_diff(&recon, rho.matrix()))
}

#[derive(Debug, Clone, Serialize)]
pub struct EofCertificate {
    pub cut: Vec<usize>,
    pub average_entropy: f64,
    pub bound: f64,
    pub max_member_entropy: f64,
    pub max_member_rank: usize,
    pub holds: bool,
}

/// Ensemble-averaged entanglement entropy across `cut` (0-based sites of
/// one side), compared with `log L`.
pub fn eof_upper_bound_certificate(spec: &RingSpec, cut: &[usize]) -> Result<EofCertificate> {
    spec.dense_guard()?;
    if cut.iter().any(|&s| s >= spec.sites()) {
        return Err(Error::InvalidRegion(format!("cut {cut:?} outside ring")));
    }
    let ens = Mmis::new(spec)?.ensemble::<f64>();
    let mut avg = 0.0;
    let mut max_s: f64 = 0.0;
    let mut max_rank = 0;
    for m in &ens {
        let eigs = hermitian_eigenvalues(&m.reduced(spec, cut)?);
        let s = von_neumann_entropy(&eigs);
        let rank = eigs.iter().filter(|&&x| x > 1e-12).count();
        avg += m.weight * s;
        max_s = max_s.max(s);
        max_rank = max_rank.max(rank);
    }
    let bound = (spec.sites() as f64).ln();
    Ok(EofCertificate {
        cut: cut.to_vec(),
        average_entropy: avg,
        bound,
        max_member_entropy: max_s,
        max_member_rank: max_rank,
        holds: avg <= bound + 1e-9 && max_s <= bound + 1e-9 && max_rank <= spec.sites(),
    })
}

/// `log ||rho^{T_B}||_1` with `B` the sites in `flip`; the partial
/// transpose is assembled sparsely from the orbit structure.
pub fn log_negativity_mmis(spec: &RingSpec, flip: &[usize]) -> Result<f64> {
    spec.dense_guard()?;
    let l = spec.sites();
    let mut mask = vec![false; l];
    for &s in flip {
        if s >= l {
            return Err(Error::InvalidRegion(format!("site {s} outside ring")));
        }
        mask[s] = true;
    }
    let mmis = Mmis::new(spec)?;
    let d = spec.d();
    let mut pt = SparseHermitian::<f64>::new(spec.dim());
    mmis.for_each_entry::<f64>(|i, j, v| {
        let (di, dj) = (spec.digits(i), spec.digits(j));
        let (mut ni, mut nj) = (0, 0);
        for s in 0..l {
            let (a, b) = if mask[s] { (dj[s], di[s]) } else { (di[s], dj[s]) };
            ni = ni * d + a;
            nj = nj * d + b;
        }
        pt.add(ni, nj, Complex::new(v, 0.0));
    });
    let norm: f64 = pt.eigenvalues().iter().map(|x| x.abs()).sum();
    Ok(norm.ln().max(0.0))
}

/// `log ||rho^{T_B}||_1` for an arbitrary dense state.
pub fn negativity_witness<T: Real>(rho: &DensityMatrix<T>, spec: &RingSpec, flip: &[usize]) -> Result<T> {
    let pt = crate::linalg::partial_transpose(rho.matrix(), spec.d(), spec.sites(), flip)?;
    let n = crate::linalg::trace_norm_hermitian(&pt);
    Ok(n.ln().max(T::zero()))
}

/// `max(|T rho - rho|, |rho T^dag - rho|)`.
pub fn strong_symmetry_residual(spec: &RingSpec) -> Result<f64> {
    let rho = mmis_density::<f64>(spec)?;
    let t = crate::lattice::translation_sparse::<f64>(spec, 1);
    let left = t.mul_dense(rho.matrix());
    let right = t.adjoint().dense_mul(rho.matrix());
    Ok(max_abs_diff(&left, rho.matrix()).max(max_abs_diff(&right, rho.matrix())))
}

/// Largest `|u^{(x)L} rho u^{(x)L dag} - rho|` over `trials` Haar-random `u`.
pub fn weak_symmetry_residual<R: Rng + ?Sized>(spec: &RingSpec, trials: usize, rng: &mut R) -> Result<f64> {
    let rho = mmis_density::<f64>(spec)?;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let u: DenseOperator<f64> = crate::linalg::haar_unitary(spec.d(), rng);
        let mut big: DenseOperator<f64> = DMatrix::from_element(1, 1, Complex::new(1.0, 0.0));
        for _ in 0..spec.sites() {
            big = kron(&big, &u);
        }
        let conj_rho = &big * rho.matrix() * crate::linalg::dagger(&big);
        worst = worst.max(max_abs_diff(&conj_rho, rho.matrix()));
    }
    Ok(worst)
}

/// Reduced state of `rho_T` on `keep` by explicit dense partial trace.
pub fn reduced_dense<T: Real>(spec: &RingSpec, keep: &[usize]) -> Result<DensityMatrix<T>> {
    let rho = mmis_density::<T>(spec)?;
    Ok(DensityMatrix::from_unchecked(partial_trace(
        rho.matrix(),
        spec.d(),
        spec.sites(),
        keep,
    )?))
}

/// `|T psi - psi|_max` for a sparse state.
pub fn translation_defect<T: Real>(spec: &RingSpec, support: &[(usize, Complex<T>)]) -> T {
    let mut v = vec![czero::<T>(); spec.dim()];
    for &(i, z) in support {
        v[i] = z;
    }
    let mut worst = T::zero();
    for &(i, z) in support {
        worst = worst.max(abs(v[spec.shift_index(i)] - z));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, matmul_sparse_left, max_abs, trace};
    use crate::num::cone;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ring(l: usize, d: usize) -> RingSpec {
        RingSpec::new(l, d).unwrap()
    }

    #[test]
    fn projector_examples() {
        let p1: DenseOperator<f64> = build_pt(&ring(1, 3)).unwrap();
        assert!(max_abs_diff(&p1, &identity(3)) < 1e-15);
        for (l, rank) in [(2, 3), (5, 8)] {
            let p: DenseOperator<f64> = build_pt(&ring(l, 2)).unwrap();
            assert!((trace(&p).re - rank as f64).abs() < 1e-12);
            assert!(max_abs_diff(&matmul_sparse_left(&p, &p), &p) < 1e-12);
        }
    }

    #[test]
    fn projector_is_average_of_translations() {
        let spec = ring(4, 3);
        let p: DenseOperator<f64> = build_pt(&spec).unwrap();
        let t: DenseOperator<f64> = crate::lattice::translation_matrix(&spec).unwrap();
        let mut acc = DMatrix::from_element(81, 81, czero());
        let mut tn = identity::<f64>(81);
        for _ in 0..4 {
            acc += &tn;
            tn = &t * tn;
        }
        assert!(max_abs_diff(&(acc * Complex::new(0.25, 0.0)), &p) < 1e-14);
        assert!(max_abs_diff(&(&t * &p), &(&p * &t)) < 1e-14);
    }

    #[test]
    fn matrix_free_apply_matches_dense() {
        let spec = ring(5, 2);
        let p: DenseOperator<f64> = build_pt(&spec).unwrap();
        let v: Vec<Complex<f64>> = (0..32).map(|i| Complex::new(i as f64, (i * i % 7) as f64)).collect();
        let fast = apply_pt(&spec, &v).unwrap();
        let slow = &p * nalgebra::DVector::from_vec(v);
        for i in 0..32 {
            assert!((fast[i] - slow[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn density_purity() {
        let r1 = mmis_density::<f64>(&ring(1, 2)).unwrap();
        assert!(max_abs_diff(r1.matrix(), &(identity::<f64>(2) * Complex::new(0.5, 0.0))) < 1e-15);
        assert!((mmis_density::<f64>(&ring(4, 2)).unwrap().purity() - 1.0 / 6.0).abs() < 1e-14);
        assert!((mmis_density::<f64>(&ring(6, 2)).unwrap().purity() - 1.0 / 14.0).abs() < 1e-14);
        let r = mmis_density::<f64>(&ring(6, 2)).unwrap();
        assert!(DensityMatrix::new_checked(r.into_matrix()).is_ok());
    }

    #[test]
    fn ensemble_properties() {
        let spec = ring(3, 2);
        let ens = ensemble_decomposition::<f64>(&spec).unwrap();
        assert_eq!(ens.len(), 4);
        assert_eq!(ens[0].support, vec![(0, cone())]);
        let wsum: f64 = ens.iter().map(|m| m.weight).sum();
        assert!((wsum - 1.0).abs() < 1e-15);
        for m in &ens {
            assert!(translation_defect(&spec, &m.support) < 1e-12);
        }
        assert!(ensemble_residual::<f64>(&ring(6, 2)).unwrap() < 1e-10);
        assert!(ensemble_residual::<f64>(&ring(4, 3)).unwrap() < 1e-10);
    }

    #[test]
    fn eof_certificates() {
        let c1 = eof_upper_bound_certificate(&ring(1, 2), &[]).unwrap();
        assert_eq!(c1.average_entropy, 0.0);
        for l in [6, 8] {
            let cut: Vec<usize> = (0..l / 2).collect();
            let c = eof_upper_bound_certificate(&ring(l, 2), &cut).unwrap();
            assert!(c.holds, "{c:?}");
            assert!(c.average_entropy > 0.0);
        }
    }

    #[test]
    fn negativity_paths_agree_and_product_state_is_ppt() {
        let spec = ring(4, 2);
        let mixed = DensityMatrix::<f64>::maximally_mixed(16);
        assert!(negativity_witness(&mixed, &spec, &[2, 3]).unwrap().abs() < 1e-12);
        let rho = mmis_density::<f64>(&spec).unwrap();
        let dense = negativity_witness(&rho, &spec, &[2, 3]).unwrap();
        let sparse = log_negativity_mmis(&spec, &[2, 3]).unwrap();
        assert!((dense - sparse).abs() < 1e-12);
        assert!(log_negativity_mmis(&ring(3, 2), &[2]).unwrap().abs() < 1e-12);
        assert!(log_negativity_mmis(&ring(3, 2), &[1, 2]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn symmetries() {
        assert!(strong_symmetry_residual(&ring(5, 2)).unwrap() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(weak_symmetry_residual(&ring(4, 2), 20, &mut rng).unwrap() < 1e-10);
        assert!(weak_symmetry_residual(&ring(3, 3), 5, &mut rng).unwrap() < 1e-10);
    }

    #[test]
    fn reduced_paths_agree() {
        let spec = ring(6, 2);
        let keep = [0, 2, 3];
        let fast = Mmis::new(&spec).unwrap().reduced::<f64>(&keep).unwrap();
        let slow = reduced_dense::<f64>(&spec, &keep).unwrap();
        assert!(max_abs(&(fast.matrix() - slow.matrix())) < 1e-14);
    }
}
