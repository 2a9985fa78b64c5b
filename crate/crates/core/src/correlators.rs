//! Correlators and reduced states of `rho_T`.
//!
//! `Tr[T^k (O_A x 1)]` is evaluated by cycle counting: the shift by `k`
//! splits the ring into `gcd(L, k)` cycles `i -> i + k`. Cycles that avoid
//! `A` each contribute a free sum, i.e. a factor `d`; along the other
//! cycles each site `a` of `A` is wired to the next site of `A` that the
//! cycle reaches, which defines a permutation `pi` of `A` and
//! `Tr[T^k O_A] = d^{N_free} Tr_A[P_pi O_A]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{PauliString, RingSpec, DENSE_GUARD};
use crate::linalg::{hermitian_eigenvalues, identity, trace_norm_hermitian, von_neumann_entropy, DenseOperator, DensityMatrix};
use crate::mmis::Mmis;
use crate::num::{czero, gcd, is_prime, real, Complex, Real};

/// Sorted, distinct, 1-based site labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RegionSpec {
    sites: Vec<usize>,
}

impl RegionSpec {
    pub fn new(mut sites: Vec<usize>, spec: &RingSpec) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidRegion("empty region".into()));
        }
        sites.sort_unstable();
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidRegion(format!("repeated site in {sites:?}")));
        }
        if sites[0] < 1 || *sites.last().unwrap() > spec.sites() {
            return Err(Error::InvalidRegion(format!(
                "{sites:?} not within 1..={}",
                spec.sites()
            )));
        }
        Ok(RegionSpec { sites })
    }

    /// Contiguous interval `start, start + 1, ..., start + len - 1`,
    /// wrapping around the ring.
    pub fn interval(start: usize, len: usize, spec: &RingSpec) -> Result<Self> {
        let l = spec.sites();
        Self::new((0..len).map(|i| (start - 1 + i) % l + 1).collect(), spec)
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn zero_based(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s - 1).collect()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn union(&self, other: &RegionSpec) -> RegionSpec {
        let mut s = self.sites.clone();
        s.extend(&other.sites);
        s.sort_unstable();
        s.dedup();
        RegionSpec { sites: s }
    }

    pub fn is_disjoint(&self, other: &RegionSpec) -> bool {
        self.sites.iter().all(|s| !other.sites.contains(s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleEvaluation {
    pub k: usize,
    /// `permutation[a] = b`: position `a` of `A` is wired to position `b`.
    pub permutation: Vec<usize>,
    pub free_cycle_count: usize,
    pub prefactor: u128,
}

impl CycleEvaluation {
    pub fn is_identity(&self) -> bool {
        self.permutation.iter().enumerate().all(|(a, &b)| a == b)
    }
}

/// Cycle structure of `T^k` relative to the region.
pub fn cycle_evaluation(k: usize, region: &RegionSpec, spec: &RingSpec) -> CycleEvaluation {
    let l = spec.sites();
    let k = k % l;
    let a = region.zero_based();
    let pos = |s: usize| a.iter().position(|&x| x == s);
    let g = gcd(k, l);
    let mut free = 0;
    for start in 0..g {
        let mut s = start;
        let mut touches = false;
        for _ in 0..l / g {
            touches |= pos(s).is_some();
            s = (s + k) % l;
        }
        if !touches {
            free += 1;
        }
    }
    let permutation = a
        .iter()
        .map(|&s| {
            let mut t = (s + k) % l;
            while pos(t).is_none() {
                t = (t + k) % l;
            }
            pos(t).expect("loop ends on a region site")
        })
        .collect();
    CycleEvaluation {
        k,
        permutation,
        free_cycle_count: free,
        prefactor: (spec.d() as u128).pow(free as u32),
    }
}

fn check_region_op<T: Real>(op: &DenseOperator<T>, region: &RegionSpec, spec: &RingSpec) -> Result<()> {
    let n = spec.d().pow(region.len() as u32);
    if op.nrows() != n || op.ncols() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: op.nrows(),
        });
    }
    Ok(())
}

/// `Tr[T^k (O_A x 1)]` by cycle counting; cost `d^|A|`.
pub fn trace_tk_oa<T: Real>(
    k: usize,
    op: &DenseOperator<T>,
    region: &RegionSpec,
    spec: &RingSpec,
) -> Result<Complex<T>> {
    check_region_op(op, region, spec)?;
    let cyc = cycle_evaluation(k, region, spec);
    let d = spec.d();
    let na = region.len();
    let n = d.pow(na as u32);
    let mut acc: Complex<T> = czero();
    let mut digits = vec![0usize; na];
    for col in 0..n {
        let mut rem = col;
        for a in (0..na).rev() {
            digits[a] = rem % d;
            rem /= d;
        }
        // (P_pi)_{sigma, tau} = prod_a delta(tau_a, sigma_pi(a))
        let row = cyc.permutation.iter().fold(0, |acc, &b| acc * d + digits[b]);
        acc += op[(row, col)];
    }
    Ok(acc * Complex::new(real(cyc.prefactor as f64), T::zero()))
}

/// `Tr[T^k (O_A x 1)]` summed over all `d^L` basis states.
pub fn trace_tk_oa_bruteforce<T: Real>(
    k: usize,
    op: &DenseOperator<T>,
    region: &RegionSpec,
    spec: &RingSpec,
) -> Result<Complex<T>> {
    check_region_op(op, region, spec)?;
    let a = region.zero_based();
    let mut in_a = vec![false; spec.sites()];
    for &s in &a {
        in_a[s] = true;
    }
    let d = spec.d();
    let mut acc: Complex<T> = czero();
    for sigma in 0..spec.dim() {
        // <sigma| T^k O |sigma> = <T^{-k} sigma| O |sigma>
        let bra = spec.translate_index(sigma, -(k as i64));
        let (db, dk) = (spec.digits(bra), spec.digits(sigma));
        if (0..spec.sites()).any(|s| !in_a[s] && db[s] != dk[s]) {
            continue;
        }
        let row = a.iter().fold(0, |acc, &s| acc * d + db[s]);
        let col = a.iter().fold(0, |acc, &s| acc * d + dk[s]);
        acc += op[(row, col)];
    }
    Ok(acc)
}

/// `d (L - 1) / (d^L + d (L - 1))`, the prime-L value of every neutral
/// clock-string correlator.
pub fn prime_closed_form(spec: &RingSpec) -> f64 {
    let l = spec.sites() as f64;
    let d = spec.d() as f64;
    d * (l - 1.0) / (d.powi(spec.sites() as i32) + d * (l - 1.0))
}

/// `Tr[rho_T O]` for a generalised Pauli string, summed over the basis.
pub fn expectation_pauli(mmis: &Mmis, ps: &PauliString) -> Complex<f64> {
    let spec = mmis.spec();
    let mut acc: Complex<f64> = czero();
    for sigma in 0..spec.dim() {
        // <sigma| rho O |sigma> = phase * rho[sigma, sigma']
        let (image, phase) = ps.apply_basis::<f64>(&spec, sigma);
        let r = mmis.entry::<f64>(sigma, image);
        if r != 0.0 {
            acc += phase * r;
        }
    }
    acc
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelatorValue {
    pub value: f64,
    pub closed_form: Option<f64>,
    pub closed_form_available: bool,
    pub residual: Option<f64>,
}

impl CorrelatorValue {
    fn new(value: f64, closed_form: Option<f64>) -> Self {
        CorrelatorValue {
            value,
            closed_form,
            closed_form_available: closed_form.is_some(),
            residual: closed_form.map(|c| (value - c).abs()),
        }
    }
}

/// `Tr[rho_T Z_i Z_j^{-1}]` for 1-based sites `i`, `j`. The closed form is
/// attached only for prime `L`.
pub fn two_point_zz(mmis: &Mmis, i: usize, j: usize) -> Result<CorrelatorValue> {
    let spec = mmis.spec();
    let l = spec.sites();
    if i < 1 || j < 1 || i > l || j > l {
        return Err(Error::InvalidRegion(format!("sites ({i}, {j}) outside 1..={l}")));
    }
    let mut ps = PauliString::identity(l);
    if i == j {
        return Ok(CorrelatorValue::new(1.0, Some(1.0)));
    }
    ps.b[i - 1] = 1;
    ps.b[j - 1] = spec.d() - 1;
    let value = expectation_pauli(mmis, &ps).re;
    let closed = is_prime(l).then(|| prime_closed_form(&spec));
    Ok(CorrelatorValue::new(value, closed))
}

/// `Tr[rho_T prod_i Z_i^{b_i}]`; for prime `L` the closed form is the
/// constant above when `sum b = 0 mod d` and zero otherwise.
pub fn npoint_z(mmis: &Mmis, b: &[usize]) -> Result<CorrelatorValue> {
    let spec = mmis.spec();
    if b.len() != spec.sites() {
        return Err(Error::LengthMismatch {
            expected: spec.sites(),
            got: b.len(),
        });
    }
    let d = spec.d();
    if b.iter().all(|&x| x % d == 0) {
        return Err(Error::Precondition("all-zero exponent vector".into()));
    }
    let ps = PauliString::new(vec![0; b.len()], b.iter().map(|x| x % d).collect());
    let value = expectation_pauli(mmis, &ps).re;
    let closed = is_prime(spec.sites()).then(|| {
        if b.iter().sum::<usize>() % d == 0 {
            prime_closed_form(&spec)
        } else {
            0.0
        }
    });
    Ok(CorrelatorValue::new(value, closed))
}

/// Reduced state of `rho_T` on a region, matrix-free.
pub fn reduced_density(mmis: &Mmis, region: &RegionSpec) -> Result<DensityMatrix<f64>> {
    mmis.reduced(&region.zero_based())
}

/// Reduced state of an explicit density matrix on a region.
pub fn reduced_density_dense<T: Real>(
    rho: &DensityMatrix<T>,
    spec: &RingSpec,
    region: &RegionSpec,
) -> Result<DensityMatrix<T>> {
    rho.reduce(spec.d(), spec.sites(), &region.zero_based())
}

/// `||rho_A - 1/d^|A| ||_1`.
pub fn distance_to_maximally_mixed(rho_a: &DensityMatrix<f64>) -> f64 {
    let n = rho_a.dim();
    let diff = rho_a.matrix() - identity::<f64>(n) * Complex::new(1.0 / n as f64, 0.0);
    trace_norm_hermitian(&diff)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    #[serde(rename = "L")]
    pub sites: usize,
    pub region_size: usize,
    pub distance: f64,
    /// `L d^{-(L - |A|)/2}`
    pub scale: f64,
    pub ratio: f64,
}

impl BoundCheck {
    pub fn holds(&self, c: f64) -> bool {
        self.distance <= c * self.scale
    }
}

pub fn region_bound_check(mmis: &Mmis, region: &RegionSpec) -> Result<BoundCheck> {
    let spec = mmis.spec();
    let rho_a = reduced_density(mmis, region)?;
    let distance = distance_to_maximally_mixed(&rho_a);
    let l = spec.sites();
    let scale = l as f64 * (spec.d() as f64).powf(-((l - region.len()) as f64) / 2.0);
    Ok(BoundCheck {
        sites: l,
        region_size: region.len(),
        distance,
        scale,
        ratio: distance / scale,
    })
}

pub fn region_entropy(mmis: &Mmis, region: &RegionSpec) -> Result<f64> {
    Ok(von_neumann_entropy(&hermitian_eigenvalues(reduced_density(mmis, region)?.matrix())))
}

#[derive(Debug, Clone, Serialize)]
pub struct CmiValue {
    pub value: f64,
    pub log_l: f64,
    pub ratio: f64,
}

/// `I(A:C|B) = S_AB + S_BC - S_B - S_ABC`.
pub fn cmi(mmis: &Mmis, a: &RegionSpec, b: &RegionSpec, c: &RegionSpec) -> Result<CmiValue> {
    if !(a.is_disjoint(b) && b.is_disjoint(c) && a.is_disjoint(c)) {
        return Err(Error::InvalidRegion("overlapping regions".into()));
    }
    let spec = mmis.spec();
    let abc = a.union(b).union(c);
    if (spec.d() as u128).pow(abc.len() as u32) > DENSE_GUARD {
        return Err(Error::DimensionGuard {
            what: "conditional mutual information",
            dim: (spec.d() as u128).pow(abc.len() as u32),
            limit: DENSE_GUARD,
        });
    }
    let value = region_entropy(mmis, &a.union(b))? + region_entropy(mmis, &b.union(c))?
        - region_entropy(mmis, b)?
        - region_entropy(mmis, &abc)?;
    let log_l = (spec.sites() as f64).ln();
    Ok(CmiValue {
        value,
        log_l,
        ratio: value / log_l,
    })
}

/// The same combination for an arbitrary dense state, used as a baseline.
pub fn cmi_dense(
    rho: &DensityMatrix<f64>,
    spec: &RingSpec,
    a: &RegionSpec,
    b: &RegionSpec,
    c: &RegionSpec,
) -> Result<f64> {
    let s = |r: &RegionSpec| -> Result<f64> { Ok(reduced_density_dense(rho, spec, r)?.entropy()) };
    Ok(s(&a.union(b))? + s(&b.union(c))? - s(b)? - s(&a.union(b).union(c))?)
}

/// Region layout used for the CMI sweep: `A`, `B`, `C` consecutive,
/// covering the ring, with `|B| = L/2` and `|A| = floor(L/4)`.
pub fn cmi_layout(spec: &RingSpec) -> Result<(RegionSpec, RegionSpec, RegionSpec)> {
    let l = spec.sites();
    let nb = l / 2;
    let na = l / 4;
    let nc = l - nb - na;
    if na == 0 || nc == 0 || nb == 0 {
        return Err(Error::Precondition(format!("ring of {l} sites too small for the layout")));
    }
    Ok((
        RegionSpec::interval(1, na, spec)?,
        RegionSpec::interval(na + 1, nb, spec)?,
        RegionSpec::interval(na + nb + 1, nc, spec)?,
    ))
}

/// A random Hermitian operator on `n` levels with standard Gaussian entries.
pub fn random_hermitian<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> DenseOperator<f64> {
    use rand_distr::StandardNormal;
    let g = DenseOperator::<f64>::from_fn(n, n, |_, _| {
        Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    (&g + crate::linalg::dagger(&g)) * Complex::new(0.5, 0.0)
}

/// A uniformly random Pauli string that is charged: `sum a` or `sum b` is
/// nonzero mod `d`.
pub fn random_charged_pauli<R: rand::Rng + ?Sized>(spec: &RingSpec, rng: &mut R) -> PauliString {
    let d = spec.d();
    loop {
        let a: Vec<usize> = (0..spec.sites()).map(|_| rng.random_range(0..d)).collect();
        let b: Vec<usize> = (0..spec.sites()).map(|_| rng.random_range(0..d)).collect();
        if a.iter().sum::<usize>() % d != 0 || b.iter().sum::<usize>() % d != 0 {
            return PauliString::new(a, b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::pauli_string_matrix;
    use crate::linalg::{kron, max_abs_diff};
    use crate::mmis::mmis_density;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ring(l: usize, d: usize) -> RingSpec {
        RingSpec::new(l, d).unwrap()
    }

    /// `Tr[T^k (O_A x 1)]` from explicit dense matrices.
    fn dense_trace(k: usize, op: &DenseOperator<f64>, region: &RegionSpec, spec: &RingSpec) -> Complex<f64> {
        let l = spec.sites();
        let d = spec.d();
        // Build O_A x 1 with region sites placed correctly by permuting
        // the basis: full[(i, j)] nonzero iff rest digits agree.
        let n = spec.dim();
        let a = region.zero_based();
        let full = DenseOperator::<f64>::from_fn(n, n, |i, j| {
            let (di, dj) = (spec.digits(i), spec.digits(j));
            if (0..l).any(|s| !a.contains(&s) && di[s] != dj[s]) {
                return czero();
            }
            let r = a.iter().fold(0, |acc, &s| acc * d + di[s]);
            let c = a.iter().fold(0, |acc, &s| acc * d + dj[s]);
            op[(r, c)]
        });
        let t: DenseOperator<f64> = crate::lattice::translation_matrix(spec).unwrap();
        let tk = crate::lattice::matrix_power(&t, k);
        crate::linalg::trace(&(tk * full))
    }

    #[test]
    fn cycle_examples() {
        let spec = ring(6, 2);
        let r = RegionSpec::new(vec![1, 2], &spec).unwrap();
        let c0 = cycle_evaluation(0, &r, &spec);
        assert_eq!((c0.free_cycle_count, c0.is_identity()), (4, true));
        let c4 = cycle_evaluation(4, &r, &spec);
        assert_eq!((c4.prefactor, c4.is_identity()), (1, true));
        let c3 = cycle_evaluation(3, &r, &spec);
        assert_eq!((c3.prefactor, c3.is_identity()), (2, true));
        let s = RegionSpec::new(vec![3, 5], &spec).unwrap();
        let c2 = cycle_evaluation(2, &s, &spec);
        assert_eq!((c2.prefactor, c2.permutation.clone()), (2, vec![1, 0]));
    }

    #[test]
    fn cycle_trace_matches_both_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spec = ring(6, 2);
        for sites in [vec![1], vec![1, 2], vec![3, 5], vec![1, 3, 4]] {
            let r = RegionSpec::new(sites, &spec).unwrap();
            let op = random_hermitian(spec.d().pow(r.len() as u32), &mut rng);
            for k in 0..6 {
                let fast = trace_tk_oa(k, &op, &r, &spec).unwrap();
                let brute = trace_tk_oa_bruteforce(k, &op, &r, &spec).unwrap();
                let dense = dense_trace(k, &op, &r, &spec);
                assert!((fast - brute).norm() < 1e-10 && (fast - dense).norm() < 1e-10);
            }
        }
        let spec3 = ring(4, 3);
        let r = RegionSpec::new(vec![2, 4], &spec3).unwrap();
        let op = random_hermitian(9, &mut rng);
        for k in 0..4 {
            let fast = trace_tk_oa(k, &op, &r, &spec3).unwrap();
            assert!((fast - dense_trace(k, &op, &r, &spec3)).norm() < 1e-10);
        }
    }

    #[test]
    fn k_zero_is_plain_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let spec = ring(5, 2);
        let r = RegionSpec::new(vec![2, 5], &spec).unwrap();
        let op = random_hermitian(4, &mut rng);
        let v = trace_tk_oa(0, &op, &r, &spec).unwrap();
        assert!((v - crate::linalg::trace(&op) * 8.0).norm() < 1e-12);
    }

    #[test]
    fn two_point_values() {
        let m5 = Mmis::new(&ring(5, 2)).unwrap();
        let v = two_point_zz(&m5, 1, 3).unwrap();
        assert!((v.value - 0.2).abs() < 1e-12 && v.residual.unwrap() < 1e-12);
        assert_eq!(two_point_zz(&m5, 2, 2).unwrap().value, 1.0);
        let m3 = Mmis::new(&ring(3, 2)).unwrap();
        assert!((two_point_zz(&m3, 1, 2).unwrap().value - 1.0 / 3.0).abs() < 1e-12);
        let m6 = Mmis::new(&ring(6, 2)).unwrap();
        assert!(!two_point_zz(&m6, 1, 2).unwrap().closed_form_available);
    }

    #[test]
    fn two_point_matches_dense_trace() {
        let spec = ring(5, 3);
        let rho = mmis_density::<f64>(&spec).unwrap();
        let mmis = Mmis::new(&spec).unwrap();
        let mut ps = PauliString::identity(5);
        ps.b[0] = 1;
        ps.b[3] = 2;
        let op: DenseOperator<f64> = pauli_string_matrix(&ps, &spec).unwrap();
        let dense = rho.expectation(&op).re;
        assert!((two_point_zz(&mmis, 1, 4).unwrap().value - dense).abs() < 1e-12);
        assert!((dense - prime_closed_form(&spec)).abs() < 1e-12);
    }

    #[test]
    fn npoint_values() {
        let m5 = Mmis::new(&ring(5, 2)).unwrap();
        assert!((npoint_z(&m5, &[1, 1, 1, 1, 0]).unwrap().value - 0.2).abs() < 1e-12);
        assert!(npoint_z(&m5, &[1, 0, 0, 0, 0]).unwrap().value.abs() < 1e-12);
        assert!(npoint_z(&m5, &[0; 5]).is_err());
        let m7 = Mmis::new(&ring(7, 2)).unwrap();
        let v = npoint_z(&m7, &[1, 1, 0, 0, 0, 0, 0]).unwrap();
        assert!((v.value - 12.0 / 140.0).abs() < 1e-12);
    }

    #[test]
    fn charged_strings_vanish() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for spec in [ring(5, 2), ring(4, 3)] {
            let m = Mmis::new(&spec).unwrap();
            for _ in 0..20 {
                let ps = random_charged_pauli(&spec, &mut rng);
                assert!(expectation_pauli(&m, &ps).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn reduced_states() {
        for l in 2..=8 {
            let m = Mmis::new(&ring(l, 2)).unwrap();
            for s in 1..=l {
                let r = reduced_density(&m, &RegionSpec::new(vec![s], &m.spec()).unwrap()).unwrap();
                assert!(distance_to_maximally_mixed(&r) < 1e-12);
            }
        }
        let spec = ring(5, 2);
        let m = Mmis::new(&spec).unwrap();
        let full = reduced_density(&m, &RegionSpec::interval(1, 5, &spec).unwrap()).unwrap();
        assert!(max_abs_diff(full.matrix(), mmis_density::<f64>(&spec).unwrap().matrix()) < 1e-15);
    }

    #[test]
    fn bound_distance_decreases_with_complement() {
        // L = 6 -> 7 goes up for |A| = 2, 3; monotone from L = 7 on.
        for a in 2..=4 {
            let mut last = f64::INFINITY;
            for l in 7..=10 {
                let spec = ring(l, 2);
                let m = Mmis::new(&spec).unwrap();
                let b = region_bound_check(&m, &RegionSpec::interval(1, a, &spec).unwrap()).unwrap();
                assert!(b.distance <= last);
                last = b.distance;
            }
        }
    }

    #[test]
    fn cmi_contracts() {
        let spec = ring(6, 2);
        let m = Mmis::new(&spec).unwrap();
        let (a, b, c) = cmi_layout(&spec).unwrap();
        assert!(cmi(&m, &a, &a, &c).is_err());
        let v = cmi(&m, &a, &b, &c).unwrap();
        assert!(v.value > -1e-9);
        let mixed = DensityMatrix::<f64>::maximally_mixed(64);
        assert!(cmi_dense(&mixed, &spec, &a, &b, &c).unwrap().abs() < 1e-12);
        let rho = mmis_density::<f64>(&spec).unwrap();
        assert!((cmi_dense(&rho, &spec, &a, &b, &c).unwrap() - v.value).abs() < 1e-10);
        assert!(RegionSpec::new(vec![], &spec).is_err());
    }

    #[test]
    fn kron_sanity_for_region_ops() {
        let (x, z) = crate::lattice::clock_shift_matrices::<f64>(2).unwrap();
        let spec = ring(2, 2);
        let r = RegionSpec::new(vec![1, 2], &spec).unwrap();
        let v = trace_tk_oa(1, &kron(&x, &z), &r, &spec).unwrap();
        assert!((v - dense_trace(1, &kron(&x, &z), &r, &spec)).norm() < 1e-14);
    }
}
