//! Charged momentum operators and Renyi-2 correlators of `rho_T`.
//!
//! Every operator here is diagonal in the computational basis, so the
//! trace form is evaluated with sparse operator products and the doubled
//! form elementwise on `|rho>>`; the two share no arithmetic beyond the
//! diagonal itself.

use std::f64::consts::PI;

use serde::Serialize;

use crate::doubled::{DoubledVector, DOUBLED_DENSE_GUARD};
use crate::error::{Error, Result};
use crate::lattice::RingSpec;
use crate::linalg::{DenseOperator, SparseOperator};
use crate::mmis::Mmis;
use crate::num::{cone, czero, is_prime, phase, root_of_unity, Complex};

/// `O_q = (1/L) sum_x e^{iqx} Z_x` with `q = 2 pi n / L`, sites 0-based.
#[derive(Debug, Clone)]
pub struct MomentumOperator {
    spec: RingSpec,
    n: usize,
    diag: Vec<Complex<f64>>,
}

impl MomentumOperator {
    pub fn new(spec: &RingSpec, n: usize) -> Result<Self> {
        let l = spec.sites();
        if n >= l {
            return Err(Error::Precondition(format!("momentum index {n} not in [0, {l})")));
        }
        spec.guard("momentum operator", DOUBLED_DENSE_GUARD)?;
        let d = spec.d() as u64;
        let phases: Vec<Complex<f64>> = (0..l).map(|x| root_of_unity((n * x) as i64, l as u64)).collect();
        let omegas: Vec<Complex<f64>> = (0..spec.d()).map(|q| root_of_unity(q as i64, d)).collect();
        let diag = (0..spec.dim())
            .map(|idx| {
                let mut acc: Complex<f64> = czero();
                for (x, &ph) in phases.iter().enumerate() {
                    acc += ph * omegas[spec.digit(idx, x)];
                }
                acc / l as f64
            })
            .collect();
        Ok(MomentumOperator { spec: *spec, n, diag })
    }

    pub fn momentum(&self) -> f64 {
        2.0 * PI * self.n as f64 / self.spec.sites() as f64
    }

    pub fn index(&self) -> usize {
        self.n
    }

    pub fn diagonal(&self) -> &[Complex<f64>] {
        &self.diag
    }

    /// `O_{-q}`.
    pub fn opposite(&self) -> Result<Self> {
        let l = self.spec.sites();
        Self::new(&self.spec, (l - self.n) % l)
    }

    pub fn sparse(&self) -> SparseOperator<f64> {
        diagonal_sparse(&self.diag)
    }

    pub fn to_dense(&self) -> Result<DenseOperator<f64>> {
        self.spec.dense_guard()?;
        Ok(self.sparse().to_dense())
    }

    /// `max |<s| T^dag O_q T - e^{iq} O_q |s>|`.
    pub fn charge_residual(&self) -> f64 {
        let ph = phase(self.momentum());
        (0..self.spec.dim())
            .map(|i| (self.diag[self.spec.translate_index(i, 1)] - ph * self.diag[i]).norm())
            .fold(0.0, f64::max)
    }
}

fn diagonal_sparse(diag: &[Complex<f64>]) -> SparseOperator<f64> {
    let mut m = SparseOperator::zeros(diag.len(), diag.len());
    for (i, &z) in diag.iter().enumerate() {
        if z != czero() {
            m.add(i, i, z);
        }
    }
    m
}

/// `O_q O_{-q}` as a diagonal.
pub fn charged_pair(spec: &RingSpec, n: usize) -> Result<Vec<Complex<f64>>> {
    let o = MomentumOperator::new(spec, n)?;
    let ob = o.opposite()?;
    Ok(o.diag.iter().zip(&ob.diag).map(|(a, b)| a * b).collect())
}

/// `rho_T` as a sparse operator.
pub fn mmis_sparse(spec: &RingSpec) -> Result<SparseOperator<f64>> {
    spec.guard("sparse MMIS", DOUBLED_DENSE_GUARD)?;
    let mmis = Mmis::new(spec)?;
    let mut rho = SparseOperator::zeros(spec.dim(), spec.dim());
    mmis.for_each_entry::<f64>(|i, j, v| rho.add(i, j, Complex::new(v, 0.0)));
    Ok(rho)
}

fn sparse_trace(m: &SparseOperator<f64>) -> Complex<f64> {
    let mut acc = czero();
    for i in 0..m.shape().0 {
        for &(j, z) in m.row(i) {
            if j == i {
                acc += z;
            }
        }
    }
    acc
}

/// `Tr[rho A rho B]` for diagonal `A`, `B`, through operator products.
fn sandwich_trace(rho: &SparseOperator<f64>, a: &[Complex<f64>], b: &[Complex<f64>]) -> Complex<f64> {
    let ra = rho.mul_sparse(&diagonal_sparse(a));
    let rb = rho.mul_sparse(&diagonal_sparse(b));
    sparse_trace(&ra.mul_sparse(&rb))
}

fn doubled_of(spec: &RingSpec, rho: &SparseOperator<f64>) -> Result<DoubledVector> {
    let dim = spec.dim();
    let mut e = Vec::with_capacity(rho.nnz());
    for i in 0..dim {
        for &(j, z) in rho.row(i) {
            e.push((i * dim + j, z));
        }
    }
    DoubledVector::from_entries(spec, e)
}

/// `<<v| (A (x) B) |v>>` with `A` on the ket copy and `B` on the bra copy.
fn doubled_expectation(v: &DoubledVector, a: &[Complex<f64>], b: &[Complex<f64>]) -> Complex<f64> {
    let applied = v.map_diagonal(|i, j| a[i] * b[j]);
    let w = DoubledVector::from_raw(&v.spec(), applied);
    v.inner(&w)
}

/// Which arithmetic produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Route {
    Trace,
    Doubled,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalCorrelator {
    pub sites: usize,
    pub i: usize,
    pub j: usize,
    pub value: f64,
    /// Exact prime-`L` expression, when `L` is prime and `d = 2`.
    pub closed_form: Option<f64>,
    /// `1/L - 1/L^2`.
    pub leading: f64,
    pub brute_force_only: bool,
}

fn z_diag(spec: &RingSpec, site: usize, power: i64) -> Vec<Complex<f64>> {
    let d = spec.d() as u64;
    (0..spec.dim())
        .map(|idx| root_of_unity(power * spec.digit(idx, site) as i64, d))
        .collect()
}

/// Connected correlator
/// `Tr[rho Z_i Z_j^-1 rho (Z_i Z_j^-1)^dag]/Tr rho^2 - prod_s Tr[rho Z_s rho Z_s^dag]/Tr rho^2`
/// for 1-based `i != j`.
pub fn renyi2_local(spec: &RingSpec, i: usize, j: usize) -> Result<LocalCorrelator> {
    let l = spec.sites();
    if i == j || i == 0 || j == 0 || i > l || j > l {
        return Err(Error::Precondition(format!("sites ({i}, {j}) must be distinct and in 1..={l}")));
    }
    let rho = mmis_sparse(spec)?;
    let ones = vec![cone(); spec.dim()];
    let purity = sandwich_trace(&rho, &ones, &ones).re;
    let (zi, zj) = (z_diag(spec, i - 1, 1), z_diag(spec, j - 1, 1));
    let (zid, zjd) = (z_diag(spec, i - 1, -1), z_diag(spec, j - 1, -1));
    let pair: Vec<_> = zi.iter().zip(&zjd).map(|(a, b)| a * b).collect();
    let pair_dag: Vec<_> = zid.iter().zip(&zj).map(|(a, b)| a * b).collect();
    let two = sandwich_trace(&rho, &pair, &pair_dag).re / purity;
    let one_i = sandwich_trace(&rho, &zi, &zid).re / purity;
    let one_j = sandwich_trace(&rho, &zj, &zjd).re / purity;
    let closed_form = (is_prime(l) && spec.d() == 2).then(|| renyi2_local_closed_form(l));
    let lf = l as f64;
    Ok(LocalCorrelator {
        sites: l,
        i,
        j,
        value: two - one_i * one_j,
        closed_form,
        leading: 1.0 / lf - 1.0 / (lf * lf),
        brute_force_only: closed_form.is_none(),
    })
}

/// `a - a^2` with `a = (2^L + 2L(L-1)) / (L 2^L + 2L(L-1))`, prime `L`, `d = 2`.
pub fn renyi2_local_closed_form(sites: usize) -> f64 {
    let l = sites as f64;
    let p = 2f64.powi(sites as i32);
    let a = (p + 2.0 * l * (l - 1.0)) / (l * p + 2.0 * l * (l - 1.0));
    a - a * a
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentumCorrelator {
    pub sites: usize,
    pub n: usize,
    pub q: f64,
    /// `Tr[rho M rho M] / Tr rho^2` with `M = O_q O_{-q}`.
    pub renyi2: f64,
    /// `Tr[rho M rho M] / sqrt(Tr rho^2 Tr[(M rho M)^2])`.
    pub normalized: f64,
    /// `(2 + delta_{q,pi}) / L^2`.
    pub leading: f64,
}

fn check_charged(spec: &RingSpec, n: usize) -> Result<()> {
    let l = spec.sites();
    if n % l == 0 {
        return Err(Error::Precondition("q = 0 is uncharged".into()));
    }
    if n >= l {
        return Err(Error::Precondition(format!("momentum index {n} not in [0, {l})")));
    }
    Ok(())
}

fn leading_momentum(sites: usize, n: usize) -> f64 {
    let pi_term = if 2 * n == sites { 1.0 } else { 0.0 };
    (2.0 + pi_term) / (sites * sites) as f64
}

/// Both momentum correlators of an arbitrary sparse density matrix.
pub fn momentum_correlators(
    spec: &RingSpec,
    rho: &SparseOperator<f64>,
    n: usize,
    route: Route,
) -> Result<MomentumCorrelator> {
    check_charged(spec, n)?;
    let m = charged_pair(spec, n)?;
    let m2: Vec<_> = m.iter().map(|z| z * z).collect();
    let ones = vec![cone(); spec.dim()];
    let (num, purity, inserted) = match route {
        Route::Trace => {
            let num = sandwich_trace(rho, &m, &m);
            let purity = sandwich_trace(rho, &ones, &ones);
            let mrm = diagonal_sparse(&m).mul_sparse(rho).mul_sparse(&diagonal_sparse(&m));
            let inserted = sparse_trace(&mrm.mul_sparse(&mrm));
            (num.re, purity.re, inserted.re)
        }
        Route::Doubled => {
            let v = doubled_of(spec, rho)?;
            let num = doubled_expectation(&v, &m, &m);
            let inserted = doubled_expectation(&v, &m2, &m2);
            (num.re, v.inner(&v).re, inserted.re)
        }
    };
    let denom = (purity * inserted).sqrt();
    // |M| <= 1, so Tr[(M rho M)^2] <= Tr rho^2; anything this far below is rounding.
    if !(inserted > 1e-20 * purity) {
        return Err(Error::Precondition(format!(
            "variance normalisation underflow (denominator {denom:e})"
        )));
    }
    Ok(MomentumCorrelator {
        sites: spec.sites(),
        n,
        q: 2.0 * PI * n as f64 / spec.sites() as f64,
        renyi2: num / purity,
        normalized: num / denom,
        leading: leading_momentum(spec.sites(), n),
    })
}

/// Exact `R_q` of `rho_T` for prime `L > 2`, `d = 2`, any `q != 0`:
/// `2 (L-1) 2^L / (L^3 (2^L + 2(L-1)))`.
pub fn renyi2_momentum_closed_form(sites: usize) -> f64 {
    let l = sites as f64;
    let p = 2f64.powi(sites as i32);
    2.0 * (l - 1.0) * p / (l * l * l * (p + 2.0 * (l - 1.0)))
}

/// `R_q` of `rho_T` for `q = 2 pi n / L`, `n != 0`.
pub fn renyi2_momentum(spec: &RingSpec, n: usize) -> Result<f64> {
    Ok(momentum_correlators(spec, &mmis_sparse(spec)?, n, Route::Trace)?.renyi2)
}

/// Variance-normalised `R~_q` of `rho_T`.
pub fn variance_normalized_renyi2(spec: &RingSpec, n: usize, route: Route) -> Result<f64> {
    Ok(momentum_correlators(spec, &mmis_sparse(spec)?, n, route)?.normalized)
}

/// `|0...0><0...0|`, the contrast state.
pub fn product_state(spec: &RingSpec) -> SparseOperator<f64> {
    let mut rho = SparseOperator::zeros(spec.dim(), spec.dim());
    rho.add(0, 0, cone());
    rho
}

#[derive(Debug, Clone, Serialize)]
pub struct SwssbRow {
    pub sites: usize,
    pub local: f64,
    pub local_closed_form: Option<f64>,
    pub local_leading: f64,
    pub momentum: f64,
    pub momentum_leading: f64,
    pub normalized_trace: f64,
    pub normalized_doubled: f64,
    pub route_gap: f64,
    pub charge_residual: f64,
}

/// One row per ring length: sites `(1, 2)` for the local correlator and
/// `n = 1` for the momentum ones.
pub fn swssb_sweep(lengths: &[usize], d: usize) -> Result<Vec<SwssbRow>> {
    lengths
        .iter()
        .map(|&l| {
            let spec = RingSpec::new(l, d)?;
            let rho = mmis_sparse(&spec)?;
            let local = renyi2_local(&spec, 1, 2)?;
            let t = momentum_correlators(&spec, &rho, 1, Route::Trace)?;
            let dv = momentum_correlators(&spec, &rho, 1, Route::Doubled)?;
            let charge = (0..l)
                .map(|n| MomentumOperator::new(&spec, n).map(|o| o.charge_residual()))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(SwssbRow {
                sites: l,
                local: local.value,
                local_closed_form: local.closed_form,
                local_leading: local.leading,
                momentum: t.renyi2,
                momentum_leading: t.leading,
                normalized_trace: t.normalized,
                normalized_doubled: dv.normalized,
                route_gap: (t.normalized - dv.normalized)
                    .abs()
                    .max((t.renyi2 - dv.renyi2).abs()),
                charge_residual: charge,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{pauli_string_matrix, translation_matrix, PauliString};
    use crate::linalg::{dagger, identity, max_abs_diff, trace};
    use crate::mmis::mmis_density;

    fn ring(l: usize) -> RingSpec {
        RingSpec::new(l, 2).unwrap()
    }

    #[test]
    fn momentum_operator_matches_pauli_sum() {
        for d in [2, 3] {
            let spec = RingSpec::new(4, d).unwrap();
            let o = MomentumOperator::new(&spec, 1).unwrap();
            let mut want = identity::<f64>(spec.dim()) * czero();
            for x in 0..4 {
                let z = pauli_string_matrix::<f64>(&PauliString::z_at(4, x, 1), &spec).unwrap();
                want += z * (root_of_unity::<f64>(x as i64, 4) / 4.0);
            }
            assert!(max_abs_diff(&o.to_dense().unwrap(), &want) < 1e-14);
        }
    }

    #[test]
    fn charge_relation() {
        for l in [3, 4, 5] {
            let spec = ring(l);
            let t = translation_matrix::<f64>(&spec).unwrap();
            for n in 0..l {
                let o = MomentumOperator::new(&spec, n).unwrap();
                assert!(o.charge_residual() < 1e-12);
                let od = o.to_dense().unwrap();
                let lhs = dagger(&t) * &od * &t;
                assert!(max_abs_diff(&lhs, &(od * phase(o.momentum()))) < 1e-12);
            }
        }
    }

    #[test]
    fn local_against_dense_oracle() {
        for l in [4, 5] {
            let spec = ring(l);
            let rho = mmis_density::<f64>(&spec).unwrap().into_matrix();
            let z = |s| pauli_string_matrix::<f64>(&PauliString::z_at(l, s, 1), &spec).unwrap();
            let p = trace(&(&rho * &rho)).re;
            let zz = z(0) * z(2);
            let two = trace(&(&rho * &zz * &rho * &zz)).re / p;
            let one = trace(&(&rho * z(0) * &rho * z(0))).re / p;
            let got = renyi2_local(&spec, 1, 3).unwrap();
            assert!((got.value - (two - one * one)).abs() < 1e-12);
            assert_eq!(got.brute_force_only, l == 4);
        }
        let g = renyi2_local(&ring(5), 2, 4).unwrap();
        assert!((g.value - g.closed_form.unwrap()).abs() < 1e-12);
        assert!((g.value - 0.16).abs() < 2f64.powi(-5) * 125.0);
        let g7 = renyi2_local(&ring(7), 1, 5).unwrap();
        assert!((g7.value - g7.closed_form.unwrap()).abs() < 1e-12);
        assert!(renyi2_local(&ring(5), 2, 2).is_err());
    }

    #[test]
    fn momentum_routes_agree() {
        for l in [3, 5, 6] {
            let spec = ring(l);
            let rho = mmis_sparse(&spec).unwrap();
            for n in 1..l {
                let a = momentum_correlators(&spec, &rho, n, Route::Trace).unwrap();
                let b = momentum_correlators(&spec, &rho, n, Route::Doubled).unwrap();
                assert!((a.renyi2 - b.renyi2).abs() < 1e-10);
                assert!((a.normalized - b.normalized).abs() < 1e-10);
                assert!(a.normalized > 0.0 && a.normalized <= 1.0 + 1e-12);
            }
        }
        assert!(renyi2_momentum(&ring(5), 0).is_err());
    }

    #[test]
    fn momentum_against_dense_oracle() {
        let spec = ring(5);
        let rho = mmis_density::<f64>(&spec).unwrap().into_matrix();
        let o = MomentumOperator::new(&spec, 2).unwrap().to_dense().unwrap();
        let ob = MomentumOperator::new(&spec, 3).unwrap().to_dense().unwrap();
        let m = &o * &ob;
        let p = trace(&(&rho * &rho)).re;
        let num = trace(&(&rho * &m * &rho * &m)).re;
        let mrm = &m * &rho * &m;
        let ins = trace(&(&mrm * &mrm)).re;
        assert!((renyi2_momentum(&spec, 2).unwrap() - num / p).abs() < 1e-12);
        let nr = variance_normalized_renyi2(&spec, 2, Route::Doubled).unwrap();
        assert!((nr - num / (p * ins).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn momentum_closed_form() {
        for l in [3, 5, 7, 11] {
            let spec = ring(l);
            for n in 1..l {
                let v = renyi2_momentum(&spec, n).unwrap();
                assert!((v - renyi2_momentum_closed_form(l)).abs() < 1e-13, "L={l} n={n}");
            }
        }
        assert!((renyi2_momentum_closed_form(5) - 0.0512).abs() < 1e-15);
    }

    #[test]
    fn product_state_has_no_normalization() {
        let spec = ring(5);
        let r = momentum_correlators(&spec, &product_state(&spec), 1, Route::Trace);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn momentum_grid_excludes_pi_for_odd_rings() {
        for l in [3, 5, 7, 11] {
            assert!((1..l).all(|n| 2 * n != l));
        }
        assert!((leading_momentum(4, 2) - 3.0 / 16.0).abs() < 1e-15);
    }
}
