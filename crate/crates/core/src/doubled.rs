//! The doubled state `|rho_T>>`, its reduced operator `R_A` on an interval
//! and its mirror, and operator-space entanglement.
//!
//! Doubled basis index: `ket * d^L + bra`, so `|rho>> = sum_ij rho_ij |i>|j>`.
//! `|T^n>> = d^{-L/2} sum_sigma |T^n sigma>|sigma>` pairs ket site `i + n`
//! with bra site `i`. Operators on `A Abar` use the index
//! `ket_A * d^|A| + bra_A`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{RingSpec, DENSE_GUARD};
use crate::linalg::{
    renyi_entropy, trace_norm, trace_product, uhlmann_fidelity, von_neumann_entropy, DenseOperator,
    DensityMatrix, SparseHermitian, UnionFind,
};
use crate::mmis::Mmis;
use crate::num::{abs2, conj, czero, Complex};

/// Largest doubled-space dimension that may be densified.
pub const DOUBLED_DENSE_GUARD: u128 = 1 << 24;

/// Unit vector in the `d^{2L}`-dimensional doubled space, stored sparsely.
#[derive(Debug, Clone)]
pub struct DoubledVector {
    spec: RingSpec,
    /// `(doubled index, amplitude)`, indices ascending and distinct.
    entries: Vec<(usize, Complex<f64>)>,
}

impl DoubledVector {
    /// Normalises and sorts the given amplitudes (summing repeats).
    pub fn from_entries(spec: &RingSpec, entries: impl IntoIterator<Item = (usize, Complex<f64>)>) -> Result<Self> {
        let mut map: BTreeMap<usize, Complex<f64>> = BTreeMap::new();
        for (i, z) in entries {
            *map.entry(i).or_insert_with(czero) += z;
        }
        let mut entries: Vec<(usize, Complex<f64>)> = map.into_iter().filter(|(_, z)| abs2(*z) > 0.0).collect();
        entries.sort_by_key(|e| e.0);
        let norm = entries.iter().map(|(_, z)| abs2(*z)).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Precondition("zero doubled vector".into()));
        }
        for e in &mut entries {
            e.1 /= norm;
        }
        Ok(DoubledVector { spec: *spec, entries })
    }

    /// Wraps already sorted, distinct entries without normalising.
    pub(crate) fn from_raw(spec: &RingSpec, entries: Vec<(usize, Complex<f64>)>) -> Self {
        DoubledVector { spec: *spec, entries }
    }

    /// `vec(rho) / ||rho||_F`.
    pub fn from_density(spec: &RingSpec, rho: &DensityMatrix<f64>) -> Result<Self> {
        let dim = spec.dim();
        let m = rho.matrix();
        if m.nrows() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                got: m.nrows(),
            });
        }
        let mut e = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                if abs2(m[(i, j)]) > 0.0 {
                    e.push((i * dim + j, m[(i, j)]));
                }
            }
        }
        Self::from_entries(spec, e)
    }

    pub fn spec(&self) -> RingSpec {
        self.spec
    }

    pub fn entries(&self) -> &[(usize, Complex<f64>)] {
        &self.entries
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, z)| abs2(*z)).sum::<f64>().sqrt()
    }

    pub fn get(&self, index: usize) -> Complex<f64> {
        match self.entries.binary_search_by_key(&index, |e| e.0) {
            Ok(p) => self.entries[p].1,
            Err(_) => czero(),
        }
    }

    /// `<<self|other>>`.
    pub fn inner(&self, other: &DoubledVector) -> Complex<f64> {
        let (mut i, mut j) = (0, 0);
        let mut acc = czero();
        while i < self.entries.len() && j < other.entries.len() {
            let (a, b) = (self.entries[i], other.entries[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += conj(a.1) * b.1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn to_dense(&self) -> Result<Vec<Complex<f64>>> {
        let dim = (self.spec.dim() as u128).pow(2);
        if dim > DOUBLED_DENSE_GUARD {
            return Err(Error::DimensionGuard {
                what: "dense doubled vector",
                dim,
                limit: DOUBLED_DENSE_GUARD,
            });
        }
        let mut v = vec![czero(); dim as usize];
        for &(i, z) in &self.entries {
            v[i] = z;
        }
        Ok(v)
    }

    /// Applies `f(ket, bra) -> factor` entrywise (diagonal operators on both
    /// copies).
    pub fn map_diagonal(&self, f: impl Fn(usize, usize) -> Complex<f64>) -> Vec<(usize, Complex<f64>)> {
        let dim = self.spec.dim();
        self.entries
            .iter()
            .map(|&(x, z)| (x, z * f(x / dim, x % dim)))
            .collect()
    }
}

/// Normalised `|rho_T>>`, assembled from the orbit structure.
pub fn doubled_state(spec: &RingSpec) -> Result<DoubledVector> {
    let mmis = Mmis::new(spec)?;
    let dim = spec.dim();
    let mut e = Vec::new();
    mmis.for_each_entry::<f64>(|i, j, v| e.push((i * dim + j, Complex::new(v, 0.0))));
    DoubledVector::from_entries(spec, e)
}

/// Normalised `|T^n>>`.
pub fn translation_doubled(spec: &RingSpec, n: i64) -> DoubledVector {
    let dim = spec.dim();
    let amp = Complex::new(1.0 / (dim as f64).sqrt(), 0.0);
    let mut entries: Vec<(usize, Complex<f64>)> = (0..dim)
        .map(|s| (spec.translate_index(s, n) * dim + s, amp))
        .collect();
    entries.sort_by_key(|e| e.0);
    DoubledVector { spec: *spec, entries }
}

/// `normalize(sum_n |T^n>>)`, an independent route to `|rho_T>>`.
pub fn doubled_state_from_translations(spec: &RingSpec) -> Result<DoubledVector> {
    let l = spec.sites() as i64;
    let e: Vec<(usize, Complex<f64>)> = (0..l)
        .flat_map(|n| translation_doubled(spec, n).entries)
        .collect();
    DoubledVector::from_entries(spec, e)
}

fn region_sites(spec: &RingSpec, sites: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; spec.sites()];
    for &s in sites {
        if s >= spec.sites() || mask[s] {
            return Err(Error::InvalidRegion(format!("site {s} invalid for L = {}", spec.sites())));
        }
        mask[s] = true;
    }
    let dim = (spec.d() as u128).pow(2 * sites.len() as u32);
    if dim > DENSE_GUARD {
        return Err(Error::DimensionGuard {
            what: "reduced doubled operator",
            dim,
            limit: DENSE_GUARD,
        });
    }
    Ok(mask)
}

/// Splits a doubled index into the `A Abar` index and the rest.
fn split_doubled(spec: &RingSpec, x: usize, sites: &[usize], mask: &[bool]) -> (usize, usize) {
    let dim = spec.dim();
    let d = spec.d();
    let (ket, bra) = (spec.digits(x / dim), spec.digits(x % dim));
    let mut r = 0;
    for &s in sites {
        r = r * d + ket[s];
    }
    for &s in sites {
        r = r * d + bra[s];
    }
    let mut c = 0;
    for s in 0..spec.sites() {
        if !mask[s] {
            c = c * d * d + ket[s] * d + bra[s];
        }
    }
    (r, c)
}

/// `Tr_{(A Abar)^c} |psi>><<phi|` on the (0-based) sites `sites`.
pub fn reduce_pair(psi: &DoubledVector, phi: &DoubledVector, sites: &[usize]) -> Result<DenseOperator<f64>> {
    let spec = psi.spec;
    let mask = region_sites(&spec, sites)?;
    let n = spec.d().pow(2 * sites.len() as u32);
    let mut groups: BTreeMap<usize, Vec<(usize, Complex<f64>)>> = BTreeMap::new();
    for &(x, z) in &phi.entries {
        let (r, c) = split_doubled(&spec, x, sites, &mask);
        groups.entry(c).or_default().push((r, z));
    }
    let mut out = DMatrix::from_element(n, n, czero());
    for &(x, z) in &psi.entries {
        let (r, c) = split_doubled(&spec, x, sites, &mask);
        if let Some(g) = groups.get(&c) {
            for &(r2, w) in g {
                out[(r, r2)] += z * conj(w);
            }
        }
    }
    Ok(out)
}

/// `R_A` of a doubled vector, kept sparse for the blocked eigensolver.
pub fn reduce_sparse(psi: &DoubledVector, sites: &[usize]) -> Result<SparseHermitian<f64>> {
    let spec = psi.spec;
    let mask = region_sites(&spec, sites)?;
    let n = spec.d().pow(2 * sites.len() as u32);
    let mut groups: BTreeMap<usize, Vec<(usize, Complex<f64>)>> = BTreeMap::new();
    for &(x, z) in &psi.entries {
        let (r, c) = split_doubled(&spec, x, sites, &mask);
        groups.entry(c).or_default().push((r, z));
    }
    let mut out = SparseHermitian::new(n);
    for g in groups.values() {
        for &(r, z) in g {
            for &(r2, w) in g {
                out.add(r, r2, z * conj(w));
            }
        }
    }
    Ok(out)
}

/// `R_A` on the interval of the first `size` sites.
pub fn ose_reduced(dv: &DoubledVector, size: usize) -> Result<DensityMatrix<f64>> {
    let sites: Vec<usize> = (0..size).collect();
    Ok(DensityMatrix::from_unchecked(reduce_sparse(dv, &sites)?.to_dense()))
}

/// Representative of `n mod L` in `(-L/2, L/2]`.
pub fn centered(n: i64, sites: usize) -> i64 {
    let l = sites as i64;
    let r = n.rem_euclid(l);
    if 2 * r > l {
        r - l
    } else {
        r
    }
}

/// Loop and leg structure of `R_{m,n}` on the first `size` sites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagram {
    pub loops: usize,
    /// Leg groups: each lists `(is_column, is_bra, position)` legs forced
    /// to carry the same value.
    #[serde(skip)]
    groups: Vec<Vec<(bool, bool, usize)>>,
}

/// Contracts `|T^m>><<T^n|` over `(A Abar)^c` symbolically: every traced
/// index identifies a ket variable with a bra variable; connected
/// components without an open leg are closed loops.
pub fn diagram(spec: &RingSpec, m: i64, n: i64, size: usize) -> Result<Diagram> {
    let l = spec.sites();
    if size == 0 || size > l {
        return Err(Error::InvalidRegion(format!("interval size {size} for L = {l}")));
    }
    let li = l as i64;
    let wrap = |x: i64| x.rem_euclid(li) as usize;
    // variables: sigma_j = j (from |T^m>>), tau_j = L + j (from <<T^n|)
    let mut uf = UnionFind::new(2 * l);
    for j in size..l {
        let ji = j as i64;
        uf.union(wrap(ji - m), l + wrap(ji - n));
        uf.union(j, l + j);
    }
    let mut legs = Vec::new();
    for a in 0..size {
        let ai = a as i64;
        legs.push(((false, false, a), wrap(ai - m)));
        legs.push(((false, true, a), a));
        legs.push(((true, false, a), l + wrap(ai - n)));
        legs.push(((true, true, a), l + a));
    }
    let mut by_root: BTreeMap<usize, Vec<(bool, bool, usize)>> = BTreeMap::new();
    let mut order = Vec::new();
    for (leg, var) in legs {
        let r = uf.find(var);
        by_root.entry(r).or_insert_with(|| {
            order.push(r);
            Vec::new()
        });
        by_root.get_mut(&r).unwrap().push(leg);
    }
    let roots: std::collections::BTreeSet<usize> = (0..2 * l).map(|v| uf.find(v)).collect();
    let loops = roots.iter().filter(|r| !by_root.contains_key(r)).count();
    Ok(Diagram {
        loops,
        groups: order.into_iter().map(|r| by_root.remove(&r).unwrap()).collect(),
    })
}

/// `R_{m,n}` from its diagram: entries `d^{-L + loops}` wherever the
/// legs of each group agree.
pub fn structured_rmn(spec: &RingSpec, m: i64, n: i64, size: usize) -> Result<DenseOperator<f64>> {
    region_sites(spec, &(0..size).collect::<Vec<_>>())?;
    let dg = diagram(spec, m, n, size)?;
    let d = spec.d();
    let dim = d.pow(2 * size as u32);
    let value = (d as f64).powi(dg.loops as i32 - spec.sites() as i32);
    let mut out = DMatrix::from_element(dim, dim, czero());
    let g = dg.groups.len();
    let mut ket_r = vec![0; size];
    let mut bra_r = vec![0; size];
    let mut ket_c = vec![0; size];
    let mut bra_c = vec![0; size];
    for assignment in 0..d.pow(g as u32) {
        let mut rem = assignment;
        for group in &dg.groups {
            let v = rem % d;
            rem /= d;
            for &(col, bra, a) in group {
                match (col, bra) {
                    (false, false) => ket_r[a] = v,
                    (false, true) => bra_r[a] = v,
                    (true, false) => ket_c[a] = v,
                    (true, true) => bra_c[a] = v,
                }
            }
        }
        let idx = |k: &[usize], b: &[usize]| k.iter().chain(b).fold(0, |acc, &x| acc * d + x);
        out[(idx(&ket_r, &bra_r), idx(&ket_c, &bra_c))] += Complex::new(value, 0.0);
    }
    Ok(out)
}

/// `R_{m,n}` by explicit partial trace of the sparse doubled vectors.
pub fn bruteforce_rmn(spec: &RingSpec, m: i64, n: i64, size: usize) -> Result<DenseOperator<f64>> {
    let sites: Vec<usize> = (0..size).collect();
    reduce_pair(&translation_doubled(spec, m), &translation_doubled(spec, n), &sites)
}

/// `d^{L} / (L^2 dim T)`, the squared normalisation of `sum_n |T^n>>`.
pub fn doubled_normalization(mmis: &Mmis) -> f64 {
    let spec = mmis.spec();
    let l = spec.sites() as f64;
    spec.dim() as f64 / (l * l * mmis.rank() as f64)
}

/// `R_A` reassembled as the normalised sum of all structured `R_{m,n}`.
pub fn reconstruct_ra(spec: &RingSpec, size: usize) -> Result<DenseOperator<f64>> {
    let mmis = Mmis::new(spec)?;
    let l = spec.sites() as i64;
    let mut acc: Option<DenseOperator<f64>> = None;
    for m in 0..l {
        for n in 0..l {
            let r = structured_rmn(spec, m, n, size)?;
            acc = Some(match acc {
                None => r,
                Some(a) => a + r,
            });
        }
    }
    Ok(acc.expect("L >= 1") * Complex::new(doubled_normalization(&mmis), 0.0))
}

fn check_size(spec: &RingSpec, size: usize) -> Result<()> {
    if size == 0 {
        return Err(Error::Precondition("|A| = 0".into()));
    }
    if 2 * size > spec.sites() {
        return Err(Error::Precondition(format!(
            "|A| = {size} exceeds L/2 for L = {}",
            spec.sites()
        )));
    }
    Ok(())
}

/// Diagonal block `R_n = R_{n,n}`.
pub fn diagonal_block_rn(spec: &RingSpec, n: i64, size: usize) -> Result<DenseOperator<f64>> {
    check_size(spec, size)?;
    structured_rmn(spec, n, n, size)
}

/// Predicted `Tr R_n^alpha`: `d^{-2|n|(alpha - 1)}` for `|n| < |A|`,
/// `d^{-2|A|(alpha - 1)}` otherwise.
pub fn rn_power_trace_predicted(spec: &RingSpec, n: i64, size: usize, alpha: f64) -> f64 {
    let k = (centered(n, spec.sites()).unsigned_abs() as usize).min(size);
    (spec.d() as f64).powf(-2.0 * k as f64 * (alpha - 1.0))
}

/// `||R_{m,n}||_1`, `m != n`.
pub fn offdiag_trace_norm(spec: &RingSpec, m: i64, n: i64, size: usize) -> Result<f64> {
    if size == 0 {
        return Err(Error::Precondition("|A| = 0".into()));
    }
    if (m - n).rem_euclid(spec.sites() as i64) == 0 {
        return Err(Error::Precondition("m = n is a diagonal block".into()));
    }
    Ok(trace_norm(&structured_rmn(spec, m, n, size)?))
}

/// `Tr[R_m R_n]`.
pub fn hs_overlap(spec: &RingSpec, m: i64, n: i64, size: usize) -> Result<f64> {
    check_size(spec, size)?;
    let a = structured_rmn(spec, m, m, size)?;
    let b = structured_rmn(spec, n, n, size)?;
    Ok(trace_product(&a, &b).re)
}

/// Uhlmann fidelity (non-squared) between `R_m` and `R_n`.
pub fn block_fidelity(spec: &RingSpec, m: i64, n: i64, size: usize) -> Result<f64> {
    check_size(spec, size)?;
    let a = structured_rmn(spec, m, m, size)?;
    let b = structured_rmn(spec, n, n, size)?;
    uhlmann_fidelity(&a, &b)
}

/// `p_{m,n} = min(|A| mod |m - n|, |m - n| - (|A| mod |m - n|))`.
pub fn p_mn(m: i64, n: i64, size: usize) -> usize {
    let diff = (m - n).unsigned_abs() as usize;
    let r = size % diff;
    r.min(diff - r)
}

/// `d^{-|A| + min(|A|, |m|, |n|, p_{m,n})}` with `m, n` taken as given
/// (not reduced mod `L`). Agrees with [`block_fidelity`] whenever
/// `m n <= 0`; same-sign pairs sit on [`block_fidelity_bound`] instead.
pub fn block_fidelity_formula(spec: &RingSpec, m: i64, n: i64, size: usize) -> f64 {
    if m == n {
        return 1.0;
    }
    let e = size
        .min(m.unsigned_abs() as usize)
        .min(n.unsigned_abs() as usize)
        .min(p_mn(m, n, size));
    (spec.d() as f64).powi(e as i32 - size as i32)
}

/// `d^{-|A| + min(|A|, |m|, |n|)}`.
pub fn block_fidelity_bound(spec: &RingSpec, m: i64, n: i64, size: usize) -> f64 {
    let e = size.min(m.unsigned_abs() as usize).min(n.unsigned_abs() as usize);
    (spec.d() as f64).powi(e as i32 - size as i32)
}

#[derive(Debug, Clone, Serialize)]
pub struct OseSpectrum {
    pub region_size: usize,
    pub eigenvalues: Vec<f64>,
    pub renyi: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OseRow {
    pub region_size: usize,
    pub alpha: f64,
    pub numeric: f64,
    pub predicted: f64,
    pub deviation: f64,
}

/// Predicted operator-space entropy of order `alpha`.
pub fn ose_predicted(spec: &RingSpec, size: usize, alpha: f64) -> f64 {
    let l = spec.sites() as f64;
    let ld = (spec.d() as f64).ln();
    let a = size as f64;
    if size == 0 {
        return 0.0;
    }
    if (alpha - 1.0).abs() < 1e-12 {
        2.0 * a * (1.0 - a / l) * ld + (2.0 * a / l) * l.ln()
    } else if alpha > 1.0 {
        let q = (spec.d() as f64).powf(-2.0 * (alpha - 1.0));
        alpha / (alpha - 1.0) * l.ln() - ((1.0 + q) / (1.0 - q)).ln() / (alpha - 1.0)
    } else {
        2.0 * a.min(l - a) * ld
    }
}

/// Spectrum of `R_A` for the interval of the first `size` sites.
pub fn ose_spectrum(dv: &DoubledVector, size: usize, alphas: &[f64]) -> Result<OseSpectrum> {
    let eigenvalues = if size == 0 {
        vec![1.0]
    } else {
        reduce_sparse(dv, &(0..size).collect::<Vec<_>>())?.eigenvalues()
    };
    let renyi = alphas
        .iter()
        .map(|&a| {
            let s = if (a - 1.0).abs() < 1e-12 {
                von_neumann_entropy(&eigenvalues)
            } else {
                renyi_entropy(&eigenvalues, a)
            };
            (a, s)
        })
        .collect();
    Ok(OseSpectrum {
        region_size: size,
        eigenvalues,
        renyi,
    })
}

/// Numeric and predicted entropies for every `(|A|, alpha)` pair.
pub fn ose_entropy_scan(spec: &RingSpec, alphas: &[f64], sizes: &[usize]) -> Result<(Vec<OseSpectrum>, Vec<OseRow>)> {
    let dv = doubled_state(spec)?;
    let mut spectra = Vec::new();
    let mut rows = Vec::new();
    for &size in sizes {
        let sp = ose_spectrum(&dv, size, alphas)?;
        for &(alpha, numeric) in &sp.renyi {
            let predicted = ose_predicted(spec, size, alpha);
            rows.push(OseRow {
                region_size: size,
                alpha,
                numeric,
                predicted,
                deviation: (numeric - predicted).abs(),
            });
        }
        spectra.push(sp);
    }
    Ok((spectra, rows))
}

/// Slope and intercept of the least-squares line through `(x, y)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

/// Fits `S_1 - (2|A|/L) log L` against `2|A|(1 - |A|/L) log d` over the
/// given sizes; returns `(slope, intercept, r^2)`.
pub fn volume_law_fit(spec: &RingSpec, rows: &[OseRow]) -> (f64, f64, f64) {
    let l = spec.sites() as f64;
    let ld = (spec.d() as f64).ln();
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| (r.alpha - 1.0).abs() < 1e-12)
        .map(|r| {
            let a = r.region_size as f64;
            (2.0 * a * (1.0 - a / l) * ld, r.numeric - 2.0 * a / l * l.ln())
        })
        .unzip();
    linear_fit(&x, &y)
}
