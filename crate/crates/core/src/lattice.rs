//! Qudit rings: basis strings, the cyclic shift, orbits, clock and shift
//! operators.
//!
//! Basis index convention: site 1 (digit 0 of a [`BasisString`]) is the
//! most significant digit, so lexicographic order on strings is numeric
//! order on indices.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{kron, DenseOperator, SparseOperator};
use crate::num::{cone, czero, root_of_unity, Complex, Real};

/// Largest Hilbert-space dimension any ring may have.
pub const HILBERT_GUARD: u128 = 1 << 31;
/// Largest dimension for which dense `d^L x d^L` matrices are built.
pub const DENSE_GUARD: u128 = 4096;

/// `base^exp` in 128 bits, `None` on overflow.
pub fn checked_pow(base: usize, exp: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base as u128)?;
    }
    Some(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RingSpec {
    sites: usize,
    d: usize,
}

impl RingSpec {
    pub fn new(sites: usize, d: usize) -> Result<Self> {
        if sites < 1 || d < 2 {
            return Err(Error::InvalidRing { sites, d });
        }
        let dim = checked_pow(d, sites).unwrap_or(u128::MAX);
        if dim > HILBERT_GUARD {
            return Err(Error::DimensionGuard {
                what: "Hilbert space",
                dim,
                limit: HILBERT_GUARD,
            });
        }
        Ok(RingSpec { sites, d })
    }

    /// Number of sites `L`.
    pub fn sites(&self) -> usize {
        self.sites
    }

    /// On-site dimension `d`.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.d.pow(self.sites as u32)
    }

    /// Errors unless `d^L` is at most `limit`.
    pub fn guard(&self, what: &'static str, limit: u128) -> Result<()> {
        let dim = self.dim() as u128;
        if dim > limit {
            return Err(Error::DimensionGuard { what, dim, limit });
        }
        Ok(())
    }

    pub fn dense_guard(&self) -> Result<()> {
        self.guard("dense operator", DENSE_GUARD)
    }

    /// `d^(L-1)`, the place value of site 1.
    fn top(&self) -> usize {
        self.d.pow(self.sites as u32 - 1)
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.sites];
        let mut rem = index;
        for s in (0..self.sites).rev() {
            out[s] = rem % self.d;
            rem /= self.d;
        }
        out
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &x| acc * self.d + x)
    }

    /// Digit of site `site` (0-based) in basis state `index`.
    pub fn digit(&self, index: usize, site: usize) -> usize {
        (index / self.d.pow((self.sites - 1 - site) as u32)) % self.d
    }

    /// Index of `translate(s, 1)`: the last digit moves to the front.
    #[inline]
    pub fn shift_index(&self, index: usize) -> usize {
        (index % self.d) * self.top() + index / self.d
    }

    /// Index of `translate(s, n)` for any integer `n`.
    pub fn translate_index(&self, index: usize, n: i64) -> usize {
        let l = self.sites as i64;
        let n = n.rem_euclid(l) as u32;
        if n == 0 {
            return index;
        }
        // Right rotation by n digits: the low n digits move to the top.
        let low = self.d.pow(n);
        let high = self.d.pow(self.sites as u32 - n);
        (index % low) * high + index / low
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct BasisString {
    digits: Vec<usize>,
    index: usize,
    d: usize,
}

impl BasisString {
    pub fn from_digits(spec: &RingSpec, digits: Vec<usize>) -> Result<Self> {
        if digits.len() != spec.sites() {
            return Err(Error::LengthMismatch {
                expected: spec.sites(),
                got: digits.len(),
            });
        }
        if let Some(&bad) = digits.iter().find(|&&x| x >= spec.d()) {
            return Err(Error::Precondition(format!("digit {bad} not below d = {}", spec.d())));
        }
        let index = spec.index(&digits);
        Ok(BasisString {
            digits,
            index,
            d: spec.d(),
        })
    }

    pub fn from_index(spec: &RingSpec, index: usize) -> Result<Self> {
        if index >= spec.dim() {
            return Err(Error::Precondition(format!("index {index} out of range")));
        }
        Ok(BasisString {
            digits: spec.digits(index),
            index,
            d: spec.d(),
        })
    }

    pub fn digits(&self) -> &[usize] {
        &self.digits
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Smallest `p >= 1` with `translate(s, p) = s`; always divides `L`.
    pub fn period(&self) -> usize {
        let l = self.digits.len();
        (1..=l)
            .find(|&p| l % p == 0 && (0..l).all(|i| self.digits[i] == self.digits[(i + p) % l]))
            .unwrap_or(l)
    }
}

/// Cyclic shift by `n` sites: `translate(s, n)[i] = s[i - n mod L]`, so
/// `[0, 1, 0]` shifted once is `[0, 0, 1]`.
pub fn translate(s: &BasisString, n: i64) -> BasisString {
    let l = s.digits.len();
    if l == 0 {
        return s.clone();
    }
    let n = n.rem_euclid(l as i64) as usize;
    let digits: Vec<usize> = (0..l).map(|i| s.digits[(i + l - n) % l]).collect();
    let index = digits.iter().fold(0, |acc, &x| acc * s.d + x);
    BasisString { digits, index, d: s.d }
}

/// Orbits of the cyclic shift on all `d^L` basis strings.
#[derive(Debug, Clone)]
pub struct OrbitTable {
    spec: RingSpec,
    representatives: Vec<usize>,
    periods: Vec<usize>,
    orbit_of: Vec<u32>,
}

impl OrbitTable {
    pub fn spec(&self) -> RingSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    /// Index of the lexicographically smallest string of each orbit,
    /// ascending.
    pub fn representative_indices(&self) -> &[usize] {
        &self.representatives
    }

    pub fn representatives(&self) -> Vec<BasisString> {
        self.representatives
            .iter()
            .map(|&i| BasisString {
                digits: self.spec.digits(i),
                index: i,
                d: self.spec.d(),
            })
            .collect()
    }

    pub fn periods(&self) -> &[usize] {
        &self.periods
    }

    /// Orbit number of basis index `index`.
    pub fn orbit_of(&self, index: usize) -> usize {
        self.orbit_of[index] as usize
    }

    /// Members of orbit `k` in shift order `r, T r, T^2 r, ...`.
    pub fn members(&self, k: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.periods[k]);
        let mut idx = self.representatives[k];
        for _ in 0..self.periods[k] {
            out.push(idx);
            idx = self.spec.shift_index(idx);
        }
        out
    }
}

pub fn orbit_decomposition(spec: &RingSpec) -> Result<OrbitTable> {
    spec.guard("orbit table", HILBERT_GUARD)?;
    let dim = spec.dim();
    let mut orbit_of = vec![u32::MAX; dim];
    let mut representatives = Vec::new();
    let mut periods = Vec::new();
    for idx in 0..dim {
        if orbit_of[idx] != u32::MAX {
            continue;
        }
        // Every smaller index is already assigned, so idx is the minimum.
        let k = representatives.len() as u32;
        let mut cur = idx;
        let mut p = 0;
        loop {
            orbit_of[cur] = k;
            p += 1;
            cur = spec.shift_index(cur);
            if cur == idx {
                break;
            }
        }
        representatives.push(idx);
        periods.push(p);
    }
    Ok(OrbitTable {
        spec: *spec,
        representatives,
        periods,
        orbit_of,
    })
}

/// Shift and clock matrices: `X|q> = |q+1 mod d>`, `Z|q> = w^q |q>` with
/// `w = exp(2 pi i / d)`, so that `Z X = w X Z`.
pub fn clock_shift_matrices<T: Real>(d: usize) -> Result<(DenseOperator<T>, DenseOperator<T>)> {
    if d < 2 {
        return Err(Error::InvalidRing { sites: 1, d });
    }
    let x = DMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { cone() } else { czero() });
    let z = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            root_of_unity(i as i64, d as u64)
        } else {
            czero()
        }
    });
    Ok((x, z))
}

/// Generalised Pauli string `prod_i X_i^{a_i} Z_i^{b_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PauliString {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

impl PauliString {
    pub fn new(a: Vec<usize>, b: Vec<usize>) -> Self {
        PauliString { a, b }
    }

    pub fn identity(sites: usize) -> Self {
        PauliString {
            a: vec![0; sites],
            b: vec![0; sites],
        }
    }

    /// Single `Z^power` at `site` (0-based).
    pub fn z_at(sites: usize, site: usize, power: usize) -> Self {
        let mut p = Self::identity(sites);
        p.b[site] = power;
        p
    }

    pub fn is_identity(&self) -> bool {
        self.a.iter().chain(&self.b).all(|&x| x == 0)
    }

    fn check(&self, spec: &RingSpec) -> Result<()> {
        for v in [&self.a, &self.b] {
            if v.len() != spec.sites() {
                return Err(Error::LengthMismatch {
                    expected: spec.sites(),
                    got: v.len(),
                });
            }
        }
        Ok(())
    }

    /// `O|sigma> = phase |sigma'>` for basis state `index`: per site
    /// `X^a Z^b |q> = w^{b q} |q + a>`.
    pub fn apply_basis<T: Real>(&self, spec: &RingSpec, index: usize) -> (usize, Complex<T>) {
        let d = spec.d();
        let digits = spec.digits(index);
        let mut phase_num = 0usize;
        let mut out = 0usize;
        for s in 0..spec.sites() {
            phase_num = (phase_num + self.b[s] * digits[s]) % d;
            out = out * d + (digits[s] + self.a[s]) % d;
        }
        (out, root_of_unity(phase_num as i64, d as u64))
    }
}

/// Dense `O_{a,b}` as the ordered tensor product of per-site factors.
pub fn pauli_string_matrix<T: Real>(ps: &PauliString, spec: &RingSpec) -> Result<DenseOperator<T>> {
    ps.check(spec)?;
    spec.dense_guard()?;
    let (x, z) = clock_shift_matrices::<T>(spec.d())?;
    let mut out: DenseOperator<T> = DMatrix::from_element(1, 1, cone());
    for s in 0..spec.sites() {
        let f = matrix_power(&x, ps.a[s]) * matrix_power(&z, ps.b[s]);
        out = kron(&out, &f);
    }
    Ok(out)
}

/// Sparse `O_{a,b}`: one entry per column.
pub fn pauli_string_sparse<T: Real>(ps: &PauliString, spec: &RingSpec) -> Result<SparseOperator<T>> {
    ps.check(spec)?;
    let dim = spec.dim();
    let mut out = SparseOperator::zeros(dim, dim);
    for idx in 0..dim {
        let (j, ph) = ps.apply_basis::<T>(spec, idx);
        out.add(j, idx, ph);
    }
    Ok(out)
}

pub fn matrix_power<T: Real>(m: &DenseOperator<T>, k: usize) -> DenseOperator<T> {
    let mut out = crate::linalg::identity(m.nrows());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// Translation `T`, with `T|s> = |translate(s, 1)>`.
pub fn translation_matrix<T: Real>(spec: &RingSpec) -> Result<DenseOperator<T>> {
    spec.dense_guard()?;
    let dim = spec.dim();
    let mut m = DMatrix::from_element(dim, dim, czero());
    for idx in 0..dim {
        m[(spec.shift_index(idx), idx)] = cone();
    }
    Ok(m)
}

pub fn translation_sparse<T: Real>(spec: &RingSpec, n: i64) -> SparseOperator<T> {
    let dim = spec.dim();
    let mut m = SparseOperator::zeros(dim, dim);
    for idx in 0..dim {
        m.add(spec.translate_index(idx, n), idx, cone());
    }
    m
}
