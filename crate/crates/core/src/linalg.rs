//! Dense complex operators, Hermitian spectra, partial traces and the
//! entropy/fidelity functionals built on them.
//!
//! Operators on `L` qudits use the lexicographic basis index with site 1 as
//! the most significant digit. Hermitian eigenproblems are split into the
//! connected components of the matrix's nonzero pattern before they reach
//! the dense solver: a block-diagonal matrix (after a basis permutation)
//! has the union of its blocks' spectra, and the operators appearing here
//! (translation projectors, charge-conserving reduced states) are highly
//! reducible.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::num::{abs, abs2, conj, cone, czero, real, tol, Complex, Real};

pub type DenseOperator<T> = DMatrix<Complex<T>>;
pub type StateVector<T> = DVector<Complex<T>>;

pub fn identity<T: Real>(n: usize) -> DenseOperator<T> {
    DMatrix::from_fn(n, n, |i, j| if i == j { cone() } else { czero() })
}

pub fn kron<T: Real>(a: &DenseOperator<T>, b: &DenseOperator<T>) -> DenseOperator<T> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

pub fn dagger<T: Real>(m: &DenseOperator<T>) -> DenseOperator<T> {
    let (r, c) = m.shape();
    DMatrix::from_fn(c, r, |i, j| conj(m[(j, i)]))
}

pub fn max_abs<T: Real>(m: &DenseOperator<T>) -> T {
    m.iter().fold(T::zero(), |acc, &z| acc.max(abs(z)))
}

pub fn max_abs_diff<T: Real>(a: &DenseOperator<T>, b: &DenseOperator<T>) -> T {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (&x, &y)| acc.max(abs(x - y)))
}

/// `max |m - m^dagger|` over entries.
pub fn hermiticity_residual<T: Real>(m: &DenseOperator<T>) -> T {
    let n = m.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            worst = worst.max(abs(m[(i, j)] - conj(m[(j, i)])));
        }
    }
    worst
}

pub fn trace<T: Real>(m: &DenseOperator<T>) -> Complex<T> {
    (0..m.nrows().min(m.ncols())).fold(czero(), |acc, i| acc + m[(i, i)])
}

/// `Tr(A B)` without forming the product.
pub fn trace_product<T: Real>(a: &DenseOperator<T>, b: &DenseOperator<T>) -> Complex<T> {
    assert_eq!(a.ncols(), b.nrows());
    assert_eq!(a.nrows(), b.ncols());
    let mut acc = czero();
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Matrix product that skips the exact zeros of the left factor; cost is
/// `nnz(a) * ncols(b)`.
pub fn matmul_sparse_left<T: Real>(a: &DenseOperator<T>, b: &DenseOperator<T>) -> DenseOperator<T> {
    assert_eq!(a.ncols(), b.nrows());
    let mut out = DMatrix::from_element(a.nrows(), b.ncols(), czero());
    // column-major: iterate over columns of a
    for k in 0..a.ncols() {
        for i in 0..a.nrows() {
            let aik = a[(i, k)];
            if aik.re == T::zero() && aik.im == T::zero() {
                continue;
            }
            for j in 0..b.ncols() {
                out[(i, j)] += aik * b[(k, j)];
            }
        }
    }
    out
}

/// Connected components of the graph whose edges are the nonzero
/// off-diagonal entries of `m` (the pattern is symmetrised).
pub fn block_components<T: Real>(m: &DenseOperator<T>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut uf = UnionFind::new(n);
    for j in 0..n {
        for i in 0..n {
            if i != j {
                let z = m[(i, j)];
                if z.re != T::zero() || z.im != T::zero() {
                    uf.union(i, j);
                }
            }
        }
    }
    uf.groups()
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }

    /// Components in order of their smallest member; members ascending.
    pub(crate) fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot: BTreeMap<usize, usize> = BTreeMap::new();
        let mut out: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let r = self.find(i);
            let idx = *slot.entry(r).or_insert_with(|| {
                out.push(Vec::new());
                out.len() - 1
            });
            out[idx].push(i);
        }
        out
    }
}

fn submatrix<T: Real>(m: &DenseOperator<T>, idx: &[usize]) -> DenseOperator<T> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
}

fn is_real<T: Real>(m: &DenseOperator<T>) -> bool {
    m.iter().all(|z| z.im == T::zero())
}

/// Eigenvalues (and optionally eigenvectors) of one dense Hermitian block.
fn block_eigh<T: Real>(block: &DenseOperator<T>, vectors: bool) -> (Vec<T>, Option<DenseOperator<T>>) {
    let n = block.nrows();
    if n == 1 {
        return (vec![block[(0, 0)].re], vectors.then(|| identity(1)));
    }
    if is_real(block) {
        let re: DMatrix<T> = block.map(|z| z.re);
        if vectors {
            let eig = SymmetricEigen::new(re);
            let vecs = eig.eigenvectors.map(|x| Complex::new(x, T::zero()));
            (eig.eigenvalues.iter().copied().collect(), Some(vecs))
        } else {
            (re.symmetric_eigenvalues().iter().copied().collect(), None)
        }
    } else if vectors {
        let eig = SymmetricEigen::new(block.clone());
        (eig.eigenvalues.iter().copied().collect(), Some(eig.eigenvectors))
    } else {
        (block.symmetric_eigenvalues().iter().copied().collect(), None)
    }
}

fn sort_desc<T: Real>(v: &mut [T]) {
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
}

/// Spectrum of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues<T: Real>(m: &DenseOperator<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(m.nrows());
    for comp in block_components(m) {
        let (vals, _) = block_eigh(&submatrix(m, &comp), false);
        out.extend(vals);
    }
    sort_desc(&mut out);
    out
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues descending and
/// the matching orthonormal eigenvectors as columns.
pub fn hermitian_eigh<T: Real>(m: &DenseOperator<T>) -> (Vec<T>, DenseOperator<T>) {
    let n = m.nrows();
    let mut pairs: Vec<(T, Vec<(usize, Complex<T>)>)> = Vec::with_capacity(n);
    for comp in block_components(m) {
        let (vals, vecs) = block_eigh(&submatrix(m, &comp), true);
        let vecs = vecs.expect("vectors requested");
        for (c, &v) in vals.iter().enumerate() {
            let col: Vec<(usize, Complex<T>)> =
                comp.iter().enumerate().map(|(a, &i)| (i, vecs[(a, c)])).collect();
            pairs.push((v, col));
        }
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut vectors = DMatrix::from_element(n, n, czero());
    let mut values = Vec::with_capacity(n);
    for (c, (v, col)) in pairs.into_iter().enumerate() {
        values.push(v);
        for (i, z) in col {
            vectors[(i, c)] = z;
        }
    }
    (values, vectors)
}

/// Hermitian matrix given by sparse entries; only the structurally nonzero
/// part is ever densified, block by block.
#[derive(Debug, Clone)]
pub struct SparseHermitian<T: Real> {
    dim: usize,
    entries: BTreeMap<(usize, usize), Complex<T>>,
}

impl<T: Real> SparseHermitian<T> {
    pub fn new(dim: usize) -> Self {
        SparseHermitian {
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn add(&mut self, i: usize, j: usize, z: Complex<T>) {
        *self.entries.entry((i, j)).or_insert_with(czero) += z;
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.entries.get(&(i, j)).copied().unwrap_or_else(czero)
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(czero(), |acc, i| acc + self.get(i, i))
    }

    pub fn to_dense(&self) -> DenseOperator<T> {
        let mut m = DMatrix::from_element(self.dim, self.dim, czero());
        for (&(i, j), &z) in &self.entries {
            m[(i, j)] = z;
        }
        m
    }

    /// Full spectrum (descending), including the zeros of empty rows.
    pub fn eigenvalues(&self) -> Vec<T> {
        let mut uf = UnionFind::new(self.dim);
        let mut touched = vec![false; self.dim];
        for (&(i, j), z) in &self.entries {
            if z.re != T::zero() || z.im != T::zero() {
                touched[i] = true;
                touched[j] = true;
                if i != j {
                    uf.union(i, j);
                }
            }
        }
        let mut out = Vec::with_capacity(self.dim);
        for comp in uf.groups() {
            if comp.len() == 1 && !touched[comp[0]] {
                out.push(T::zero());
                continue;
            }
            let block = DMatrix::from_fn(comp.len(), comp.len(), |a, b| self.get(comp[a], comp[b]));
            out.extend(block_eigh(&block, false).0);
        }
        sort_desc(&mut out);
        out
    }
}

/// Row-compressed sparse complex operator.
#[derive(Debug, Clone)]
pub struct SparseOperator<T: Real> {
    nrows: usize,
    ncols: usize,
    rows: Vec<Vec<(usize, Complex<T>)>>,
}

impl<T: Real> SparseOperator<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseOperator {
            nrows,
            ncols,
            rows: vec![Vec::new(); nrows],
        }
    }

    pub fn from_dense(m: &DenseOperator<T>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                if z.re != T::zero() || z.im != T::zero() {
                    out.rows[i].push((j, z));
                }
            }
        }
        out
    }

    /// Accumulates `z` at `(i, j)`.
    pub fn add(&mut self, i: usize, j: usize, z: Complex<T>) {
        let row = &mut self.rows[i];
        match row.binary_search_by_key(&j, |e| e.0) {
            Ok(p) => row[p].1 += z,
            Err(p) => row.insert(p, (j, z)),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, i: usize) -> &[(usize, Complex<T>)] {
        &self.rows[i]
    }

    pub fn to_dense(&self) -> DenseOperator<T> {
        let mut m = DMatrix::from_element(self.nrows, self.ncols, czero());
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, z) in row {
                m[(i, j)] += z;
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.ncols, self.nrows);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, z) in row {
                out.rows[j].push((i, conj(z)));
            }
        }
        out
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let mut out = self.clone();
        for row in &mut out.rows {
            for e in row.iter_mut() {
                e.1 *= s;
            }
        }
        out
    }

    pub fn add_sparse(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape());
        let mut out = self.clone();
        for (i, row) in other.rows.iter().enumerate() {
            for &(j, z) in row {
                out.add(i, j, z);
            }
        }
        out
    }

    pub fn mul_sparse(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut out = Self::zeros(self.nrows, other.ncols);
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc: BTreeMap<usize, Complex<T>> = BTreeMap::new();
            for &(k, a) in row {
                for &(j, b) in &other.rows[k] {
                    *acc.entry(j).or_insert_with(czero) += a * b;
                }
            }
            let mut entries: Vec<(usize, Complex<T>)> = acc
                .into_iter()
                .filter(|(_, z)| z.re != T::zero() || z.im != T::zero())
                .collect();
            entries.sort_by_key(|e| e.0);
            out.rows[i] = entries;
        }
        out
    }

    /// `self * b`.
    pub fn mul_dense(&self, b: &DenseOperator<T>) -> DenseOperator<T> {
        assert_eq!(self.ncols, b.nrows());
        let mut out = DMatrix::from_element(self.nrows, b.ncols(), czero());
        for j in 0..b.ncols() {
            let bcol = b.column(j);
            for (i, row) in self.rows.iter().enumerate() {
                let mut acc = czero();
                for &(k, a) in row {
                    acc += a * bcol[k];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// `b * self`.
    pub fn dense_mul(&self, b: &DenseOperator<T>) -> DenseOperator<T> {
        assert_eq!(b.ncols(), self.nrows);
        let mut out = DMatrix::from_element(b.nrows(), self.ncols, czero());
        for (k, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                for i in 0..b.nrows() {
                    out[(i, j)] += b[(i, k)] * a;
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(v.len(), self.ncols);
        self.rows
            .iter()
            .map(|row| row.iter().fold(czero(), |acc, &(k, a)| acc + a * v[k]))
            .collect()
    }
}

/// Splits basis index `idx` of `sites` qudits into the index over `keep`
/// (in the order given) and the index over the remaining sites.
pub(crate) fn split_index(idx: usize, d: usize, sites: usize, keep_mask: &[bool]) -> (usize, usize) {
    let mut kept = 0usize;
    let mut rest = 0usize;
    let mut rem = idx;
    let mut digits = vec![0usize; sites];
    for s in (0..sites).rev() {
        digits[s] = rem % d;
        rem /= d;
    }
    for s in 0..sites {
        if keep_mask[s] {
            kept = kept * d + digits[s];
        } else {
            rest = rest * d + digits[s];
        }
    }
    (kept, rest)
}

fn mask(sites: usize, keep: &[usize]) -> Result<Vec<bool>> {
    let mut m = vec![false; sites];
    for &s in keep {
        if s >= sites || m[s] {
            return Err(Error::InvalidRegion(format!(
                "site {s} out of range or repeated for {sites} sites"
            )));
        }
        m[s] = true;
    }
    Ok(m)
}

/// Reduced operator on the (0-based) sites `keep`, tracing out the rest.
/// Kept sites retain their ring order.
pub fn partial_trace<T: Real>(
    m: &DenseOperator<T>,
    d: usize,
    sites: usize,
    keep: &[usize],
) -> Result<DenseOperator<T>> {
    let full = d.pow(sites as u32);
    if m.nrows() != full || m.ncols() != full {
        return Err(Error::LengthMismatch {
            expected: full,
            got: m.nrows(),
        });
    }
    let keep_mask = mask(sites, keep)?;
    let kdim = d.pow(keep.len() as u32);
    let rdim = full / kdim;
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); rdim];
    for idx in 0..full {
        let (a, c) = split_index(idx, d, sites, &keep_mask);
        groups[c].push((a, idx));
    }
    let mut out = DMatrix::from_element(kdim, kdim, czero());
    for g in &groups {
        for &(a, i) in g {
            for &(b, j) in g {
                out[(a, b)] += m[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Partial transpose on the (0-based) sites `flip`.
pub fn partial_transpose<T: Real>(
    m: &DenseOperator<T>,
    d: usize,
    sites: usize,
    flip: &[usize],
) -> Result<DenseOperator<T>> {
    let full = d.pow(sites as u32);
    if m.nrows() != full {
        return Err(Error::LengthMismatch {
            expected: full,
            got: m.nrows(),
        });
    }
    let flip_mask = mask(sites, flip)?;
    let digits = |idx: usize| {
        let mut v = vec![0usize; sites];
        let mut rem = idx;
        for s in (0..sites).rev() {
            v[s] = rem % d;
            rem /= d;
        }
        v
    };
    let compose = |v: &[usize]| v.iter().fold(0usize, |acc, &x| acc * d + x);
    let mut out = DMatrix::from_element(full, full, czero());
    for i in 0..full {
        let di = digits(i);
        for j in 0..full {
            let z = m[(i, j)];
            if z.re == T::zero() && z.im == T::zero() {
                continue;
            }
            let dj = digits(j);
            let mut ni = di.clone();
            let mut nj = dj.clone();
            for s in 0..sites {
                if flip_mask[s] {
                    ni[s] = dj[s];
                    nj[s] = di[s];
                }
            }
            out[(compose(&ni), compose(&nj))] = z;
        }
    }
    Ok(out)
}

/// Trace norm of a Hermitian matrix: sum of absolute eigenvalues.
pub fn trace_norm_hermitian<T: Real>(m: &DenseOperator<T>) -> T {
    hermitian_eigenvalues(m)
        .into_iter()
        .fold(T::zero(), |acc, x| acc + x.abs())
}

/// Trace norm of an arbitrary square matrix: sum of singular values.
pub fn trace_norm<T: Real>(m: &DenseOperator<T>) -> T {
    m.clone()
        .singular_values()
        .iter()
        .fold(T::zero(), |acc, &x| acc + x)
}

fn clip<T: Real>() -> T {
    tol(1e-14)
}

/// Von Neumann entropy (natural log) of a spectrum; eigenvalues at or
/// below the clip count as zero.
pub fn von_neumann_entropy<T: Real>(eigs: &[T]) -> T {
    let c = clip::<T>();
    -eigs
        .iter()
        .fold(T::zero(), |acc, &x| acc + crate::num::xlogx(x, c))
}

/// Rényi entropy of order `alpha`; `alpha == 1` is the von Neumann limit.
pub fn renyi_entropy<T: Real>(eigs: &[T], alpha: T) -> T {
    if (alpha - T::one()).abs() < real(1e-12) {
        return von_neumann_entropy(eigs);
    }
    let c = clip::<T>();
    let s = eigs
        .iter()
        .filter(|&&x| x > c)
        .fold(T::zero(), |acc, &x| acc + x.powf(alpha));
    s.ln() / (T::one() - alpha)
}

/// Non-negative square root of a positive semidefinite matrix.
pub fn psd_sqrt<T: Real>(m: &DenseOperator<T>) -> DenseOperator<T> {
    let (vals, vecs) = hermitian_eigh(m);
    let n = m.nrows();
    let mut out = DMatrix::from_element(n, n, czero());
    for (c, &v) in vals.iter().enumerate() {
        if v <= T::zero() {
            continue;
        }
        let s = v.sqrt();
        for i in 0..n {
            let vi = vecs[(i, c)] * Complex::new(s, T::zero());
            if vi.re == T::zero() && vi.im == T::zero() {
                continue;
            }
            for j in 0..n {
                out[(i, j)] += vi * conj(vecs[(j, c)]);
            }
        }
    }
    out
}

/// Uhlmann fidelity in the non-squared convention,
/// `F(rho, sigma) = Tr sqrt(sqrt(sigma) rho sqrt(sigma))`, so that
/// `F(I/2, |0><0|) = 1/sqrt(2)`.
///
/// The computation works on the support of whichever argument has finer
/// block structure: with `sigma = W diag(s) W^dagger` restricted to its
/// support, `F = Tr sqrt(diag(s)^1/2 W^dagger rho W diag(s)^1/2)`.
/// Eigenvalues of the inner matrix at or below `1e-14` are dropped; their
/// square roots would otherwise add rounding noise of order `1e-8`.
pub fn uhlmann_fidelity<T: Real>(rho: &DenseOperator<T>, sigma: &DenseOperator<T>) -> Result<T> {
    if rho.shape() != sigma.shape() || rho.nrows() != rho.ncols() {
        return Err(Error::LengthMismatch {
            expected: sigma.nrows(),
            got: rho.nrows(),
        });
    }
    let (a, b) = if block_components(rho).len() > block_components(sigma).len() {
        (sigma, rho)
    } else {
        (rho, sigma)
    };
    let psd_tol: T = tol(1e-10);
    let (vals, vecs) = hermitian_eigh(b);
    if vals.iter().any(|&v| v < -psd_tol) {
        return Err(Error::NotDensity("negative eigenvalue in fidelity argument".into()));
    }
    let support: Vec<usize> = (0..vals.len()).filter(|&c| vals[c] > clip::<T>()).collect();
    let n = a.nrows();
    let r = support.len();
    let mut w = DMatrix::from_element(n, r, czero());
    for (k, &c) in support.iter().enumerate() {
        let s = Complex::new(vals[c].sqrt(), T::zero());
        for i in 0..n {
            w[(i, k)] = vecs[(i, c)] * s;
        }
    }
    let aw = matmul_sparse_left(a, &w);
    let k = dagger(&w) * aw;
    let kvals = hermitian_eigenvalues(&k);
    if kvals.iter().any(|&v| v < -psd_tol) {
        return Err(Error::NotDensity("negative eigenvalue in fidelity argument".into()));
    }
    Ok(kvals
        .into_iter()
        .filter(|&v| v > clip::<T>())
        .fold(T::zero(), |acc, v| acc + v.sqrt()))
}

/// Haar-random unitary from the QR decomposition of a complex Ginibre
/// matrix, with the phases of `R`'s diagonal absorbed into `Q`.
pub fn haar_unitary<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> DenseOperator<T> {
    let g: DenseOperator<T> = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(real(re), real(im))
    });
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    DMatrix::from_fn(n, n, |i, j| {
        let rjj = r[(j, j)];
        let m = abs(rjj);
        let ph = if m > T::zero() {
            Complex::new(rjj.re / m, rjj.im / m)
        } else {
            cone()
        };
        q[(i, j)] * ph
    })
}

/// `sum_i |v_i|^2`.
pub fn norm_sqr<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, &z| acc + abs2(z))
}

/// Density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    matrix: DenseOperator<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates Hermiticity (1e-12) and unit trace (1e-12); positivity is
    /// checked separately by [`DensityMatrix::validate_psd`] because it
    /// needs a spectrum.
    pub fn new(matrix: DenseOperator<T>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotDensity("not square".into()));
        }
        let h = hermiticity_residual(&matrix);
        if h > tol(1e-12) {
            return Err(Error::NotDensity(format!("hermiticity residual {h:?}")));
        }
        let tr = trace(&matrix);
        if abs(tr - cone()) > tol(1e-12) {
            return Err(Error::NotDensity(format!("trace {:?}", tr.re)));
        }
        Ok(DensityMatrix { matrix })
    }

    pub fn new_checked(matrix: DenseOperator<T>) -> Result<Self> {
        let rho = Self::new(matrix)?;
        rho.validate_psd()?;
        Ok(rho)
    }

    pub(crate) fn from_unchecked(matrix: DenseOperator<T>) -> Self {
        DensityMatrix { matrix }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let s = Complex::new(T::one() / real(dim as f64), T::zero());
        DensityMatrix {
            matrix: identity::<T>(dim) * s,
        }
    }

    /// `|psi><psi|` for a normalised `psi`.
    pub fn pure(psi: &[Complex<T>]) -> Result<Self> {
        let n = psi.len();
        let norm = norm_sqr(psi).sqrt();
        if (norm - T::one()).abs() > tol(1e-12) {
            return Err(Error::NotDensity(format!("state norm {norm:?}")));
        }
        Ok(DensityMatrix {
            matrix: DMatrix::from_fn(n, n, |i, j| psi[i] * conj(psi[j])),
        })
    }

    pub fn validate_psd(&self) -> Result<()> {
        let min = self.eigenvalues().last().copied().unwrap_or(T::zero());
        if min < -tol::<T>(1e-10) {
            return Err(Error::NotDensity(format!("eigenvalue {min:?} < 0")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DenseOperator<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DenseOperator<T> {
        self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn purity(&self) -> T {
        self.matrix.iter().fold(T::zero(), |acc, &z| acc + abs2(z))
    }

    pub fn entropy(&self) -> T {
        von_neumann_entropy(&self.eigenvalues())
    }

    pub fn renyi(&self, alpha: T) -> T {
        renyi_entropy(&self.eigenvalues(), alpha)
    }

    pub fn expectation(&self, op: &DenseOperator<T>) -> Complex<T> {
        trace_product(&self.matrix, op)
    }

    /// Trace distance `||self - other||_1` (no factor 1/2).
    pub fn trace_distance(&self, other: &DensityMatrix<T>) -> T {
        trace_norm_hermitian(&(&self.matrix - &other.matrix))
    }

    pub fn reduce(&self, d: usize, sites: usize, keep: &[usize]) -> Result<DensityMatrix<T>> {
        Ok(DensityMatrix::from_unchecked(partial_trace(&self.matrix, d, sites, keep)?))
    }

    pub fn fidelity(&self, other: &DensityMatrix<T>) -> Result<T> {
        uhlmann_fidelity(&self.matrix, &other.matrix)
    }
}
