//! Strongly translation-symmetric Lindblad dynamics on a qubit ring:
//! `H = -sum Z_i Z_{i+1} - lambda sum X_i`, one Hermitian jump
//! `L_XY = sum X_i Y_{i+1}` at rate `gamma`.
//!
//! `evolve` works in the momentum basis, where `H` and `L_XY` are block
//! diagonal and every `(k, k')` block of `rho` evolves on its own;
//! `evolve_dense` integrates the full matrix and serves as the reference.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{orbit_decomposition, RingSpec};
use crate::linalg::{
    dagger, hermitian_eigh, max_abs, max_abs_diff, trace, uhlmann_fidelity, DenseOperator, DensityMatrix, SparseOperator,
};
use crate::mmis::Mmis;
use crate::num::{cplx, czero, root_of_unity, Complex, Real};

/// Largest Hilbert-space dimension the integrator accepts.
pub const LINDBLAD_GUARD: u128 = 1024;

fn check_qubits(spec: &RingSpec) -> Result<()> {
    if spec.d() != 2 {
        return Err(Error::Precondition(format!("qubit ring required, got d = {}", spec.d())));
    }
    Ok(())
}

fn flip(spec: &RingSpec, idx: usize, site: usize) -> usize {
    idx ^ (1 << (spec.sites() - 1 - site))
}

fn z_sign(spec: &RingSpec, idx: usize, site: usize) -> f64 {
    if spec.digit(idx, site) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `H = -sum_i Z_i Z_{i+1} - lambda sum_i X_i`, periodic; on `L = 2` the
/// bond appears twice.
pub fn build_hamiltonian<T: Real>(spec: &RingSpec, lambda: f64) -> Result<SparseOperator<T>> {
    check_qubits(spec)?;
    spec.guard("Hamiltonian", LINDBLAD_GUARD)?;
    let l = spec.sites();
    let mut h = SparseOperator::zeros(spec.dim(), spec.dim());
    for idx in 0..spec.dim() {
        let zz: f64 = (0..l).map(|i| z_sign(spec, idx, i) * z_sign(spec, idx, (i + 1) % l)).sum();
        h.add(idx, idx, cplx(-zz, 0.0));
        if lambda != 0.0 {
            for i in 0..l {
                h.add(flip(spec, idx, i), idx, cplx(-lambda, 0.0));
            }
        }
    }
    Ok(h)
}

/// `L_XY = sum_i X_i Y_{i+1}`, `L >= 2`.
pub fn build_jump<T: Real>(spec: &RingSpec) -> Result<SparseOperator<T>> {
    check_qubits(spec)?;
    spec.guard("jump operator", LINDBLAD_GUARD)?;
    let l = spec.sites();
    if l < 2 {
        return Err(Error::Precondition("X_i Y_{i+1} needs two distinct sites".into()));
    }
    let mut m = SparseOperator::zeros(spec.dim(), spec.dim());
    for idx in 0..spec.dim() {
        for i in 0..l {
            let j = (i + 1) % l;
            // Y|0> = i|1>, Y|1> = -i|0>
            let y = if spec.digit(idx, j) == 0 { 1.0 } else { -1.0 };
            let out = flip(spec, flip(spec, idx, j), i);
            m.add(out, idx, cplx(0.0, y));
        }
    }
    Ok(m)
}

/// `-i[H, rho] + gamma (L rho L^dag - {L^dag L, rho}/2)`.
pub fn lindbladian<T: Real>(
    h: &SparseOperator<T>,
    jump: &SparseOperator<T>,
    gamma: f64,
    rho: &DenseOperator<T>,
) -> DenseOperator<T> {
    let mi: Complex<T> = cplx(0.0, -1.0);
    let mut out = (h.mul_dense(rho) - h.dense_mul(rho)) * mi;
    if gamma != 0.0 {
        let jd = jump.adjoint();
        let ldl = jd.mul_sparse(jump);
        let sandwich = jd.dense_mul(&jump.mul_dense(rho));
        let anti = ldl.mul_dense(rho) + ldl.dense_mul(rho);
        out += (sandwich - anti * cplx::<T>(0.5, 0.0)) * cplx::<T>(gamma, 0.0);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LindbladSpec {
    pub ring: RingSpec,
    pub lambda: f64,
    pub gamma: f64,
    pub dt: f64,
    pub t_max: f64,
    /// Record every `stride` steps.
    pub stride: usize,
}

impl LindbladSpec {
    pub fn new(ring: RingSpec, lambda: f64, gamma: f64, dt: f64, t_max: f64) -> Result<Self> {
        check_qubits(&ring)?;
        ring.guard("Lindblad evolution", LINDBLAD_GUARD)?;
        if !(dt > 0.0) || !(t_max >= 0.0) || !(gamma >= 0.0) {
            return Err(Error::Precondition(format!(
                "need dt > 0, t_max >= 0, gamma >= 0 (dt = {dt}, t_max = {t_max}, gamma = {gamma})"
            )));
        }
        Ok(LindbladSpec {
            ring,
            lambda,
            gamma,
            dt,
            t_max,
            stride: 1,
        })
    }

    /// Defaults of the reference trajectory: `L = 9`, `lambda = 1`,
    /// `gamma = 0.5`, `dt = 0.005`, `t in [0, 10]`, sampled every `0.1`.
    pub fn reference() -> Self {
        let mut s = Self::new(RingSpec::new(9, 2).expect("valid ring"), 1.0, 0.5, 0.005, 10.0).expect("valid");
        s.stride = 20;
        s
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// Non-squared Uhlmann fidelity `F(rho(t), rho_T)`.
    pub fidelities: Vec<f64>,
    pub purities: Vec<f64>,
    /// `|Tr rho(t) - Tr rho_0|` per sample.
    pub trace_drift: Vec<f64>,
    /// `max |rho - rho^dag|` per sample.
    pub hermiticity_drift: Vec<f64>,
    /// `[Re, Im] Tr[T^n rho(t)]`, `n = 0..L`, per sample.
    pub charge_monitors: Vec<Vec<[f64; 2]>>,
    /// `max_n |Tr[T^n rho(t)] - Tr[T^n rho_0]|` per sample.
    pub charge_drift: Vec<f64>,
    /// Weight below the block cut-off discarded from `rho_0`.
    pub dropped_weight: f64,
}

impl TrajectoryRecord {
    fn new() -> Self {
        TrajectoryRecord {
            times: Vec::new(),
            fidelities: Vec::new(),
            purities: Vec::new(),
            trace_drift: Vec::new(),
            hermiticity_drift: Vec::new(),
            charge_monitors: Vec::new(),
            charge_drift: Vec::new(),
            dropped_weight: 0.0,
        }
    }

    pub fn final_fidelity(&self) -> f64 {
        *self.fidelities.last().unwrap_or(&f64::NAN)
    }

    pub fn max_trace_drift(&self) -> f64 {
        self.trace_drift.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_hermiticity_drift(&self) -> f64 {
        self.hermiticity_drift.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_charge_drift(&self) -> f64 {
        self.charge_drift.iter().cloned().fold(0.0, f64::max)
    }

    /// `F` never decreases (beyond `slack`) on samples with `t >= t0`.
    pub fn monotone_after(&self, t0: f64, slack: f64) -> bool {
        let f: Vec<f64> = self
            .times
            .iter()
            .zip(&self.fidelities)
            .filter(|(t, _)| **t >= t0 - 1e-9)
            .map(|(_, f)| *f)
            .collect();
        f.windows(2).all(|w| w[1] >= w[0] - slack)
    }

    /// Least-squares `log(1 - F) = a + b t` over `[t0, t1]`:
    /// returns `(b, a, r^2)`.
    pub fn log_linear_fit(&self, t0: f64, t1: f64) -> (f64, f64, f64) {
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .times
            .iter()
            .zip(&self.fidelities)
            .filter(|(t, f)| **t >= t0 - 1e-9 && **t <= t1 + 1e-9 && **f < 1.0)
            .map(|(t, f)| (*t, (1.0 - f).ln()))
            .unzip();
        crate::doubled::linear_fit(&x, &y)
    }
}

/// One momentum sector: orthonormal columns `|r, q>`, with `T|r, q> = e^{iq}|r, q>`.
#[derive(Debug, Clone)]
pub struct Sector {
    pub n: usize,
    pub basis: DenseOperator<f64>,
}

/// The momentum basis of a ring, sector by sector.
#[derive(Debug, Clone)]
pub struct MomentumBasis {
    spec: RingSpec,
    pub sectors: Vec<Sector>,
}

impl MomentumBasis {
    pub fn new(spec: &RingSpec) -> Result<Self> {
        spec.guard("momentum basis", LINDBLAD_GUARD)?;
        let orbits = orbit_decomposition(spec)?;
        let l = spec.sites();
        let dim = spec.dim();
        let mut sectors = Vec::new();
        for n in 0..l {
            let ks: Vec<usize> = (0..orbits.len()).filter(|&k| (n * orbits.periods()[k]) % l == 0).collect();
            let mut basis = DMatrix::from_element(dim, ks.len(), czero());
            for (c, &k) in ks.iter().enumerate() {
                let members = orbits.members(k);
                let norm = 1.0 / (members.len() as f64).sqrt();
                // members[j] = T^j r
                for (j, &idx) in members.iter().enumerate() {
                    basis[(idx, c)] = root_of_unity::<f64>(-((n * j) as i64), l as u64) * norm;
                }
            }
            sectors.push(Sector { n, basis });
        }
        Ok(MomentumBasis { spec: *spec, sectors })
    }

    pub fn spec(&self) -> RingSpec {
        self.spec
    }

    /// `V_k^dag A V_k` for every sector.
    pub fn blocks(&self, a: &SparseOperator<f64>) -> Vec<DenseOperator<f64>> {
        self.sectors
            .iter()
            .map(|s| dagger(&s.basis) * a.mul_dense(&s.basis))
            .collect()
    }

    /// Largest entry of `V_k^dag A V_k'` for `k != k'`.
    pub fn leakage(&self, a: &SparseOperator<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, s) in self.sectors.iter().enumerate() {
            let av = a.mul_dense(&s.basis);
            for (j, t) in self.sectors.iter().enumerate() {
                if i != j {
                    worst = worst.max(max_abs(&(dagger(&t.basis) * &av)));
                }
            }
        }
        worst
    }

    pub fn embed(&self, blocks: &[Block]) -> DenseOperator<f64> {
        let dim = self.spec.dim();
        let mut out = DMatrix::from_element(dim, dim, czero());
        for b in blocks {
            let (vk, vq) = (&self.sectors[b.k].basis, &self.sectors[b.q].basis);
            out += vk * &b.rho * dagger(vq);
        }
        out
    }
}

/// The `(k, q)` block `V_k^dag rho V_q`.
#[derive(Debug, Clone)]
pub struct Block {
    pub k: usize,
    pub q: usize,
    pub rho: DenseOperator<f64>,
}

struct BlockGenerator {
    /// `-iH - gamma L^2 / 2` per sector; `L` is Hermitian.
    left: Vec<DenseOperator<f64>>,
    /// `iH - gamma L^2 / 2` per sector.
    right: Vec<DenseOperator<f64>>,
    l: Vec<DenseOperator<f64>>,
    gamma: f64,
}

impl BlockGenerator {
    fn new(h: Vec<DenseOperator<f64>>, l: Vec<DenseOperator<f64>>, gamma: f64) -> Self {
        let half = Complex::new(gamma / 2.0, 0.0);
        let i = Complex::new(0.0, 1.0);
        let left = h.iter().zip(&l).map(|(h, l)| -(h * i) - l * l * half).collect();
        let right = h.iter().zip(&l).map(|(h, l)| h * i - l * l * half).collect();
        BlockGenerator { left, right, l, gamma }
    }

    fn apply(&self, k: usize, q: usize, rho: &DenseOperator<f64>) -> DenseOperator<f64> {
        let mut out = &self.left[k] * rho + rho * &self.right[q];
        if self.gamma != 0.0 {
            out += &self.l[k] * rho * &self.l[q] * Complex::new(self.gamma, 0.0);
        }
        out
    }
}

fn rk4_step(f: impl Fn(&DenseOperator<f64>) -> DenseOperator<f64>, rho: &DenseOperator<f64>, dt: f64) -> DenseOperator<f64> {
    let h = Complex::new(dt, 0.0);
    let half = Complex::new(dt / 2.0, 0.0);
    let k1 = f(rho);
    let k2 = f(&(rho + &k1 * half));
    let k3 = f(&(rho + &k2 * half));
    let k4 = f(&(rho + &k3 * h));
    rho + (k1 + k2 * Complex::new(2.0, 0.0) + k3 * Complex::new(2.0, 0.0) + k4) * Complex::new(dt / 6.0, 0.0)
}

const INSTABILITY: f64 = 1e-6;

/// Fixed-step RK4 in the momentum basis.
pub fn evolve(spec: &LindbladSpec, rho0: &DensityMatrix<f64>) -> Result<TrajectoryRecord> {
    let ring = spec.ring;
    if rho0.dim() != ring.dim() {
        return Err(Error::LengthMismatch {
            expected: ring.dim(),
            got: rho0.dim(),
        });
    }
    let basis = MomentumBasis::new(&ring)?;
    let h = build_hamiltonian::<f64>(&ring, spec.lambda)?;
    let jump = build_jump::<f64>(&ring)?;
    let gen = BlockGenerator::new(basis.blocks(&h), basis.blocks(&jump), spec.gamma);
    let cutoff = 1e-14 * max_abs(rho0.matrix()).max(1e-300);
    let mut blocks = Vec::new();
    let mut dropped: f64 = 0.0;
    for (k, s) in basis.sectors.iter().enumerate() {
        let left = dagger(&s.basis) * rho0.matrix();
        for (q, t) in basis.sectors.iter().enumerate() {
            let b = &left * &t.basis;
            let size = max_abs(&b);
            if b.nrows() > 0 && b.ncols() > 0 && size > cutoff {
                blocks.push(Block { k, q, rho: b });
            } else {
                dropped = dropped.max(size);
            }
        }
    }
    let zero_sector = 0;
    let dim_t = basis.sectors[zero_sector].basis.ncols();
    let steady: DenseOperator<f64> = DMatrix::identity(dim_t, dim_t) * Complex::new(1.0 / dim_t as f64, 0.0);
    let l = ring.sites();
    let momenta: Vec<usize> = basis.sectors.iter().map(|s| s.n).collect();

    let charges = |blocks: &[Block]| -> Vec<Complex<f64>> {
        (0..l)
            .map(|m| {
                blocks
                    .iter()
                    .filter(|b| b.k == b.q)
                    .map(|b| trace(&b.rho) * root_of_unity::<f64>((momenta[b.k] * m) as i64, l as u64))
                    .sum()
            })
            .collect()
    };
    let initial_charges = charges(&blocks);
    let initial_trace = initial_charges[0];

    let mut rec = TrajectoryRecord::new();
    rec.dropped_weight = dropped;
    let record = |rec: &mut TrajectoryRecord, t: f64, blocks: &[Block]| -> Result<()> {
        let c = charges(blocks);
        let drift = (c[0] - initial_trace).norm();
        let purity: f64 = blocks.iter().map(|b| b.rho.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum();
        check_stable(t, drift, purity)?;
        let mut herm: f64 = 0.0;
        for b in blocks {
            let partner = if b.k == b.q {
                Some(b)
            } else {
                blocks.iter().find(|o| o.k == b.q && o.q == b.k)
            };
            herm = herm.max(match partner {
                Some(p) => max_abs_diff(&b.rho, &dagger(&p.rho)),
                None => max_abs(&b.rho),
            });
        }
        let fid = match blocks.iter().find(|b| b.k == zero_sector && b.q == zero_sector) {
            Some(b) => uhlmann_fidelity(&psd_part(&b.rho), &steady)?,
            None => 0.0,
        };
        rec.times.push(t);
        rec.fidelities.push(fid);
        rec.purities.push(purity);
        rec.trace_drift.push(drift);
        rec.hermiticity_drift.push(herm);
        rec.charge_drift.push(
            c.iter()
                .zip(&initial_charges)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        );
        rec.charge_monitors.push(c.iter().map(|z| [z.re, z.im]).collect());
        Ok(())
    };

    record(&mut rec, 0.0, &blocks)?;
    let steps = spec.steps();
    for step in 1..=steps {
        for b in &mut blocks {
            let (k, q) = (b.k, b.q);
            b.rho = rk4_step(|r| gen.apply(k, q, r), &b.rho, spec.dt);
        }
        if step % spec.stride == 0 || step == steps {
            record(&mut rec, step as f64 * spec.dt, &blocks)?;
        }
    }
    Ok(rec)
}

/// Trace and purity both stay bounded for any valid state; a runaway
/// purity is the earlier signal because RK4 preserves the trace exactly.
fn check_stable(t: f64, trace_drift: f64, purity: f64) -> Result<()> {
    let drift = trace_drift.max(purity - 1.0);
    if !(drift < INSTABILITY) {
        return Err(Error::Unstable { t, drift });
    }
    Ok(())
}

/// Hermitian part with negative eigenvalues (integration error) removed.
fn psd_part(m: &DenseOperator<f64>) -> DenseOperator<f64> {
    let h = (m + dagger(m)) * Complex::new(0.5, 0.0);
    let (vals, vecs) = hermitian_eigh(&h);
    let clipped = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|v| Complex::new(v.max(0.0), 0.0)),
    ));
    &vecs * clipped * dagger(&vecs)
}

/// Full-space fixed-step RK4; returns the record and the final state.
pub fn evolve_dense(spec: &LindbladSpec, rho0: &DensityMatrix<f64>) -> Result<(TrajectoryRecord, DenseOperator<f64>)> {
    let ring = spec.ring;
    ring.dense_guard()?;
    let h = build_hamiltonian::<f64>(&ring, spec.lambda)?;
    let jump = build_jump::<f64>(&ring)?;
    let rho_t = Mmis::new(&ring)?.dense::<f64>()?;
    let l = ring.sites();
    let translations: Vec<SparseOperator<f64>> =
        (0..l).map(|n| crate::lattice::translation_sparse(&ring, n as i64)).collect();
    let charges = |rho: &DenseOperator<f64>| -> Vec<Complex<f64>> {
        translations.iter().map(|t| trace(&t.mul_dense(rho))).collect()
    };
    let mut rho = rho0.matrix().clone();
    let init = charges(&rho);
    let mut rec = TrajectoryRecord::new();
    let push = |rec: &mut TrajectoryRecord, t: f64, rho: &DenseOperator<f64>| -> Result<()> {
        let c = charges(rho);
        let drift = (c[0] - init[0]).norm();
        let purity: f64 = rho.iter().map(|z| z.norm_sqr()).sum();
        check_stable(t, drift, purity)?;
        rec.times.push(t);
        rec.fidelities.push(uhlmann_fidelity(&psd_part(rho), rho_t.matrix())?);
        rec.purities.push(purity);
        rec.trace_drift.push(drift);
        rec.hermiticity_drift.push(max_abs_diff(rho, &dagger(rho)));
        rec.charge_drift
            .push(c.iter().zip(&init).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
        rec.charge_monitors.push(c.iter().map(|z| [z.re, z.im]).collect());
        Ok(())
    };
    push(&mut rec, 0.0, &rho)?;
    let steps = spec.steps();
    for step in 1..=steps {
        rho = rk4_step(|r| lindbladian(&h, &jump, spec.gamma, r), &rho, spec.dt);
        if step % spec.stride == 0 || step == steps {
            push(&mut rec, step as f64 * spec.dt, &rho)?;
        }
    }
    Ok((rec, rho))
}

/// `max |L(rho_T)|`, evaluated with sparse operators in the full space.
pub fn stationarity_residual(ring: &RingSpec, lambda: f64, gamma: f64) -> Result<f64> {
    let h = build_hamiltonian::<f64>(ring, lambda)?;
    let jump = build_jump::<f64>(ring)?;
    let mut rho = SparseOperator::zeros(ring.dim(), ring.dim());
    Mmis::new(ring)?.for_each_entry::<f64>(|i, j, v| rho.add(i, j, Complex::new(v, 0.0)));
    Ok(sparse_generator_max(&h, &jump, gamma, &rho))
}

/// `max |L(1/d^L)|`.
pub fn unitality_residual(ring: &RingSpec, lambda: f64, gamma: f64) -> Result<f64> {
    let h = build_hamiltonian::<f64>(ring, lambda)?;
    let jump = build_jump::<f64>(ring)?;
    let mut rho = SparseOperator::zeros(ring.dim(), ring.dim());
    for i in 0..ring.dim() {
        rho.add(i, i, Complex::new(1.0 / ring.dim() as f64, 0.0));
    }
    Ok(sparse_generator_max(&h, &jump, gamma, &rho))
}

fn sparse_generator_max(h: &SparseOperator<f64>, jump: &SparseOperator<f64>, gamma: f64, rho: &SparseOperator<f64>) -> f64 {
    let mi = Complex::new(0.0, -1.0);
    let comm = h.mul_sparse(rho).add_sparse(&rho.mul_sparse(h).scale(-Complex::new(1.0, 0.0)));
    let jd = jump.adjoint();
    let ldl = jd.mul_sparse(jump);
    let sandwich = jump.mul_sparse(rho).mul_sparse(&jd);
    let anti = ldl.mul_sparse(rho).add_sparse(&rho.mul_sparse(&ldl));
    let total = comm
        .scale(mi)
        .add_sparse(&sandwich.scale(Complex::new(gamma, 0.0)))
        .add_sparse(&anti.scale(Complex::new(-gamma / 2.0, 0.0)));
    let (n, _) = total.shape();
    (0..n)
        .flat_map(|i| total.row(i).iter().map(|e| e.1.norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

/// `max |[A, T]|` for a sparse operator.
pub fn translation_commutator(ring: &RingSpec, a: &SparseOperator<f64>) -> f64 {
    let t = crate::lattice::translation_sparse::<f64>(ring, 1);
    let c = a.mul_sparse(&t).add_sparse(&t.mul_sparse(a).scale(Complex::new(-1.0, 0.0)));
    let (n, _) = c.shape();
    (0..n)
        .flat_map(|i| c.row(i).iter().map(|e| e.1.norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

/// `|0...0><0...0|`.
pub fn all_zero_state(ring: &RingSpec) -> Result<DensityMatrix<f64>> {
    let mut psi = vec![czero(); ring.dim()];
    psi[0] = Complex::new(1.0, 0.0);
    DensityMatrix::pure(&psi)
}

/// Reference trajectory and its `dt / 2` rerun; returns both records.
pub fn dt_halving(spec: &LindbladSpec, rho0: &DensityMatrix<f64>) -> Result<(TrajectoryRecord, TrajectoryRecord)> {
    let a = evolve(spec, rho0)?;
    let mut half = *spec;
    half.dt /= 2.0;
    half.stride *= 2;
    let b = evolve(&half, rho0)?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{pauli_string_matrix, PauliString};
    use crate::linalg::{haar_unitary, hermiticity_residual, kron};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ring(l: usize) -> RingSpec {
        RingSpec::new(l, 2).unwrap()
    }

    fn pauli(l: usize, site: usize, which: char) -> DenseOperator<f64> {
        let spec = ring(l);
        let x = pauli_string_matrix::<f64>(&PauliString::new(unit(l, site), vec![0; l]), &spec).unwrap();
        let z = pauli_string_matrix::<f64>(&PauliString::z_at(l, site, 1), &spec).unwrap();
        match which {
            'x' => x,
            'z' => z,
            _ => x * z * Complex::new(0.0, 1.0),
        }
    }

    fn unit(l: usize, site: usize) -> Vec<usize> {
        let mut v = vec![0; l];
        v[site] = 1;
        v
    }

    #[test]
    fn hamiltonian_term_by_term() {
        for l in [2, 3, 5] {
            let spec = ring(l);
            let h = build_hamiltonian::<f64>(&spec, 0.7).unwrap().to_dense();
            let mut want = DMatrix::from_element(spec.dim(), spec.dim(), czero());
            for i in 0..l {
                want -= pauli(l, i, 'z') * pauli(l, (i + 1) % l, 'z');
                want -= pauli(l, i, 'x') * Complex::new(0.7, 0.0);
            }
            assert!(max_abs_diff(&h, &want) < 1e-14);
            assert!(hermiticity_residual(&h) < 1e-14);
        }
        let two = build_hamiltonian::<f64>(&ring(2), 0.0).unwrap().to_dense();
        let zz = kron(&pauli(1, 0, 'z'), &pauli(1, 0, 'z')) * Complex::new(-2.0, 0.0);
        assert!(max_abs_diff(&two, &zz) < 1e-14);
        let classical = build_hamiltonian::<f64>(&ring(4), 0.0).unwrap();
        assert!((0..16).all(|i| classical.row(i).iter().all(|e| e.0 == i)));
        assert!(translation_commutator(&ring(5), &build_hamiltonian(&ring(5), 1.0).unwrap()) < 1e-12);
    }

    #[test]
    fn jump_operator() {
        let l2 = build_jump::<f64>(&ring(2)).unwrap().to_dense();
        let want = pauli(2, 0, 'x') * pauli(2, 1, 'y') + pauli(2, 1, 'x') * pauli(2, 0, 'y');
        assert!(max_abs_diff(&l2, &want) < 1e-14);
        let l6 = build_jump::<f64>(&ring(6)).unwrap();
        assert!(hermiticity_residual(&l6.to_dense()) < 1e-14);
        assert!(translation_commutator(&ring(6), &l6) < 1e-12);
        // no global spin flip symmetry
        let l4 = build_jump::<f64>(&ring(4)).unwrap().to_dense();
        let mut px = DMatrix::identity(16, 16);
        for i in 0..4 {
            px *= pauli(4, i, 'x');
        }
        assert!(max_abs(&(&l4 * &px - &px * &l4)) > 0.5);
        assert!(build_jump::<f64>(&ring(1)).is_err());
        assert!(build_jump::<f64>(&RingSpec::new(3, 3).unwrap()).is_err());
    }

    #[test]
    fn steady_state_and_unitality() {
        for l in [4, 5, 7] {
            assert!(stationarity_residual(&ring(l), 1.0, 0.5).unwrap() < 1e-12);
            assert!(unitality_residual(&ring(l), 1.0, 0.5).unwrap() < 1e-12);
        }
        let spec = ring(4);
        let rho = Mmis::new(&spec).unwrap().dense::<f64>().unwrap();
        let h = build_hamiltonian::<f64>(&spec, 1.0).unwrap();
        let j = build_jump::<f64>(&spec).unwrap();
        assert!(max_abs(&lindbladian(&h, &j, 0.5, rho.matrix())) < 1e-12);
    }

    #[test]
    fn operators_do_not_mix_momenta() {
        let spec = ring(6);
        let basis = MomentumBasis::new(&spec).unwrap();
        let total: usize = basis.sectors.iter().map(|s| s.basis.ncols()).sum();
        assert_eq!(total, 64);
        assert_eq!(basis.sectors[0].basis.ncols(), 14);
        assert!(basis.leakage(&build_hamiltonian(&spec, 1.0).unwrap()) < 1e-12);
        assert!(basis.leakage(&build_jump(&spec).unwrap()) < 1e-12);
        let t = crate::lattice::translation_sparse::<f64>(&spec, 1);
        for s in &basis.sectors {
            let tv = t.mul_dense(&s.basis);
            let ph = root_of_unity::<f64>(s.n as i64, 6);
            assert!(max_abs_diff(&tv, &(&s.basis * ph)) < 1e-12);
            let g = dagger(&s.basis) * &s.basis;
            assert!(max_abs_diff(&g, &DMatrix::identity(g.nrows(), g.ncols())) < 1e-12);
        }
    }

    #[test]
    fn block_path_matches_dense_reference() {
        let ring = ring(4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = haar_unitary::<f64, _>(16, &mut rng);
        let mut diag = DMatrix::from_element(16, 16, czero());
        for i in 0..16 {
            diag[(i, i)] = Complex::new((i + 1) as f64 / 136.0, 0.0);
        }
        let rho0 = DensityMatrix::new(&u * diag * dagger(&u)).unwrap();
        let spec = LindbladSpec::new(ring, 0.8, 0.5, 0.01, 1.0).unwrap().with_stride(10);
        let block = evolve(&spec, &rho0).unwrap();
        let (dense, _) = evolve_dense(&spec, &rho0).unwrap();
        for (a, b) in block.fidelities.iter().zip(&dense.fidelities) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(dense.max_charge_drift() < 1e-10 && block.max_charge_drift() < 1e-10);
        // a generic state has non-trivial charges
        assert!(dense.charge_monitors[0][1][0].abs() > 1e-3);
        for (a, b) in block.charge_monitors.last().unwrap().iter().zip(dense.charge_monitors.last().unwrap()) {
            assert!((a[0] - b[0]).abs() < 1e-10 && (a[1] - b[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_system_and_fixed_point() {
        let ring = ring(5);
        let spec = LindbladSpec::new(ring, 1.0, 0.0, 0.005, 2.0).unwrap().with_stride(40);
        let rec = evolve(&spec, &all_zero_state(&ring).unwrap()).unwrap();
        for p in &rec.purities {
            assert!((p - 1.0).abs() < 1e-8, "{p}");
        }
        let spec = LindbladSpec::new(ring, 1.0, 0.5, 0.01, 2.0).unwrap().with_stride(20);
        let rho_t = Mmis::new(&ring).unwrap().dense::<f64>().unwrap();
        let rec = evolve(&spec, &rho_t).unwrap();
        assert!(rec.fidelities.iter().all(|f| (f - 1.0).abs() < 1e-8));
    }

    #[test]
    fn spec_validation() {
        assert!(LindbladSpec::new(ring(4), 1.0, -0.1, 0.01, 1.0).is_err());
        assert!(LindbladSpec::new(ring(4), 1.0, 0.1, 0.0, 1.0).is_err());
        assert!(LindbladSpec::new(ring(11), 1.0, 0.1, 0.01, 1.0).is_err());
        assert_eq!(LindbladSpec::reference().steps(), 2000);
    }

    #[test]
    fn instability_is_reported() {
        let ring = ring(4);
        let spec = LindbladSpec::new(ring, 1.0, 0.5, 2.0, 40.0).unwrap();
        let r = evolve(&spec, &all_zero_state(&ring).unwrap());
        assert!(matches!(r, Err(Error::Unstable { .. })));
    }
}
