use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mmis_core::correlators::{cycle_evaluation, random_hermitian, trace_tk_oa, trace_tk_oa_bruteforce, RegionSpec};
use mmis_core::dims::{dim_permutation_subspace, dim_translation_subspace, enumerate};
use mmis_core::doubled::{bruteforce_rmn, structured_rmn};
use mmis_core::lattice::orbit_decomposition;
use mmis_core::linalg::{haar_unitary, max_abs_diff, renyi_entropy, uhlmann_fidelity, DenseOperator};
use mmis_core::mmis::{apply_pt, build_pt};
use mmis_core::num::Complex;
use mmis_core::swssb::MomentumOperator;
use mmis_core::{Mmis, RingSpec};

fn random_density(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> DenseOperator<f64> {
    let u = haar_unitary::<f64, _>(n, rng);
    let mut diag = DMatrix::<Complex<f64>>::zeros(n, n);
    for k in 0..rank.min(n) {
        diag[(k, k)] = Complex::new((k + 1) as f64, 0.0);
    }
    let m = &u * diag * u.adjoint();
    let tr = m.trace();
    m / tr
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dimension_ordering(l in 1usize..14, d in 2usize..5) {
        let s = dim_permutation_subspace(l, d).unwrap();
        let t = dim_translation_subspace(l, d).unwrap();
        prop_assert!(s <= t);
        prop_assert!(t * l as u128 >= (d as u128).pow(l as u32));
        prop_assert_eq!(s, enumerate::multisets(l, d));
    }

    #[test]
    fn orbit_periods_partition_the_basis(l in 1usize..10, d in 2usize..4) {
        let spec = RingSpec::new(l, d).unwrap();
        let orbits = orbit_decomposition(&spec).unwrap();
        prop_assert_eq!(orbits.periods().iter().sum::<usize>(), spec.dim());
        prop_assert!(orbits.periods().iter().all(|p| l % p == 0));
        prop_assert_eq!(orbits.len() as u128, dim_translation_subspace(l, d).unwrap());
    }

    #[test]
    fn projector_is_idempotent_and_invariant(l in 1usize..7, seed in any::<u64>()) {
        let spec = RingSpec::new(l, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<Complex<f64>> = haar_unitary::<f64, _>(spec.dim(), &mut rng).column(0).iter().copied().collect();
        let p = apply_pt(&spec, &v).unwrap();
        let pp = apply_pt(&spec, &p).unwrap();
        for (a, b) in p.iter().zip(&pp) {
            prop_assert!((a - b).norm() < 1e-12);
        }
        for i in 0..spec.dim() {
            prop_assert!((p[spec.shift_index(i)] - p[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn reduced_states_are_normalised(l in 2usize..9, start in 1usize..9, len in 1usize..5) {
        let spec = RingSpec::new(l, 2).unwrap();
        let len = len.min(l);
        let region = RegionSpec::interval((start - 1) % l + 1, len, &spec).unwrap();
        let rho = Mmis::new(&spec).unwrap().reduced::<f64>(&region.zero_based()).unwrap();
        prop_assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        prop_assert!(rho.eigenvalues().iter().all(|&x| x > -1e-12));
    }

    #[test]
    fn cycle_counting_matches_brute_force(l in 2usize..9, k in 0usize..9, mask in 1u32..256, seed in any::<u64>()) {
        let spec = RingSpec::new(l, 2).unwrap();
        let sites: Vec<usize> = (0..l).filter(|s| mask >> s & 1 == 1).map(|s| s + 1).take(4).collect();
        prop_assume!(!sites.is_empty());
        let region = RegionSpec::new(sites, &spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = random_hermitian(1 << region.len(), &mut rng);
        let a = trace_tk_oa(k, &op, &region, &spec).unwrap();
        let b = trace_tk_oa_bruteforce(k, &op, &region, &spec).unwrap();
        prop_assert!((a - b).norm() < 1e-10);
        let c = cycle_evaluation(k, &region, &spec);
        prop_assert_eq!(c.prefactor, 2u128.pow(c.free_cycle_count as u32));
    }

    #[test]
    fn structured_blocks_match_partial_trace(l in 2usize..7, m in -3i64..4, n in -3i64..4, size in 1usize..4) {
        let spec = RingSpec::new(l, 2).unwrap();
        let size = size.min(l / 2).max(1);
        let a = structured_rmn(&spec, m, n, size).unwrap();
        let b = bruteforce_rmn(&spec, m, n, size).unwrap();
        prop_assert!(max_abs_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(n in 2usize..7, ra in 1usize..7, rb in 1usize..7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_density(n, ra, &mut rng);
        let b = random_density(n, rb, &mut rng);
        let f = uhlmann_fidelity(&a, &b).unwrap();
        let g = uhlmann_fidelity(&b, &a).unwrap();
        prop_assert!((f - g).abs() < 1e-8);
        prop_assert!(f > -1e-12 && f < 1.0 + 1e-9);
        prop_assert!((uhlmann_fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn renyi_entropy_decreases_in_alpha(w in prop::collection::vec(0.01f64..1.0, 2..8)) {
        let s: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / s).collect();
        let alphas = [0.5, 1.0, 2.0, 3.0];
        let e: Vec<f64> = alphas.iter().map(|&a| renyi_entropy(&p, a)).collect();
        for k in 1..e.len() {
            prop_assert!(e[k] <= e[k - 1] + 1e-12);
        }
    }

    #[test]
    fn momentum_operators_carry_charge(l in 2usize..8, d in 2usize..4, n in 0usize..8) {
        let spec = RingSpec::new(l, d).unwrap();
        prop_assume!(spec.dim() <= 4096);
        let o = MomentumOperator::new(&spec, n % l).unwrap();
        prop_assert!(o.charge_residual() < 1e-12);
    }
}

#[test]
fn single_precision_projector() {
    let spec = RingSpec::new(6, 2).unwrap();
    let p = build_pt::<f32>(&spec).unwrap();
    assert!(max_abs_diff(&(&p * &p), &p) < 1e-5);
    let tr: f32 = (0..spec.dim()).map(|i| p[(i, i)].re).sum();
    assert!((tr - 14.0).abs() < 1e-4);
}
