//! Dimensions of the permutation-symmetric subspace `S` and the
//! zero-momentum translation-invariant subspace `T`, in exact integers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{checked_pow, RingSpec};
use crate::linalg::hermitian_eigenvalues;
use crate::mmis::build_pt;
use crate::num::gcd;

fn check_args(sites: usize, d: usize) -> Result<()> {
    if sites < 1 || d < 2 {
        return Err(Error::InvalidRing { sites, d });
    }
    Ok(())
}

/// `binom(n, k)` with overflow detection.
pub fn binomial(n: u128, k: u128) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiplication.
        acc = acc
            .checked_mul(n - i)
            .ok_or(Error::Overflow("binomial coefficient"))?
            / (i + 1);
    }
    Ok(acc)
}

/// `dim S = binom(L + d - 1, d - 1)`.
pub fn dim_permutation_subspace(sites: usize, d: usize) -> Result<u128> {
    check_args(sites, d)?;
    binomial((sites + d - 1) as u128, (d - 1) as u128)
}

/// `dim T = (1/L) sum_{i<L} d^gcd(i, L)`, the number of necklaces.
pub fn dim_translation_subspace(sites: usize, d: usize) -> Result<u128> {
    check_args(sites, d)?;
    let mut total: u128 = 0;
    for i in 0..sites {
        let g = gcd(i, sites);
        let term = checked_pow(d, g).ok_or(Error::Overflow("necklace count"))?;
        total = total.checked_add(term).ok_or(Error::Overflow("necklace count"))?;
    }
    debug_assert_eq!(total % sites as u128, 0);
    Ok(total / sites as u128)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DimReport {
    #[serde(rename = "L")]
    pub sites: usize,
    pub d: usize,
    pub dim_s: u128,
    pub dim_t: u128,
    pub equal: bool,
    pub entanglement_certified: bool,
}

impl DimReport {
    pub fn new(sites: usize, d: usize) -> Result<Self> {
        let dim_s = dim_permutation_subspace(sites, d)?;
        let dim_t = dim_translation_subspace(sites, d)?;
        Ok(DimReport {
            sites,
            d,
            dim_s,
            dim_t,
            equal: dim_s == dim_t,
            entanglement_certified: dim_s < dim_t,
        })
    }
}

/// One report per `L = 1..=l_max`.
pub fn threshold_report(d: usize, l_max: usize) -> Result<Vec<DimReport>> {
    (1..=l_max).map(|l| DimReport::new(l, d)).collect()
}

/// Smallest `L` at which `dim S < dim T`, searching up to `l_max`.
pub fn certification_threshold(d: usize, l_max: usize) -> Result<Option<usize>> {
    Ok(threshold_report(d, l_max)?
        .into_iter()
        .find(|r| r.entanglement_certified)
        .map(|r| r.sites))
}

/// Rank of the explicitly built projector, counting eigenvalues above 0.5.
pub fn rank_pt_check(spec: &RingSpec) -> Result<usize> {
    let p = build_pt::<f64>(spec)?;
    Ok(hermitian_eigenvalues(&p).into_iter().filter(|&x| x > 0.5).count())
}

/// Brute-force counters used to cross-check the closed forms.
pub mod enumerate {
    use crate::error::Result;
    use crate::lattice::RingSpec;

    /// Multisets of size `L` over `d` symbols, counted as nondecreasing
    /// sequences.
    pub fn multisets(sites: usize, d: usize) -> u128 {
        fn rec(left: usize, min: usize, d: usize) -> u128 {
            if left == 0 {
                return 1;
            }
            (min..d).map(|s| rec(left - 1, s, d)).sum()
        }
        rec(sites, 0, d)
    }

    /// Strings that are lexicographically minimal among all their rotations.
    pub fn necklaces(sites: usize, d: usize) -> Result<u128> {
        let spec = RingSpec::new(sites, d)?;
        let mut count = 0;
        let mut digits = vec![0usize; sites];
        for idx in 0..spec.dim() {
            let mut rem = idx;
            for s in (0..sites).rev() {
                digits[s] = rem % d;
                rem /= d;
            }
            let minimal = (1..sites).all(|r| {
                let rotated = digits.iter().cycle().skip(r).take(sites);
                digits.iter().le(rotated)
            });
            if minimal {
                count += 1;
            }
        }
        Ok(count)
    }
}
