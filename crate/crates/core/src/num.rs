//! Scalar abstraction shared by the numerical routines.
//!
//! Everything numeric in this crate is generic over [`Real`], which is
//! implemented for `f32` and `f64`. Complex amplitudes are
//! `Complex<T>` from `num-complex` (re-exported through nalgebra).

use nalgebra as na;
use num_traits as nt;

pub use na::Complex;

/// Floating point types usable as the real part of operator entries.
pub trait Real:
    Copy + nt::FloatConst + nt::FromPrimitive + nt::ToPrimitive + na::RealField + Send + Sync
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` constant into `T`.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant representable in scalar type")
}

#[inline]
pub fn cplx<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(real(re), real(im))
}

#[inline]
pub fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn cone<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    nt::ToPrimitive::to_f64(&x).expect("finite scalar")
}

#[inline]
pub fn conj<T: Real>(z: Complex<T>) -> Complex<T> {
    Complex::new(z.re, -z.im)
}

#[inline]
pub fn abs2<T: Real>(z: Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}

#[inline]
pub fn abs<T: Real>(z: Complex<T>) -> T {
    abs2(z).sqrt()
}

/// Scales an `f64` tolerance to the precision of `T`, so that `1e-12`
/// stays `1e-12` for `f64` and becomes roughly `5e-4` for `f32`.
pub fn tol<T: Real>(f64_tol: f64) -> T {
    let eps_t = to_f64(T::default_epsilon());
    real(f64_tol * (eps_t / f64::EPSILON).max(1.0))
}

/// `exp(i * theta)`.
#[inline]
pub fn phase<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// `exp(2 pi i * num / den)`, reduced modulo `den` before conversion so the
/// angle stays small.
pub fn root_of_unity<T: Real>(num: i64, den: u64) -> Complex<T> {
    let den_i = den as i64;
    let r = num.rem_euclid(den_i);
    let theta = 2.0 * std::f64::consts::PI * (r as f64) / (den as f64);
    phase(real::<T>(theta))
}

/// Natural logarithm with the `0 log 0 = 0` convention; inputs below the
/// clip are treated as zero.
pub fn xlogx<T: Real>(x: T, clip: T) -> T {
    if x <= clip {
        T::zero()
    } else {
        x * x.ln()
    }
}

pub fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            return false;
        }
        p += 1;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_unity_close_the_circle() {
        let w: Complex<f64> = root_of_unity(1, 5);
        let mut acc = cone::<f64>();
        for _ in 0..5 {
            acc *= w;
        }
        assert!((acc - cone()).norm() < 1e-14);
        let neg: Complex<f64> = root_of_unity(-1, 5);
        assert!((neg * w - cone()).norm() < 1e-14);
    }

    #[test]
    fn gcd_and_primes() {
        assert_eq!(gcd(0, 6), 6);
        assert_eq!(gcd(4, 6), 2);
        let primes: Vec<usize> = (0..20).filter(|&n| is_prime(n)).collect();
        assert_eq!(primes, vec![2, 3, 5, 7, 11, 13, 17, 19]);
    }

    #[test]
    fn xlogx_convention() {
        assert_eq!(xlogx(0.0_f64, 1e-14), 0.0);
        assert!((xlogx(0.5_f64, 1e-14) - 0.5 * 0.5_f64.ln()).abs() < 1e-15);
        assert_eq!(xlogx(0.5_f32, 1e-7), 0.5 * 0.5_f32.ln());
    }
}
