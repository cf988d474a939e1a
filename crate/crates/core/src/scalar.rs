//! Scalar abstraction shared by every estimator.
//!
//! The estimators are written once against [`Real`] and instantiated for
//! `f64` (the default used by the harness and CLI) or `f32`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01, StandardNormal};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + NumCast + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Draw from N(0, 1).
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw from the open interval (0, 1).
    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw from Gamma(shape, scale). Both parameters must be positive.
    fn sample_gamma<R: Rng + ?Sized>(shape: Self, scale: Self, rng: &mut R) -> Self;

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable as a float")
    }

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable as a float")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            #[inline]
            fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
                Open01.sample(rng)
            }

            #[inline]
            fn sample_gamma<R: Rng + ?Sized>(shape: Self, scale: Self, rng: &mut R) -> Self {
                Gamma::new(shape, scale)
                    .expect("gamma parameters validated by caller")
                    .sample(rng)
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn csum<T: Real, I: IntoIterator<Item = T>>(iter: I) -> T {
    iter.into_iter().collect::<CompensatedSum<T>>().value()
}

/// Sample mean and (n - 1)-denominator variance. `None` for the variance when
/// fewer than two values are given.
pub fn mean_var<T: Real>(values: &[T]) -> (T, Option<T>) {
    let n = values.len();
    if n == 0 {
        return (T::nan(), None);
    }
    let mean = csum(values.iter().copied()) / T::from_usize_lossy(n);
    if n < 2 {
        return (mean, None);
    }
    let ss = csum(values.iter().map(|&y| (y - mean) * (y - mean)));
    (mean, Some(ss / T::from_usize_lossy(n - 1)))
}
