//! Floating point abstraction shared by every numerical kernel in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar the enumeration, LP and mixture kernels are generic over.
///
/// Tolerances are tied to the precision of the type: the `f64` values are the
/// ones the crate is calibrated against, the `f32` values are loosened so that
/// small problems still enumerate and certify correctly in single precision.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Floor on the LP slack certificate: a cell with `eps <= interior_tol` is empty.
    fn interior_tol() -> Self;

    /// Smallest pivot magnitude accepted by the simplex kernel.
    fn pivot_tol() -> Self;

    /// Relative KKT violation the mixture solver iterates towards.
    fn kkt_target() -> Self;

    /// Relative KKT violation at which a mixture solve counts as converged.
    fn kkt_tol() -> Self;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn interior_tol() -> Self {
        1e-9
    }
    fn pivot_tol() -> Self {
        1e-11
    }
    fn kkt_target() -> Self {
        1e-12
    }
    fn kkt_tol() -> Self {
        1e-6
    }
}

impl Scalar for f32 {
    fn interior_tol() -> Self {
        1e-4
    }
    fn pivot_tol() -> Self {
        1e-5
    }
    fn kkt_target() -> Self {
        1e-5
    }
    fn kkt_tol() -> Self {
        1e-3
    }
}

/// Dot product of two equally long slices.
#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}
