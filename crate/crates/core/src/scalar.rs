use std::fmt::Debug;
use std::ops::Neg;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Number type the analytic routines are written against.
///
/// Satisfied by `f32`, `f64` and the rational types from `num-rational`.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Neg<Output = Self> + FromPrimitive + ToPrimitive + Send + Sync
{
    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("integer is representable")
    }

    /// Converts an `f64` constant (a tolerance or a user-supplied probability).
    fn from_real(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 is representable")
    }

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn abs_value(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl<T> Scalar for T where
    T: Clone
        + Debug
        + PartialOrd
        + Num
        + Neg<Output = T>
        + FromPrimitive
        + ToPrimitive
        + Send
        + Sync
{
}

/// Scalars with square roots (needed for Kraus amplitudes).
pub trait Real: Scalar + Float {}

impl<T: Scalar + Float> Real for T {}

/// An expected waiting time that may diverge.
///
/// Exact scalar types have no infinity, so divergence is carried in-band.
#[derive(Debug, Clone, PartialEq)]
pub enum Expectation<T> {
    Finite(T),
    Infinite,
}

impl<T> Expectation<T> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Expectation::Infinite)
    }

    pub fn finite(self) -> Option<T> {
        match self {
            Expectation::Finite(v) => Some(v),
            Expectation::Infinite => None,
        }
    }

    pub fn map<U, F: FnOnce(T) -> U>(self, f: F) -> Expectation<U> {
        match self {
            Expectation::Finite(v) => Expectation::Finite(f(v)),
            Expectation::Infinite => Expectation::Infinite,
        }
    }
}

impl<T: Scalar> Expectation<T> {
    pub fn to_f64(&self) -> f64 {
        match self {
            Expectation::Finite(v) => v.as_f64(),
            Expectation::Infinite => f64::INFINITY,
        }
    }
}
