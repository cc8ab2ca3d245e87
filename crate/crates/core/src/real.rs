//! Scalar abstraction for all pipeline math.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by scoring, ensembling, filtering, and metrics.
///
/// Implemented for `f32` and `f64`. The concrete aliases at the crate root fix
/// the pipeline default to `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` into this scalar. Conversions between `f32` and
    /// `f64` never fail; out-of-range values saturate to infinity.
    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).expect("f64 converts to any Real")
    }

    /// Converts this scalar to `f64` for reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("any Real converts to f64")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
}

/// Numerically stable log-softmax: returns `(probabilities, log_probabilities)`
/// of `values` normalized over the whole slice.
pub fn log_softmax<F: Real>(values: &[F]) -> (Vec<F>, Vec<F>) {
    assert!(!values.is_empty(), "log_softmax over empty slice");
    let max = values.iter().cloned().fold(F::neg_infinity(), F::max);
    let log_sum = values
        .iter()
        .map(|&v| (v - max).exp())
        .sum::<F>()
        .ln()
        + max;
    let log_probs: Vec<F> = values.iter().map(|&v| v - log_sum).collect();
    let probs: Vec<F> = log_probs.iter().map(|&lp| lp.exp()).collect();
    (probs, log_probs)
}

/// Cosine similarity between two equal-length vectors, or `None` when either
/// has zero norm.
pub fn cosine<F: Real>(a: &[F], b: &[F]) -> Option<F> {
    assert_eq!(a.len(), b.len(), "cosine over mismatched dimensions");
    let dot = a.iter().zip(b).map(|(&x, &y)| x * y).sum::<F>();
    let na = a.iter().map(|&x| x * x).sum::<F>().sqrt();
    let nb = b.iter().map(|&x| x * x).sum::<F>().sqrt();
    if na.is_zero() || nb.is_zero() {
        None
    } else {
        Some(dot / (na * nb))
    }
}
