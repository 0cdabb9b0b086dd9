use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst};

/// Real scalar used by the closed-form analysis.
pub trait Real: Float + FloatConst + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` literal; exact for `f64`, rounded for `f32`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl<T> Real for T where T: Float + FloatConst + Debug + Display + Send + Sync + 'static {}
