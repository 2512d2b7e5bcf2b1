use serde::{Deserialize, Serialize};

/// A real number stored as `mantissa · exp(log_scale)`.
///
/// Estimates carry a factor `exp((1/h)^λ/μ)` that overflows `f64` for small
/// bandwidths; the mantissa stays in range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledValue {
    #[serde(with = "crate::io::real")]
    pub mantissa: f64,
    #[serde(with = "crate::io::real")]
    pub log_scale: f64,
}

impl ScaledValue {
    pub fn new(mantissa: f64, log_scale: f64) -> Self {
        Self { mantissa, log_scale }
    }

    pub fn from_value(x: f64) -> Self {
        Self { mantissa: x, log_scale: 0.0 }
    }

    /// The represented number; `±inf` when it is not representable.
    pub fn value(&self) -> f64 {
        if self.mantissa == 0.0 {
            return 0.0;
        }
        self.mantissa * self.log_scale.exp()
    }

    /// `Some(value)` when finite.
    pub fn representable(&self) -> Option<f64> {
        let v = self.value();
        v.is_finite().then_some(v)
    }

    /// Natural log of `|value|`.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.abs().ln() + self.log_scale
    }

    pub fn mul(&self, other: &ScaledValue) -> ScaledValue {
        ScaledValue::new(self.mantissa * other.mantissa, self.log_scale + other.log_scale)
    }

    /// Rescales so that the exponent equals `log_scale`.
    pub fn with_log_scale(&self, log_scale: f64) -> ScaledValue {
        ScaledValue::new(self.mantissa * (self.log_scale - log_scale).exp(), log_scale)
    }
}
