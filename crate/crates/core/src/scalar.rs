use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar the numeric core is written against: `f32` or `f64`.
///
/// Missing feature values are represented by NaN, so only IEEE floats qualify.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum<Self>
    + for<'a> Sum<&'a Self>
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from `f64`; used for literals and random draws.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 representable in scalar")
    }

    /// Lossy conversion from a count.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// The missing-value marker.
    #[inline]
    fn missing() -> Self {
        Self::nan()
    }

    #[inline]
    fn is_missing(self) -> bool {
        self.is_nan()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Logistic sigmoid, numerically stable on both tails.
pub fn sigmoid<T: Scalar>(m: T) -> T {
    if m >= T::zero() {
        T::one() / (T::one() + (-m).exp())
    } else {
        let e = m.exp();
        e / (T::one() + e)
    }
}

/// Inverse of [`sigmoid`], clamped so that 0 and 1 map to finite margins.
pub fn logit<T: Scalar>(p: T) -> T {
    let eps = T::lit(1e-7);
    let p = p.max(eps).min(T::one() - eps);
    (p / (T::one() - p)).ln()
}

/// Population mean and standard deviation of the non-missing values.
pub fn mean_std<T: Scalar>(values: &[T]) -> Option<(T, T)> {
    let present: Vec<T> = values.iter().copied().filter(|v| !v.is_missing()).collect();
    if present.is_empty() {
        return None;
    }
    let n = T::from_count(present.len());
    let mean = present.iter().copied().sum::<T>() / n;
    let var = present.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    Some((mean, var.sqrt()))
}

/// Serde adapter writing non-finite scalars as the strings `"inf"`, `"-inf"`
/// and `"nan"`, which plain JSON numbers cannot express.
pub mod ext_float {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::Scalar;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<T: Scalar, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        let x = v.as_f64();
        let repr = if x.is_finite() {
            Repr::Num(x)
        } else if x.is_nan() {
            Repr::Text("nan".into())
        } else if x > 0.0 {
            Repr::Text("inf".into())
        } else {
            Repr::Text("-inf".into())
        };
        repr.serialize(s)
    }

    pub fn deserialize<'de, T: Scalar, D: Deserializer<'de>>(d: D) -> Result<T, D::Error> {
        let x = match Repr::deserialize(d)? {
            Repr::Num(x) => x,
            Repr::Text(t) => match t.as_str() {
                "inf" => f64::INFINITY,
                "-inf" => f64::NEG_INFINITY,
                "nan" => f64::NAN,
                other => return Err(serde::de::Error::custom(format!("bad float `{other}`"))),
            },
        };
        Ok(T::lit(x))
    }
}
