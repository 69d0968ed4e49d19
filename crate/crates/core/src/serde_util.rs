//! JSON encoding of non-finite floats: `+inf`, `-inf` and NaN are written as
//! the strings `"inf"`, `"-inf"` and `"nan"`; finite values stay numbers.

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Encoded {
    Number(f64),
    Text(String),
}

fn encode(x: f64) -> Encoded {
    if x.is_finite() {
        Encoded::Number(x)
    } else if x.is_nan() {
        Encoded::Text("nan".into())
    } else if x > 0.0 {
        Encoded::Text("inf".into())
    } else {
        Encoded::Text("-inf".into())
    }
}

fn decode<E: de::Error>(e: Encoded) -> Result<f64, E> {
    match e {
        Encoded::Number(x) => Ok(x),
        Encoded::Text(s) => match s.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            other => Err(E::custom(format!(
                "expected a number or \"inf\", got {other:?}"
            ))),
        },
    }
}

pub mod float {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        encode(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        decode(Encoded::deserialize(d)?)
    }
}

pub mod float_vec {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(|x| encode(*x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Encoded>::deserialize(d)?
            .into_iter()
            .map(decode)
            .collect()
    }
}
