//! JSON forms of series.
//!
//! A series is `{"degree": N, "coeffs": [[w, x, y, z], ...]}` with `N + 1`
//! coefficients, plus `"truncated": true` for the head of an infinite series.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quat::Quaternion;
use crate::series::RegularSeries;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesJson {
    degree: usize,
    coeffs: Vec<Quaternion>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    truncated: bool,
}

impl TryFrom<SeriesJson> for RegularSeries {
    type Error = String;

    fn try_from(s: SeriesJson) -> std::result::Result<Self, String> {
        if s.coeffs.len() != s.degree + 1 {
            return Err(format!("coeffs has {} entries but degree is {}", s.coeffs.len(), s.degree));
        }
        if let Some(k) = s.coeffs.iter().position(|c| !c.is_finite()) {
            return Err(format!("coeffs[{k}] is not finite"));
        }
        Ok(RegularSeries::new(s.coeffs).with_truncated(s.truncated))
    }
}

impl Serialize for RegularSeries {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesJson { degree: self.degree(), coeffs: self.coeffs().to_vec(), truncated: self.is_truncated() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RegularSeries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        RegularSeries::try_from(SeriesJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Parses JSON, reporting the field path and position of the first error.
pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let at = if path.is_empty() || path == "." { String::new() } else { format!("at {path}: ") };
        Error::InvalidInput(format!("{at}{inner}"))
    })
}

pub fn series_from_json(text: &str) -> Result<RegularSeries> {
    from_json(text)
}

pub fn series_to_json(f: &RegularSeries) -> String {
    serde_json::to_string(f).expect("series serialization is infallible")
}
