//! Serde helpers that write exact rationals as `"p/q"` strings.

use serde::{de, Deserialize, Deserializer, Serializer};

use crate::mechanism::Prob;

pub fn serialize<S: Serializer>(value: &Prob, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.collect_str(value)
}

pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Prob, D::Error> {
    let text = String::deserialize(deserializer)?;
    text.trim()
        .parse()
        .map_err(|_| de::Error::custom(format!("not a rational: {text:?}")))
}
