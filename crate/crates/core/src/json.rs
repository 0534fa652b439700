//! JSON decoding that reports the path of the offending value.

use serde::de::DeserializeOwned;

use crate::error::{Error, Result};

pub fn from_str<T: DeserializeOwned>(src: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(src);
    let value = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        msg: e.inner().to_string(),
    })?;
    // Reject trailing garbage after the document.
    let mut tail = serde_json::Deserializer::from_str(src).into_iter::<serde_json::Value>();
    tail.next();
    if tail.next().is_some() {
        return Err(Error::Schema { path: ".".into(), msg: "trailing characters".into() });
    }
    Ok(value)
}

pub fn from_value<T: DeserializeOwned>(v: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        msg: e.inner().to_string(),
    })
}
