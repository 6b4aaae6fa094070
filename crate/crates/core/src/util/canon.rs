//! Canonical JSON serialization and payload hashing.
//!
//! All graph files and cassette keys go through this module so that the same
//! logical value always produces the same bytes. `serde_json`'s default map
//! is ordered, which gives sorted keys for free once a value is round-tripped
//! through [`serde_json::Value`].

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Convert any serializable value to a `Value` with sorted object keys.
pub fn to_canonical_value<T: Serialize>(value: &T) -> Result<Value> {
    Ok(serde_json::to_value(value)?)
}

/// Compact canonical JSON (sorted keys, no whitespace).
pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(&to_canonical_value(value)?)?)
}

/// Pretty canonical JSON (sorted keys, two-space indent, trailing newline).
///
/// This is the on-disk format for every graph, plan, decision, and report
/// file the crate writes.
pub fn to_canonical_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&to_canonical_value(value)?)?;
    s.push('\n');
    Ok(s)
}

/// Hex SHA-256 of the compact canonical form.
///
/// Key-order independent: two payloads that differ only in object key order
/// hash identically.
pub fn payload_hash<T: Serialize>(value: &T) -> Result<String> {
    Ok(sha256_hex(to_canonical_string(value)?.as_bytes()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Stable 64-bit hash of a byte string (first 8 bytes of SHA-256).
pub fn stable_hash64(bytes: &[u8]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    u64::from_be_bytes(digest[..8].try_into().expect("sha256 is at least 8 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sorted_keys_in_output() {
        let v = json!({"zeta": 1, "alpha": 2, "mid": {"b": 1, "a": 2}});
        let s = to_canonical_string(&v).unwrap();
        assert_eq!(s, r#"{"alpha":2,"mid":{"a":2,"b":1},"zeta":1}"#);
    }

    #[test]
    fn hash_is_key_order_independent() {
        let a: Value = serde_json::from_str(r#"{"x":1,"y":[{"b":2,"a":3}]}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"y":[{"a":3,"b":2}],"x":1}"#).unwrap();
        assert_eq!(payload_hash(&a).unwrap(), payload_hash(&b).unwrap());
    }

    #[test]
    fn pretty_round_trip_is_stable() {
        let v = json!({"nodes": [{"id": "n1", "kind": "structure"}], "edges": []});
        let once = to_canonical_pretty(&v).unwrap();
        let reparsed: Value = serde_json::from_str(&once).unwrap();
        assert_eq!(once, to_canonical_pretty(&reparsed).unwrap());
    }
}
