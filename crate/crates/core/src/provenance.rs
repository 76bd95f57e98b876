//! Content hashes that tie reports to the tables and configuration used.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Short SHA-256 of the value's canonical JSON form.
///
/// Hashing the parsed value rather than file bytes makes the identity
/// independent of formatting and comments.
pub fn identity_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("serializable");
    let digest = Sha256::digest(&json);
    hex::encode(&digest[..8])
}
