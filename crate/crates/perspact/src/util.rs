use sha2::{Digest, Sha256};

/// Hex-encoded SHA-256 of a byte string. Used for observation hashes,
/// transcript request keys, and fixture pinning.
pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
