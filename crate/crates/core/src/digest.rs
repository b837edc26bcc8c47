//! Content hashes for configurations and tables.

use sha2::{Digest, Sha256};

/// Git-style object hash: SHA-256 of `"blob {len}\0"` followed by the bytes,
/// as lowercase hex.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_empty_blob() {
        // `git hash-object --object-format=sha256 /dev/null`
        assert_eq!(
            blob_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }
}
