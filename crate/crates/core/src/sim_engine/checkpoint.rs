//! Versioned, checksummed binary snapshots of a running engine.
//!
//! Layout: 8-byte magic, little-endian `u32` version, `u64` payload length,
//! SHA-256 of the payload, payload.

use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"GRIDTWIN";
pub const VERSION: u32 = 1;
const HEADER: usize = 8 + 4 + 8 + 32;

pub fn wrap(payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&Sha256::digest(payload));
    out.extend_from_slice(payload);
    out
}

/// Verifies the envelope and returns the payload.
pub fn unwrap(bytes: &[u8]) -> Result<&[u8]> {
    if bytes.len() < HEADER {
        return Err(Error::CheckpointCorrupt(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::CheckpointCorrupt("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::CheckpointVersion {
            found: version,
            expected: VERSION,
        });
    }
    let len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    let payload = &bytes[HEADER..];
    if payload.len() != len {
        return Err(Error::CheckpointCorrupt(format!("payload is {} bytes, header says {len}", payload.len())));
    }
    if Sha256::digest(payload).as_slice() != &bytes[20..52] {
        return Err(Error::CheckpointCorrupt("checksum mismatch".into()));
    }
    Ok(payload)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_round_trip_and_damage() {
        let b = wrap(b"state");
        assert_eq!(unwrap(&b).unwrap(), b"state");
        assert!(matches!(unwrap(&b[..b.len() - 1]), Err(Error::CheckpointCorrupt(_))));
        let mut flipped = b.clone();
        *flipped.last_mut().unwrap() ^= 1;
        assert!(matches!(unwrap(&flipped), Err(Error::CheckpointCorrupt(_))));
        let mut v2 = b;
        v2[8] = 2;
        assert!(matches!(unwrap(&v2), Err(Error::CheckpointVersion { found: 2, .. })));
    }
}
