//! FNV-1a hashing for deterministic content identifiers.
//!
//! Dimension member identifiers and store provenance fingerprints must be
//! reproducible across runs and platforms, so they are content hashes rather
//! than sequence numbers.

use alloc::format;
use alloc::string::String;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over a byte slice.
pub fn fnv1a_64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Hashes a sequence of string fields with a separator that cannot occur in
/// XML content, so `["ab","c"]` and `["a","bc"]` differ.
pub fn fnv1a_64_fields<'a>(fields: impl IntoIterator<Item = &'a str>) -> u64 {
    let mut hash = FNV_OFFSET;
    for field in fields {
        for &b in field.as_bytes() {
            hash ^= b as u64;
            hash = hash.wrapping_mul(FNV_PRIME);
        }
        hash ^= 0xff;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Fixed-width lowercase hex rendering.
pub fn hex16(hash: u64) -> String {
    format!("{hash:016x}")
}
