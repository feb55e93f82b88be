//! 64-bit FNV-1a over canonical text bytes.

const OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(OFFSET_BASIS, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}

/// Formats a digest as 16 lowercase hex characters.
pub fn to_hex(digest: u64) -> String {
    format!("{digest:016x}")
}

pub fn from_hex(s: &str) -> Option<u64> {
    if s.len() != 16 {
        return None;
    }
    u64::from_str_radix(s, 16).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn hex_round_trip() {
        let h = fnv1a64(b"lambda v1\n");
        assert_eq!(from_hex(&to_hex(h)), Some(h));
        assert_eq!(to_hex(1), "0000000000000001");
        assert_eq!(from_hex("abc"), None);
    }
}
