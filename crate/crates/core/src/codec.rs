// SPDX-License-Identifier: Apache-2.0

//! Canonical byte encoding used for every digest in the ledger.
//!
//! Rules: fields are written in declaration order, integers are big-endian
//! fixed width, byte strings and text carry a `u32` length prefix, optional
//! values carry a one-byte presence tag, and maps are walked in ascending key
//! order (all ledger maps are `BTreeMap`s, so iteration order is the key order).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest as _, Sha256};

/// A 32-byte SHA-256 digest.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0u8; 32]);

    pub fn of(bytes: &[u8]) -> Self {
        let mut h = Hasher::new();
        h.put(bytes);
        h.finish()
    }

    /// Digest of the canonical encoding of `value`, prefixed by a domain tag.
    pub fn of_canonical<T: Canonical + ?Sized>(domain: &str, value: &T) -> Self {
        let mut h = Hasher::new();
        domain.encode(&mut h);
        value.encode(&mut h);
        h.finish()
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", &hex::encode(self.0)[..12])
    }
}

#[derive(Debug, thiserror::Error)]
#[error("expected 64 hex characters: {0}")]
pub struct ParseDigestError(String);

impl FromStr for Digest {
    type Err = ParseDigestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|_| ParseDigestError(s.to_string()))?;
        Ok(Digest(out))
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Destination for canonical bytes.
pub trait Sink {
    fn put(&mut self, bytes: &[u8]);
}

impl Sink for Vec<u8> {
    fn put(&mut self, bytes: &[u8]) {
        self.extend_from_slice(bytes);
    }
}

/// Streaming SHA-256 sink, so large states hash without an intermediate buffer.
pub struct Hasher(Sha256);

impl Hasher {
    pub fn new() -> Self {
        Hasher(Sha256::new())
    }

    pub fn finish(self) -> Digest {
        Digest(self.0.finalize().into())
    }
}

impl Default for Hasher {
    fn default() -> Self {
        Self::new()
    }
}

impl Sink for Hasher {
    fn put(&mut self, bytes: &[u8]) {
        self.0.update(bytes);
    }
}

pub trait Canonical {
    fn encode<S: Sink>(&self, out: &mut S);

    fn to_canonical_bytes(&self) -> Vec<u8> {
        let mut v = Vec::new();
        self.encode(&mut v);
        v
    }
}

macro_rules! canonical_int {
    ($($t:ty),*) => {$(
        impl Canonical for $t {
            fn encode<S: Sink>(&self, out: &mut S) {
                out.put(&self.to_be_bytes());
            }
        }
    )*};
}

canonical_int!(u8, u16, u32, u64);

impl Canonical for usize {
    fn encode<S: Sink>(&self, out: &mut S) {
        (*self as u64).encode(out);
    }
}

impl Canonical for bool {
    fn encode<S: Sink>(&self, out: &mut S) {
        out.put(&[*self as u8]);
    }
}

impl Canonical for [u8] {
    fn encode<S: Sink>(&self, out: &mut S) {
        (self.len() as u32).encode(out);
        out.put(self);
    }
}

impl Canonical for str {
    fn encode<S: Sink>(&self, out: &mut S) {
        self.as_bytes().encode(out);
    }
}

impl Canonical for String {
    fn encode<S: Sink>(&self, out: &mut S) {
        self.as_str().encode(out);
    }
}

impl Canonical for Digest {
    fn encode<S: Sink>(&self, out: &mut S) {
        out.put(&self.0);
    }
}

impl<T: Canonical> Canonical for Option<T> {
    fn encode<S: Sink>(&self, out: &mut S) {
        match self {
            None => out.put(&[0]),
            Some(v) => {
                out.put(&[1]);
                v.encode(out);
            }
        }
    }
}

impl<T: Canonical> Canonical for Vec<T> {
    fn encode<S: Sink>(&self, out: &mut S) {
        (self.len() as u32).encode(out);
        for v in self {
            v.encode(out);
        }
    }
}

impl<T: Canonical> Canonical for BTreeSet<T> {
    fn encode<S: Sink>(&self, out: &mut S) {
        (self.len() as u32).encode(out);
        for v in self {
            v.encode(out);
        }
    }
}

impl<K: Canonical, V: Canonical> Canonical for BTreeMap<K, V> {
    fn encode<S: Sink>(&self, out: &mut S) {
        (self.len() as u32).encode(out);
        for (k, v) in self {
            k.encode(out);
            v.encode(out);
        }
    }
}

impl<T: Canonical + ?Sized> Canonical for &T {
    fn encode<S: Sink>(&self, out: &mut S) {
        (**self).encode(out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_are_big_endian_fixed_width() {
        assert_eq!(0x0102u16.to_canonical_bytes(), vec![1, 2]);
        assert_eq!(7u64.to_canonical_bytes(), vec![0, 0, 0, 0, 0, 0, 0, 7]);
    }

    #[test]
    fn strings_are_length_prefixed() {
        assert_eq!("ab".to_canonical_bytes(), vec![0, 0, 0, 2, b'a', b'b']);
        // "a" + "bc" must not collide with "ab" + "c"
        let mut x = Vec::new();
        "a".encode(&mut x);
        "bc".encode(&mut x);
        let mut y = Vec::new();
        "ab".encode(&mut y);
        "c".encode(&mut y);
        assert_ne!(x, y);
    }

    #[test]
    fn maps_walk_in_key_order() {
        let mut m = BTreeMap::new();
        m.insert(2u8, 20u8);
        m.insert(1u8, 10u8);
        assert_eq!(m.to_canonical_bytes(), vec![0, 0, 0, 2, 1, 10, 2, 20]);
    }

    #[test]
    fn streaming_hash_matches_buffered() {
        let v: Vec<u64> = (0..100).collect();
        let mut h = Hasher::new();
        v.encode(&mut h);
        assert_eq!(h.finish(), Digest::of(&v.to_canonical_bytes()));
    }

    #[test]
    fn digest_hex_round_trip() {
        let d = Digest::of(b"chip");
        let s = d.to_string();
        assert_eq!(s.len(), 64);
        assert_eq!(s.parse::<Digest>().unwrap(), d);
        assert!("zz".parse::<Digest>().is_err());
    }
}
