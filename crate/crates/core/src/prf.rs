//! Keyed, counter-indexed pseudorandom function.
//!
//! Every random choice in the schedules is `prf_uniform(key, tag, v, j)`:
//! stateless, evaluable at any index, and fully determined by the 256-bit
//! master key. SipHash-2-4 is keyed with the first 128 key bits; the
//! remaining 128 bits are absorbed as message prefix.

use std::fmt;
use std::hash::Hasher;
use std::str::FromStr;

use siphasher::sip::SipHasher24;

use crate::error::{Error, Result};

/// Separates the independent random streams drawn from one key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamTag {
    /// Synchronizer bits.
    Sync = 0,
    /// Base transmission bits of the transmission schedule.
    TsSend = 1,
    /// Phase values of the transmission schedule.
    TsPhase = 2,
    /// Key derivation (candidate keys, per-trial keys).
    KeyDerive = 3,
    /// Instance generator seeds.
    Instance = 4,
}

/// A 256-bit master key, stored as four little-endian words.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MasterKey([u64; 4]);

impl MasterKey {
    pub const fn from_words(words: [u64; 4]) -> Self {
        Self(words)
    }

    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        let mut words = [0u64; 4];
        for (w, chunk) in words.iter_mut().zip(bytes.chunks_exact(8)) {
            *w = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        Self(words)
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for (chunk, w) in out.chunks_exact_mut(8).zip(self.0) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn words(&self) -> [u64; 4] {
        self.0
    }

    /// Parses exactly 64 hex characters.
    pub fn from_hex(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.len() != 64 {
            return Err(Error::InvalidKey(format!(
                "expected 64 hex characters, got {}",
                s.len()
            )));
        }
        let mut bytes = [0u8; 32];
        hex::decode_to_slice(s, &mut bytes).map_err(|e| Error::InvalidKey(e.to_string()))?;
        Ok(Self::from_bytes(bytes))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    /// First 16 hex characters; used to label rows and reports.
    pub fn fingerprint(&self) -> String {
        self.to_hex()[..16].to_string()
    }

    /// Child key number `index`, drawn from the key-derivation stream.
    pub fn derive(&self, index: u64) -> MasterKey {
        let mut words = [0u64; 4];
        for (j, w) in words.iter_mut().enumerate() {
            *w = prf_uniform(self, StreamTag::KeyDerive, index, j as u64);
        }
        MasterKey(words)
    }
}

impl Default for MasterKey {
    /// Bytes `00 01 02 .. 1f`.
    fn default() -> Self {
        let mut bytes = [0u8; 32];
        for (i, b) in bytes.iter_mut().enumerate() {
            *b = i as u8;
        }
        Self::from_bytes(bytes)
    }
}

impl fmt::Debug for MasterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MasterKey({})", self.to_hex())
    }
}

impl fmt::Display for MasterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for MasterKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_hex(s)
    }
}

/// 64-bit output of the keyed PRF at `(tag, v, j)`.
#[inline]
pub fn prf_uniform(key: &MasterKey, tag: StreamTag, v: u64, j: u64) -> u64 {
    let [k0, k1, k2, k3] = key.0;
    let mut msg = [0u8; 40];
    msg[0..8].copy_from_slice(&k2.to_le_bytes());
    msg[8..16].copy_from_slice(&k3.to_le_bytes());
    msg[16..24].copy_from_slice(&(tag as u64).to_le_bytes());
    msg[24..32].copy_from_slice(&v.to_le_bytes());
    msg[32..40].copy_from_slice(&j.to_le_bytes());
    let mut h = SipHasher24::new_with_keys(k0, k1);
    h.write(&msg);
    h.finish()
}

/// Maps a PRF output to `[0, 1)` using its top 53 bits.
#[inline]
pub fn unit_interval(u: u64) -> f64 {
    (u >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
