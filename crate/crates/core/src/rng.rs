//! Keyed random streams.
//!
//! A [`SeedKey`] is a 256-bit key. Child keys are derived by hashing the
//! parent key with a purpose tag, so every consumer (a tree node, a trial, the
//! baseline) owns an independent stream and results do not depend on the order
//! in which work is scheduled.

use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedKey([u8; 32]);

impl std::fmt::Debug for SeedKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SeedKey(")?;
        for b in &self.0[..4] {
            write!(f, "{b:02x}")?;
        }
        write!(f, "..)")
    }
}

impl SeedKey {
    pub const fn from_bytes(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }

    /// Expands a 64-bit user seed into a full key.
    pub fn from_u64(seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"inftda/seed/v1");
        h.update(seed.to_le_bytes());
        Self(h.finalize().into())
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    /// Derives a child key for `tag`. Tags are length-prefixed, so distinct
    /// tag sequences never collide by concatenation.
    pub fn derive(&self, tag: &[u8]) -> Self {
        let mut h = Sha256::new();
        h.update(self.0);
        h.update((tag.len() as u64).to_le_bytes());
        h.update(tag);
        Self(h.finalize().into())
    }

    /// Key for tree node `prefix` at `level`.
    pub fn for_node(&self, level: usize, prefix: &[u32]) -> Self {
        let mut tag = Vec::with_capacity(9 + 4 * prefix.len());
        tag.push(b'N');
        tag.extend_from_slice(&(level as u64).to_le_bytes());
        for v in prefix {
            tag.extend_from_slice(&v.to_le_bytes());
        }
        self.derive(&tag)
    }

    /// Key for the `index`-th repetition of an experiment.
    pub fn for_trial(&self, index: u64) -> Self {
        let mut tag = vec![b'T'];
        tag.extend_from_slice(&index.to_le_bytes());
        self.derive(&tag)
    }

    pub fn stream(&self) -> RngStream {
        RngStream(ChaCha20Rng::from_seed(self.0))
    }
}

/// Deterministic ChaCha20 stream. Identical keys give identical sequences.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha20Rng);

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

impl CryptoRng for RngStream {}
