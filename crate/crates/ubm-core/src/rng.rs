//! Reproducible stream derivation.
//!
//! A [`SeedTree`] is a master seed plus a derivation path of `(label, index)`
//! pairs. Each node deterministically keys its own ChaCha stream, so worker
//! scheduling can never change which random numbers a sample sees.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;
use num_complex::Complex64;
use rand_chacha::ChaCha12Rng;
use rand_core::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedTree {
    master: u64,
    path: Vec<(String, u64)>,
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn hash_label(label: &str) -> u64 {
    // FNV-1a over the label bytes.
    let mut h: u64 = 0xcbf29ce484222325;
    for b in label.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

impl SeedTree {
    pub fn new(master: u64) -> Self {
        SeedTree {
            master,
            path: Vec::new(),
        }
    }

    /// Child node for `(label, index)`; derivation is pure.
    pub fn child(&self, label: &str, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push((String::from(label), index));
        SeedTree {
            master: self.master,
            path,
        }
    }

    fn key_state(&self) -> u64 {
        let mut state = splitmix(self.master ^ 0x75626d6c61623031); // "ubmlab01"
        for (label, index) in &self.path {
            state = splitmix(state ^ hash_label(label));
            state = splitmix(state ^ index.wrapping_mul(0xa24baed4963ee407));
        }
        state
    }

    /// ChaCha stream for this node.
    pub fn rng(&self) -> ChaCha12Rng {
        let state = self.key_state();
        let mut key = [0u8; 32];
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            let w = splitmix(state ^ (i as u64).wrapping_mul(0xd6e8feb86659fd93));
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        ChaCha12Rng::from_seed(key)
    }

    /// Human-readable derivation path for reports and diagnostics.
    pub fn path_string(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:#018x}", self.master);
        for (label, index) in &self.path {
            let _ = write!(s, "/{label}[{index}]");
        }
        s
    }
}

#[inline]
pub fn standard_normal(rng: &mut ChaCha12Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform in `[0, 1)`.
#[inline]
pub fn uniform(rng: &mut ChaCha12Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64) * (1.0 / 9007199254740992.0)
}

/// Standard complex Gaussian with `E|z|^2 = 1`.
#[inline]
pub fn complex_gaussian(rng: &mut ChaCha12Rng) -> Complex64 {
    Complex64::new(standard_normal(rng), standard_normal(rng)) * core::f64::consts::FRAC_1_SQRT_2
}
