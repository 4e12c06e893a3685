//! Seeded random streams.
//!
//! Every Monte Carlo quantity is driven from one root seed. Sample `i` of an
//! estimator draws from stream `i` of a ChaCha8 generator keyed by the root
//! seed, so the value of a sample never depends on which worker thread
//! computed it or in what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A family of independent streams derived from a root seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamFamily {
    root: u64,
}

impl StreamFamily {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    /// A child family, used to separate the purposes of one experiment
    /// (e.g. word sampling vs. initial points).
    pub fn subfamily(&self, label: u64) -> Self {
        Self {
            root: splitmix64(self.root ^ splitmix64(label.wrapping_add(0x6a09_e667_f3bc_c909))),
        }
    }

    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root);
        rng.set_stream(index);
        rng
    }

    pub fn root(&self) -> u64 {
        self.root
    }
}

/// Uniform draw in `[0, 1)`.
#[inline]
pub fn uniform01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
