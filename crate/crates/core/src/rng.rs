//! Deterministic random streams for independent runs.
//!
//! Every run draws from its own ChaCha8 stream. The 256-bit key is expanded
//! from `(master seed, salt)` with splitmix64 and the 64-bit stream id is the
//! run index, so run `m` of a given experiment always sees the same numbers
//! regardless of how runs are scheduled across threads. The salt separates
//! grid points of a sweep; it is derived from the grid point's parameter
//! assignment, not from its position, so adding grid points leaves existing
//! streams untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every simulation stream.
pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One step of the splitmix64 output function.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit FNV-1a hash, used to turn a grid-point description into a salt.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Factory of per-run streams for one (master seed, salt) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    seed: u64,
    salt: u64,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self { seed, salt: 0 }
    }

    pub fn with_salt(seed: u64, salt: u64) -> Self {
        Self { seed, salt }
    }

    fn key(&self) -> [u8; 32] {
        let mut state = self.seed ^ self.salt.rotate_left(17).wrapping_mul(GOLDEN_GAMMA);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        key
    }

    /// The stream for run index `run`.
    pub fn stream(&self, run: u64) -> SimRng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(run);
        rng
    }
}

/// Shorthand for a single stream, mostly used by tests.
pub fn stream(seed: u64, run: u64) -> SimRng {
    StreamFactory::new(seed).stream(run)
}
