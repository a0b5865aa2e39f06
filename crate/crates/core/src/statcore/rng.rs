use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Addressable random stream: a `(seed, stream)` pair names one ChaCha8
/// keystream, so replication `r` draws the same numbers no matter which
/// thread runs it or in what order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn generator(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = self.seed;
        for chunk in key.chunks_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream);
        rng
    }

    /// Derive an independent child stream (for example one per model
    /// component inside a replication).
    pub fn split(&self, child: u64) -> RngStream {
        RngStream {
            seed: splitmix64(self.seed ^ splitmix64(self.stream.wrapping_add(0x5851_F42D))),
            stream: child,
        }
    }

    /// `count` standard normal draws from the start of the stream.
    pub fn normals(&self, count: usize) -> Vec<f64> {
        let mut rng = self.generator();
        (0..count).map(|_| rng.sample(StandardNormal)).collect()
    }
}

/// Standard normal draws for `stream`.
pub fn rng_normal(stream: RngStream, count: usize) -> Vec<f64> {
    stream.normals(count)
}
