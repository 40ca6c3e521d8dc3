use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Site tags distinguishing independent uses of the same (particle, iteration).
pub mod site {
    pub const INIT: u64 = 1;
    pub const PROPAGATE: u64 = 2;
    pub const RESAMPLE: u64 = 3;
    pub const SIMULATE: u64 = 4;
    pub const CONTAMINATE: u64 = 5;
    pub const SPARSIFY: u64 = 6;
    pub const PRESET: u64 = 7;
    pub const TEST: u64 = 99;
}

/// Address of a random stream: a ChaCha key derived from (seed, iteration, site)
/// and the ChaCha stream id set to the particle index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub particle: u64,
    pub iteration: u64,
    pub site: u64,
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, particle: u64, iteration: u64, site: u64) -> Self {
        Self { seed, particle, iteration, site }
    }

    pub fn rng(&self) -> StreamRng {
        let mut state = self.seed;
        let a = splitmix(&mut state);
        let mut state = a ^ self.iteration.rotate_left(17);
        let b = splitmix(&mut state);
        let mut state = b ^ self.site.rotate_left(41);
        let mut key = [0u8; 32];
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.particle);
        rng
    }
}

/// Convenience for tests and generators that need a single stream.
pub fn stream(seed: u64, site: u64) -> StreamRng {
    RngStream::new(seed, 0, 0, site).rng()
}
