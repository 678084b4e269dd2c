use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent, reproducible substream `stream` of the generator seeded by
/// `seed`. Every stochastic step in the crate draws from one of these.
pub(crate) fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) mod streams {
    pub const WINDOW_SAMPLES: u64 = 1;
    pub const LOCAL_SAMPLES: u64 = 2;
    pub const MULTIPLICITY: u64 = 3;
    pub const PERTURB: u64 = 4;
    pub const AVOIDANCE: u64 = 5;
    pub const ARC_MC: u64 = 6;
    pub const REGIONS: u64 = 7;
    pub const VERIFY: u64 = 8;
    pub const VIOLATION: u64 = 9;
    pub const AVERAGES: u64 = 10;
}
