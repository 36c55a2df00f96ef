//! Seeded randomness. Every random step takes an explicit `u64` seed; a
//! master seed fans out to sub-seeds through a counter-based splitter.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the `i`-th sub-seed of `master`.
pub fn derive(master: u64, i: u64) -> u64 {
    splitmix(master ^ splitmix(i.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Counter-based seed splitter.
#[derive(Clone, Debug)]
pub struct Splitter {
    master: u64,
    counter: u64,
}

impl Splitter {
    pub fn new(master: u64) -> Self {
        Splitter { master, counter: 0 }
    }

    pub fn next_seed(&mut self) -> u64 {
        let s = derive(self.master, self.counter);
        self.counter += 1;
        s
    }

    pub fn next_rng(&mut self) -> Rng {
        rng(self.next_seed())
    }
}
