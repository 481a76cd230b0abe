//! Per-path random substreams.
//!
//! Path `i` of a run with master seed `s` draws its Brownian increments and
//! its claim arrivals from two independent ChaCha8 generators seeded with
//!
//! ```text
//! splitmix64(s ^ splitmix64(2i + k)),  k = 0 (Brownian), 1 (claims)
//! ```
//!
//! so a path's randomness depends only on `(s, i)`, never on which worker
//! runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Brownian = 0,
    Claims = 1,
}

/// The SplitMix64 finaliser.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream_seed(seed: u64, path: u64, stream: Stream) -> u64 {
    splitmix64(seed ^ splitmix64(path.wrapping_mul(2).wrapping_add(stream as u64)))
}

pub fn substream(seed: u64, path: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(seed, path, stream))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference generator seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(0x9E37_79B9_7F4A_7C15), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn streams_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for path in 0..1000 {
            for s in [Stream::Brownian, Stream::Claims] {
                assert!(seen.insert(substream_seed(7, path, s)));
            }
        }
        let a: u64 = substream(7, 3, Stream::Brownian).random();
        let b: u64 = substream(7, 3, Stream::Brownian).random();
        assert_eq!(a, b);
    }
}
