//! Per-replicate random streams split from one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `rep` at sample size `n`: SplitMix64 applied twice to
/// the master seed mixed with the stream id `(n << 32) | rep`.
pub fn replicate_seed(master: u64, n: usize, rep: usize) -> u64 {
    let stream = ((n as u64) << 32) | (rep as u64 & 0xFFFF_FFFF);
    splitmix64(splitmix64(master) ^ stream)
}

pub fn replicate_rng(master: u64, n: usize, rep: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replicate_seed(master, n, rep))
}

/// Worker pool with `threads` workers (`0` means rayon's default).
pub fn worker_pool(threads: usize) -> crate::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::ExperimentError::Pool(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::collections::HashSet;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let mut seen = HashSet::new();
        for n in [100, 500, 1000] {
            for rep in 0..200 {
                assert!(seen.insert(replicate_seed(7, n, rep)));
            }
        }
        assert_eq!(replicate_seed(7, 100, 3), replicate_seed(7, 100, 3));
        assert_ne!(replicate_seed(7, 100, 3), replicate_seed(8, 100, 3));
    }

    #[test]
    fn streams_reproduce() {
        let a: Vec<u64> = replicate_rng(1, 2, 3).random_iter().take(5).collect();
        let b: Vec<u64> = replicate_rng(1, 2, 3).random_iter().take(5).collect();
        assert_eq!(a, b);
    }
}
