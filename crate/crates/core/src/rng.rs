//! Seed derivation for deterministic parallel work.
//!
//! Task `t` of a job seeded with `base` always draws from
//! `ChaCha8Rng::seed_from_u64(mix(base, t))`, so results do not depend on how
//! tasks are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer applied to `base ⊕ golden·(task+1)`.
pub fn mix(base: u64, task: u64) -> u64 {
    let mut z = base ^ task.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn task_rng(base: u64, task: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(base, task))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn mix_separates_tasks() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|t| mix(7, t)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(mix(0, 0), mix(1, 0));
    }

    #[test]
    fn task_rng_is_reproducible() {
        let a: Vec<u64> = task_rng(3, 5).random_iter().take(8).collect();
        let b: Vec<u64> = task_rng(3, 5).random_iter().take(8).collect();
        assert_eq!(a, b);
    }
}
