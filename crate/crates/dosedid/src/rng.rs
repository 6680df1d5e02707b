//! Counter-based seed derivation for reproducible parallelism.
//!
//! Every randomized task in the crate (a fold's nuisance fit, a single tree,
//! a bootstrap replicate, a Monte Carlo replication) receives its own RNG
//! stream whose seed is a pure function of the user's master seed and the
//! task's structural coordinates. Results therefore do not depend on thread
//! scheduling: the same master seed produces byte-identical output whether
//! the work runs on one thread or sixteen.
//!
//! Derivation hashes the master seed and a path of tags through the SplitMix64
//! finalizer, which is a bijective mixer with good avalanche behavior; the
//! derived value seeds a ChaCha8 stream. ChaCha8 is itself a counter-mode
//! generator, so independent streams never share state.

use rand_chacha::ChaCha8Rng;

/// Domain-separation tags for the independent random streams.
///
/// Each variant names one kind of randomized task; combining a tag with the
/// task's indices (fold, grid point, tree, replicate) yields that task's seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Shuffling rows before dealing them into folds.
    Folds = 1,
    /// Control-propensity learner.
    Propensity = 2,
    /// Smoothed conditional dose density learner (one per grid point).
    Density = 3,
    /// Control outcome-drift learner.
    Drift = 4,
    /// A single tree inside a forest.
    Tree = 5,
    /// Multiplier draws for one bootstrap replicate.
    Multiplier = 6,
    /// One Monte Carlo replication.
    Replication = 7,
    /// Drawing a synthetic dataset.
    Dgp = 8,
    /// Period indicators when pooling a panel into repeated cross-sections.
    Period = 9,
}

/// SplitMix64 finalizer: the standard 64-bit avalanche mixer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and a structural `path`
/// (e.g. `[Stream::Tree as u64, fold, grid_point, tree_index]`).
///
/// The chain `h <- splitmix64(h ^ splitmix64(tag))` folds each path element
/// into the state, so distinct paths yield (with overwhelming probability)
/// distinct, statistically independent seeds.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(master);
    for &tag in path {
        h = splitmix64(h ^ splitmix64(tag));
    }
    h
}

/// A ChaCha8 stream seeded by [`derive_seed`].
pub fn derive_rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derivation_is_deterministic() {
        let a = derive_seed(42, &[Stream::Tree as u64, 3, 1, 7]);
        let b = derive_seed(42, &[Stream::Tree as u64, 3, 1, 7]);
        assert_eq!(a, b);
    }

    #[test]
    fn paths_separate_streams() {
        let base = derive_seed(42, &[Stream::Tree as u64, 0]);
        assert_ne!(base, derive_seed(42, &[Stream::Tree as u64, 1]));
        assert_ne!(base, derive_seed(42, &[Stream::Drift as u64, 0]));
        assert_ne!(base, derive_seed(43, &[Stream::Tree as u64, 0]));
        // Path structure matters, not just the multiset of tags.
        assert_ne!(
            derive_seed(42, &[1, 2]),
            derive_seed(42, &[2, 1]),
            "tag order must be significant"
        );
    }

    #[test]
    fn derived_rngs_differ() {
        let mut r1 = derive_rng(9, &[Stream::Multiplier as u64, 0]);
        let mut r2 = derive_rng(9, &[Stream::Multiplier as u64, 1]);
        let draws1: Vec<u64> = (0..4).map(|_| r1.next_u64()).collect();
        let draws2: Vec<u64> = (0..4).map(|_| r2.next_u64()).collect();
        assert_ne!(draws1, draws2);
    }
}
