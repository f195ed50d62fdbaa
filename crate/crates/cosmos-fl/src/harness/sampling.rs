//! Seeded run-subset sampling.
//!
//! For a run budget R, subsets of run indices are drawn uniformly without
//! replacement from each model's pool: a single-model sample takes R indices
//! from that model's pool, an ensemble sample takes exactly R/M indices per
//! member. Sampling is deterministic per seed.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::harness::HarnessError;

/// One sampled subset: run indices per model, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSample {
    pub indices: BTreeMap<String, Vec<u32>>,
}

/// Deterministic seed mix for named sampling streams.
pub(crate) fn mix_seed(base: u64, parts: &[&str], extra: u64) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for byte in part.as_bytes() {
            hash ^= u64::from(*byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        hash ^= 0xff;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash ^ base.rotate_left(17) ^ extra.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Draw `samples_per_r` run-index subsets for the given models.
///
/// `pool_sizes` gives each model's pool size. With one model the subset takes
/// `r` indices; with `m > 1` models it takes `r / m` per model (`r` must be
/// divisible by `m`, validated by the plan).
pub fn sample_runs(
    pool_sizes: &BTreeMap<String, usize>,
    models: &[String],
    r: usize,
    samples_per_r: usize,
    seed: u64,
) -> Result<Vec<RunSample>, HarnessError> {
    assert!(!models.is_empty(), "sampling requires at least one model");
    let per_model = if models.len() == 1 {
        r
    } else {
        debug_assert_eq!(r % models.len(), 0, "plan validation enforces R_M x M = R");
        r / models.len()
    };
    for model in models {
        let pool = pool_sizes.get(model).copied().unwrap_or(0);
        if per_model > pool {
            return Err(HarnessError::SampleExceedsPool {
                model: model.clone(),
                requested: per_model,
                pool,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(samples_per_r);
    for _ in 0..samples_per_r {
        let mut indices = BTreeMap::new();
        for model in models {
            let pool = pool_sizes[model];
            let mut drawn: Vec<u32> = rand::seq::index::sample(&mut rng, pool, per_model)
                .into_iter()
                .map(|i| i as u32)
                .collect();
            drawn.sort_unstable();
            indices.insert(model.clone(), drawn);
        }
        samples.push(RunSample { indices });
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pools(models: &[(&str, usize)]) -> BTreeMap<String, usize> {
        models
            .iter()
            .map(|(m, n)| (m.to_string(), *n))
            .collect()
    }

    #[test]
    fn full_pool_sample_is_the_whole_pool() {
        let pool_sizes = pools(&[("m", 30)]);
        let samples =
            sample_runs(&pool_sizes, &["m".to_string()], 30, 5, 1).unwrap();
        for sample in samples {
            let indices = &sample.indices["m"];
            assert_eq!(indices.len(), 30);
            assert_eq!(indices, &(0..30).collect::<Vec<u32>>());
        }
    }

    #[test]
    fn ensemble_allocates_equal_runs_per_member() {
        let names: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let pool_sizes = pools(&[("a", 30), ("b", 30), ("c", 30), ("d", 30)]);
        let samples = sample_runs(&pool_sizes, &names, 4, 3, 9).unwrap();
        for sample in samples {
            for model in &names {
                assert_eq!(sample.indices[model].len(), 1);
            }
        }
    }

    #[test]
    fn same_seed_reproduces_subsets() {
        let pool_sizes = pools(&[("a", 30), ("b", 30)]);
        let names: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let x = sample_runs(&pool_sizes, &names, 8, 20, 77).unwrap();
        let y = sample_runs(&pool_sizes, &names, 8, 20, 77).unwrap();
        assert_eq!(x, y);
        let z = sample_runs(&pool_sizes, &names, 8, 20, 78).unwrap();
        assert_ne!(x, z);
    }

    #[test]
    fn oversized_budget_is_rejected() {
        let pool_sizes = pools(&[("m", 10)]);
        let err = sample_runs(&pool_sizes, &["m".to_string()], 11, 1, 0).unwrap_err();
        assert!(matches!(err, HarnessError::SampleExceedsPool { .. }));
    }

    #[test]
    fn subsets_are_without_replacement() {
        let pool_sizes = pools(&[("m", 12)]);
        let samples = sample_runs(&pool_sizes, &["m".to_string()], 6, 50, 3).unwrap();
        for sample in samples {
            let indices = &sample.indices["m"];
            let mut dedup = indices.clone();
            dedup.dedup();
            assert_eq!(dedup.len(), 6);
            assert!(indices.iter().all(|&i| i < 12));
        }
    }
}
