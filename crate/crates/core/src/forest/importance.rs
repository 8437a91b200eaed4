use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ForestModel;
use crate::error::{Error, Result};
use crate::features::{FeatureFamily, LabeledSample, FEATURE_COUNT};

/// Shuffles per group are repeated this many times and averaged.
pub const REPETITIONS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureGroup {
    pub name: String,
    pub indices: Vec<usize>,
}

/// One group per feature family.
pub fn default_groups() -> Vec<FeatureGroup> {
    FeatureFamily::ALL
        .iter()
        .map(|f| FeatureGroup {
            name: f.name().to_string(),
            indices: f.indices().collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupImportance {
    pub name: String,
    /// Baseline accuracy minus mean accuracy with the group shuffled.
    pub importance: f64,
}

fn accuracy(model: &ForestModel, samples: &[LabeledSample], rows: impl Fn(usize) -> [f64; FEATURE_COUNT]) -> f64 {
    let correct = (0..samples.len())
        .filter(|&i| (model.proba(&rows(i)) > 0.5) == samples[i].vessel)
        .count();
    correct as f64 / samples.len() as f64
}

/// Accuracy drop when a group's columns are jointly permuted across samples,
/// ranked from most to least important. Equal drops keep the input order.
pub fn permutation_importance(
    model: &ForestModel,
    samples: &[LabeledSample],
    groups: &[FeatureGroup],
    seed: u64,
) -> Result<Vec<GroupImportance>> {
    if samples.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    if let Some(bad) = groups.iter().flat_map(|g| &g.indices).find(|&&i| i >= FEATURE_COUNT) {
        return Err(Error::InvalidConfig(format!("feature index {bad} in group")));
    }
    let baseline = accuracy(model, samples, |i| samples[i].vector);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..samples.len()).collect();

    let mut ranked: Vec<GroupImportance> = groups
        .iter()
        .map(|group| {
            let mut total = 0.0;
            for _ in 0..REPETITIONS {
                perm.shuffle(&mut rng);
                total += accuracy(model, samples, |i| {
                    let mut v = samples[i].vector;
                    for &f in &group.indices {
                        v[f] = samples[perm[i]].vector[f];
                    }
                    v
                });
            }
            GroupImportance {
                name: group.name.clone(),
                importance: baseline - total / REPETITIONS as f64,
            }
        })
        .collect();
    ranked.sort_by(|a, b| b.importance.total_cmp(&a.importance));
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{train, ForestParams};
    use rand::Rng;

    fn data(seed: u64) -> Vec<LabeledSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..200)
            .map(|i| {
                let vessel = i % 2 == 1;
                let mut vector = [0.0; FEATURE_COUNT];
                for f in 1..FEATURE_COUNT {
                    vector[f] = rng.gen_range(-1.0..1.0);
                }
                vector[5] = 4.0;
                let mag = rng.gen_range(0.25..1.0);
                vector[0] = if vessel { mag } else { -mag };
                LabeledSample { vector, vessel }
            })
            .collect()
    }

    #[test]
    fn informative_feature_dominates() {
        let s = data(1);
        let m = train(&s, &ForestParams { n_trees: 10, seed: 2, ..Default::default() }).unwrap();
        let groups = vec![
            FeatureGroup { name: "signal".into(), indices: vec![0] },
            FeatureGroup { name: "constant".into(), indices: vec![5] },
        ];
        let ranked = permutation_importance(&m, &s, &groups, 3).unwrap();
        assert_eq!(ranked[0].name, "signal");
        assert!(ranked[0].importance > 0.3);
        assert_eq!(ranked[1].importance, 0.0);
    }

    #[test]
    fn unused_groups_score_zero() {
        let s = data(4);
        // depth-1 stumps can only use one feature: the informative one
        let m = train(
            &s,
            &ForestParams { n_trees: 5, max_depth: Some(1), mtry: FEATURE_COUNT, seed: 1, ..Default::default() },
        )
        .unwrap();
        let groups = vec![
            FeatureGroup { name: "a".into(), indices: vec![10, 11] },
            FeatureGroup { name: "b".into(), indices: vec![20] },
        ];
        let ranked = permutation_importance(&m, &s, &groups, 9).unwrap();
        assert!(ranked.iter().all(|g| g.importance == 0.0));
        assert_eq!(ranked[0].name, "a");
    }

    #[test]
    fn empty_eval_set() {
        let s = data(5);
        let m = train(&s, &ForestParams { n_trees: 2, ..Default::default() }).unwrap();
        assert!(matches!(
            permutation_importance(&m, &[], &default_groups(), 0),
            Err(Error::EmptyEvalSet)
        ));
        assert_eq!(default_groups().len(), 9);
    }
}
