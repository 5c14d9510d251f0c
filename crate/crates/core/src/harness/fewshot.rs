use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FewShotConfig {
    /// Samples per class.
    pub q: usize,
    pub seeds: Vec<u64>,
    /// Extra samples drawn from each of the three most frequent classes.
    pub augment_top3: Option<usize>,
}

impl FewShotConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidConfig("q must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one sampling seed is required".into()));
        }
        Ok(())
    }
}

/// Indices into `dataset.samples` for one seed. Per class, `min(q, size)`
/// samples are drawn uniformly without replacement; when augmenting, the
/// three largest classes (ties to the lower class index) contribute up to
/// `extra` further samples each.
pub fn sample_indices(dataset: &Dataset, q: usize, seed: u64, augment_top3: Option<usize>) -> Vec<usize> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.num_classes()];
    for (i, s) in dataset.samples.iter().enumerate() {
        by_class[s.label].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for members in &mut by_class {
        members.shuffle(&mut rng);
    }

    let mut top: Vec<usize> = (0..by_class.len()).collect();
    top.sort_by(|&a, &b| by_class[b].len().cmp(&by_class[a].len()).then(a.cmp(&b)));
    top.truncate(3);

    let mut out = Vec::new();
    for (class, members) in by_class.iter().enumerate() {
        let mut take = q.min(members.len());
        if let Some(extra) = augment_top3 {
            if top.contains(&class) {
                take = (take + extra).min(members.len());
            }
        }
        out.extend_from_slice(&members[..take]);
    }
    out
}

pub fn sample_fewshot_one(dataset: &Dataset, q: usize, seed: u64, augment_top3: Option<usize>) -> Dataset {
    Dataset {
        samples: sample_indices(dataset, q, seed, augment_top3)
            .into_iter()
            .map(|i| dataset.samples[i].clone())
            .collect(),
        label_names: dataset.label_names.clone(),
    }
}

/// One few-shot training set per seed, in seed order.
pub fn sample_fewshot(dataset: &Dataset, config: &FewShotConfig) -> Result<Vec<Dataset>> {
    config.validate()?;
    Ok(config
        .seeds
        .iter()
        .map(|&s| sample_fewshot_one(dataset, config.q, s, config.augment_top3))
        .collect())
}
