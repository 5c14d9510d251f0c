//! Rule-governed synthetic intent corpus.
//!
//! Each class owns a set of cue words and one rule `(.)* ( cue | cue | ... )`.
//! A sentence is a run of shared filler words with exactly one cue of its
//! class inserted at a random position, so exactly one rule accepts it. A
//! fraction `noise` of labels is then replaced by a different random class.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::{Dataset, Sample};
use crate::matcher::Sentence;
use crate::regex::{parse_regex, RuleSet};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub classes: usize,
    pub cues_per_class: usize,
    pub fillers: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            classes: 6,
            cues_per_class: 8,
            fillers: 40,
            train_per_class: 100,
            test_per_class: 50,
            min_len: 4,
            max_len: 10,
            noise: 0.1,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub rules: RuleSet,
    pub train: Dataset,
    pub test: Dataset,
}

const SYLLABLES: &[&str] = &[
    "ba", "ko", "ri", "te", "mu", "sa", "lo", "ne", "vi", "da", "pe", "zu", "fa", "gi", "ho", "ja",
];

fn pseudo_word(rng: &mut ChaCha8Rng, taken: &mut std::collections::HashSet<String>) -> String {
    loop {
        let n = rng.gen_range(2..=3);
        let w: String = (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect();
        if taken.insert(w.clone()) {
            return w;
        }
    }
}

pub fn generate(cfg: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut taken = std::collections::HashSet::new();
    let fillers: Vec<String> = (0..cfg.fillers).map(|_| pseudo_word(&mut rng, &mut taken)).collect();
    let cues: Vec<Vec<String>> = (0..cfg.classes)
        .map(|_| (0..cfg.cues_per_class).map(|_| pseudo_word(&mut rng, &mut taken)).collect())
        .collect();
    let label_names: Vec<String> = (0..cfg.classes).map(|c| format!("intent_{c}")).collect();

    let mut rules = RuleSet::new();
    for (c, words) in cues.iter().enumerate() {
        let source = format!("(.)* ( {} )", words.join(" | "));
        let ast = parse_regex(&source).expect("generated rule parses");
        rules.push(&label_names[c], &source, ast);
    }

    let mut split = |per_class: usize| -> Dataset {
        let mut samples = Vec::with_capacity(per_class * cfg.classes);
        for _ in 0..per_class {
            for (class, class_cues) in cues.iter().enumerate() {
                let len = rng.gen_range(cfg.min_len..=cfg.max_len.max(cfg.min_len));
                let mut words: Vec<&str> = (0..len.saturating_sub(1))
                    .map(|_| fillers.choose(&mut rng).unwrap().as_str())
                    .collect();
                let at = rng.gen_range(0..=words.len());
                words.insert(at, class_cues.choose(&mut rng).unwrap());
                let mut label = class;
                if cfg.classes > 1 && rng.gen_bool(cfg.noise.clamp(0.0, 1.0)) {
                    label = (class + rng.gen_range(1..cfg.classes)) % cfg.classes;
                }
                samples.push(Sample {
                    sentence: Sentence::from_words(words),
                    label,
                });
            }
        }
        Dataset {
            samples,
            label_names: label_names.clone(),
        }
    };
    let train = split(cfg.train_per_class);
    let test = split(cfg.test_per_class);
    SynthCorpus { rules, train, test }
}
