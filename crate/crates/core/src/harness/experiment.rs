use std::io::Write;
use std::time::Instant;

use super::dataset::Dataset;
use super::fewshot::sample_indices;
use crate::automata::{compile, Mdfa};
use crate::encoder::{encode_batch, EncodeOptions, SentenceFeatures};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::matcher::{run_trace_with, MatchMode, Sentence};
use crate::neural::{accuracy, train, Dims, Example, ModelParams, TrainConfig, Variant, Vocab};
use crate::regex::RuleSet;

pub const CSV_HEADER: [&str; 6] = ["variant", "q", "sample_seed", "train_seed", "accuracy", "wall_secs"];

/// Label of the first rule, in file order, that accepts the sentence.
pub fn rule_only_classify(
    rules: &RuleSet,
    mdfas: &[Mdfa],
    sentence: &Sentence,
    label_names: &[String],
    mode: MatchMode,
) -> Option<usize> {
    rules
        .iter()
        .zip(mdfas)
        .find(|(_, m)| run_trace_with(m, sentence, mode).accepted)
        .and_then(|(r, _)| label_names.iter().position(|l| *l == r.label))
}

/// No-match counts as wrong.
pub fn rule_only_accuracy(rules: &RuleSet, mdfas: &[Mdfa], dataset: &Dataset, mode: MatchMode, exec: Exec) -> f64 {
    if dataset.is_empty() {
        return 0.0;
    }
    let hits = exec.map(&dataset.samples, |s| {
        (rule_only_classify(rules, mdfas, &s.sentence, &dataset.label_names, mode) == Some(s.label)) as usize
    });
    hits.iter().sum::<usize>() as f64 / dataset.len() as f64
}

/// Pairs samples with their features, keeping only what `variant` reads.
pub fn examples_for(variant: Variant, dataset: &Dataset, features: &[SentenceFeatures]) -> Vec<Example> {
    dataset
        .samples
        .iter()
        .zip(features)
        .map(|(s, f)| Example {
            sentence: s.sentence.clone(),
            features: strip_features(variant, f),
            label: s.label,
        })
        .collect()
}

fn strip_features(variant: Variant, f: &SentenceFeatures) -> SentenceFeatures {
    match variant {
        Variant::Nnsc => SentenceFeatures::default(),
        Variant::Instance => SentenceFeatures {
            instance: f.instance.clone(),
            tags: Vec::new(),
        },
        Variant::Word => SentenceFeatures {
            instance: Vec::new(),
            tags: f.tags.clone(),
        },
    }
}

fn assert_feature_coherence(variant: Variant, examples: &[Example]) -> Result<()> {
    let leaked = examples.iter().any(|e| match variant {
        Variant::Nnsc => !e.features.instance.is_empty() || !e.features.tags.is_empty(),
        Variant::Instance => !e.features.tags.is_empty(),
        Variant::Word => !e.features.instance.is_empty(),
    });
    if leaked {
        return Err(Error::InvalidConfig(format!("{variant} run was given features it must not read")));
    }
    Ok(())
}

pub fn evaluate_accuracy(
    params: &ModelParams,
    rules: &RuleSet,
    mdfas: &[Mdfa],
    dataset: &Dataset,
    opts: EncodeOptions,
    exec: Exec,
) -> Result<f64> {
    let feats = encode_batch(rules, mdfas, &dataset.sentences(), opts, exec)?;
    accuracy(params, &examples_for(params.variant, dataset, &feats), exec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub variants: Vec<Variant>,
    pub qs: Vec<usize>,
    pub sample_seeds: Vec<u64>,
    pub train_seeds: Vec<u64>,
    pub augment_top3: Option<usize>,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub train: TrainConfig,
    pub encode: EncodeOptions,
    pub exec: Exec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            variants: Variant::ALL.to_vec(),
            qs: vec![5],
            sample_seeds: vec![0, 1, 2],
            train_seeds: vec![0, 1, 2, 3, 4],
            augment_top3: None,
            embed_dim: 16,
            hidden_dim: 16,
            train: TrainConfig::default(),
            encode: EncodeOptions::default(),
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub variant: Variant,
    pub q: usize,
    pub sample_seed: u64,
    pub train_seed: u64,
    pub outcome: std::result::Result<f64, String>,
    pub wall_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub variant: Variant,
    pub q: usize,
    pub runs: usize,
    pub mean: f64,
    /// 1.96 · sample std / √runs.
    pub ci95: f64,
    pub mean_wall_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentResults {
    pub rows: Vec<RunRow>,
    pub aggregates: Vec<Aggregate>,
}

impl ExperimentResults {
    pub fn aggregate(&self, variant: Variant, q: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.variant == variant && a.q == q)
    }

    /// Data rows followed by one aggregate row per (variant, q). Aggregate
    /// rows put `aggregate` in `sample_seed`, the 95% half-width in
    /// `train_seed`, the mean in `accuracy` and the mean time in
    /// `wall_secs`. Failed runs put `error` in `accuracy` and the message in
    /// `wall_secs`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            let (acc, wall) = match &r.outcome {
                Ok(a) => (format!("{a:.6}"), format!("{:.3}", r.wall_secs)),
                Err(msg) => ("error".to_string(), msg.clone()),
            };
            w.write_record([
                r.variant.name().to_string(),
                r.q.to_string(),
                r.sample_seed.to_string(),
                r.train_seed.to_string(),
                acc,
                wall,
            ])
            ?;
        }
        for a in &self.aggregates {
            w.write_record([
                a.variant.name().to_string(),
                a.q.to_string(),
                "aggregate".to_string(),
                format!("{:.6}", a.ci95),
                format!("{:.6}", a.mean),
                format!("{:.3}", a.mean_wall_secs),
            ])
            ?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

pub fn mean_ci95(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * var.sqrt() / n.sqrt())
}

fn aggregate(rows: &[RunRow], cfg: &ExperimentConfig) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for &variant in &cfg.variants {
        for &q in &cfg.qs {
            let group: Vec<&RunRow> = rows.iter().filter(|r| r.variant == variant && r.q == q).collect();
            let accs: Vec<f64> = group.iter().filter_map(|r| r.outcome.as_ref().ok().copied()).collect();
            if accs.is_empty() {
                continue;
            }
            let (mean, ci95) = mean_ci95(&accs);
            out.push(Aggregate {
                variant,
                q,
                runs: accs.len(),
                mean,
                ci95,
                mean_wall_secs: group.iter().map(|r| r.wall_secs).sum::<f64>() / group.len() as f64,
            });
        }
    }
    out
}

struct RunSpec {
    variant: Variant,
    q: usize,
    sample_seed: u64,
    train_seed: u64,
    index: usize,
}

/// Trains and evaluates every (variant, q, sample seed, train seed)
/// combination. Features of the full train and test sets are encoded once;
/// each run spot-checks one cached automaton against a fresh compilation.
pub fn run_experiment(
    rules: &RuleSet,
    mdfas: &[Mdfa],
    train_data: &Dataset,
    test_data: &Dataset,
    cfg: &ExperimentConfig,
) -> Result<ExperimentResults> {
    if cfg.variants.is_empty() || cfg.qs.is_empty() || cfg.sample_seeds.is_empty() || cfg.train_seeds.is_empty() {
        return Err(Error::InvalidConfig("variants, q values and seeds must be non-empty".into()));
    }
    if cfg.qs.contains(&0) {
        return Err(Error::InvalidConfig("q must be at least 1".into()));
    }
    if train_data.label_names != test_data.label_names {
        return Err(Error::InvalidConfig("train and test label sets differ".into()));
    }
    if rules.len() != mdfas.len() {
        return Err(Error::DimensionMismatch("rules and automata are not aligned".into()));
    }
    let train_feats = encode_batch(rules, mdfas, &train_data.sentences(), cfg.encode, cfg.exec)?;
    let test_feats = encode_batch(rules, mdfas, &test_data.sentences(), cfg.encode, cfg.exec)?;

    let mut specs = Vec::new();
    for &variant in &cfg.variants {
        for &q in &cfg.qs {
            for &sample_seed in &cfg.sample_seeds {
                for &train_seed in &cfg.train_seeds {
                    specs.push(RunSpec {
                        variant,
                        q,
                        sample_seed,
                        train_seed,
                        index: specs.len(),
                    });
                }
            }
        }
    }

    let inner = if cfg.exec.is_parallel() { Exec::Sequential } else { cfg.exec };
    let rows = cfg.exec.map(&specs, |spec| {
        let started = Instant::now();
        let outcome = run_one(rules, mdfas, train_data, test_data, &train_feats, &test_feats, spec, cfg, inner)
            .map_err(|e| e.to_string());
        RunRow {
            variant: spec.variant,
            q: spec.q,
            sample_seed: spec.sample_seed,
            train_seed: spec.train_seed,
            outcome,
            wall_secs: started.elapsed().as_secs_f64(),
        }
    });
    let aggregates = aggregate(&rows, cfg);
    Ok(ExperimentResults { rows, aggregates })
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    rules: &RuleSet,
    mdfas: &[Mdfa],
    train_data: &Dataset,
    test_data: &Dataset,
    train_feats: &[SentenceFeatures],
    test_feats: &[SentenceFeatures],
    spec: &RunSpec,
    cfg: &ExperimentConfig,
    exec: Exec,
) -> Result<f64> {
    if !rules.is_empty() {
        let k = spec.index % rules.len();
        if compile(&rules.rules()[k].ast)?.fingerprint() != mdfas[k].fingerprint() {
            return Err(Error::InvalidConfig(format!("cached automaton for rule {} is stale", k + 1)));
        }
    }

    let picked = sample_indices(train_data, spec.q, spec.sample_seed, cfg.augment_top3);
    let subset = Dataset {
        samples: picked.iter().map(|&i| train_data.samples[i].clone()).collect(),
        label_names: train_data.label_names.clone(),
    };
    let subset_feats: Vec<SentenceFeatures> = picked.iter().map(|&i| train_feats[i].clone()).collect();
    let train_set = examples_for(spec.variant, &subset, &subset_feats);
    let test_set = examples_for(spec.variant, test_data, test_feats);
    assert_feature_coherence(spec.variant, &train_set)?;
    assert_feature_coherence(spec.variant, &test_set)?;

    let dims = Dims {
        embed: cfg.embed_dim,
        hidden: cfg.hidden_dim,
        classes: train_data.num_classes(),
        rules: rules.len(),
        instance_width: mdfas.iter().map(Mdfa::state_count).sum(),
    };
    let vocab = Vocab::from_sentences(subset.samples.iter().map(|s| &s.sentence));
    let params = ModelParams::init(spec.variant, dims, vocab, spec.train_seed);
    let tcfg = TrainConfig {
        seed: spec.train_seed ^ 0x5eed_5eed,
        exec,
        ..cfg.train
    };
    let outcome = train(params, &train_set, None, &tcfg)?;
    if let Some(msg) = outcome.aborted {
        return Err(Error::Numerical(msg));
    }
    accuracy(&outcome.params, &test_set, exec)
}
