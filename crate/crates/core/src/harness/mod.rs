//! Experiment pipeline: datasets, few-shot sampling, the rule-only
//! baseline, and the train/evaluate grid that produces the results CSV.

mod dataset;
mod experiment;
mod fewshot;
pub mod synth;

pub use dataset::{load_dataset, load_labels, Dataset, Sample};
pub use experiment::{
    evaluate_accuracy, examples_for, mean_ci95, rule_only_accuracy, rule_only_classify, run_experiment,
    Aggregate, ExperimentConfig, ExperimentResults, RunRow, CSV_HEADER,
};
pub use fewshot::{sample_fewshot, sample_fewshot_one, sample_indices, FewShotConfig};
