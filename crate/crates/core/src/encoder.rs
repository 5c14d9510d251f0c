//! Numeric features from rule traces.
//!
//! * Instance level: per rule, the indicator vector of the states the trace
//!   entered (the max-pool of their one-hot encodings). Length = rule's state
//!   count.
//! * Word level: per rule, one binary tag per word. Tags are 1 on the words
//!   consumed by an accepting trace and 0 otherwise; a rejecting trace yields
//!   all zeros.

use serde::{Deserialize, Serialize};

use crate::automata::Mdfa;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::matcher::{run_trace_with, MatchMode, Sentence, Trace};
use crate::regex::RuleSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFeature {
    pub rule_id: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordTagSeq {
    pub rule_id: usize,
    pub tags: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EncodeOptions {
    pub mode: MatchMode,
    /// Zero the instance vector of rejecting traces too.
    pub gate_instance: bool,
}

pub fn encode_instance(rule_id: usize, trace: &Trace, states: usize) -> Result<InstanceFeature> {
    let mut values = vec![0.0; states];
    for &s in &trace.visited {
        *values
            .get_mut(s)
            .ok_or(Error::IndexOutOfRange { state: s, states })? = 1.0;
    }
    Ok(InstanceFeature { rule_id, values })
}

pub fn encode_word_tags(rule_id: usize, trace: &Trace, len: usize) -> Result<WordTagSeq> {
    if trace.consumed > len {
        return Err(Error::LengthMismatch {
            consumed: trace.consumed,
            len,
        });
    }
    let mut tags = vec![0u8; len];
    if trace.accepted {
        tags[..trace.consumed].fill(1);
    }
    Ok(WordTagSeq { rule_id, tags })
}

/// Both feature forms for one sentence.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SentenceFeatures {
    pub instance: Vec<InstanceFeature>,
    pub tags: Vec<WordTagSeq>,
}

impl SentenceFeatures {
    /// `[u^1; ...; u^p]`
    pub fn instance_concat(&self) -> Vec<f64> {
        self.instance
            .iter()
            .flat_map(|u| u.values.iter().copied())
            .collect()
    }
}

pub fn encode_all(rules: &RuleSet, mdfas: &[Mdfa], sentence: &Sentence) -> Result<SentenceFeatures> {
    encode_all_with(rules, mdfas, sentence, EncodeOptions::default())
}

pub fn encode_all_with(
    rules: &RuleSet,
    mdfas: &[Mdfa],
    sentence: &Sentence,
    opts: EncodeOptions,
) -> Result<SentenceFeatures> {
    if rules.len() != mdfas.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rules but {} automata",
            rules.len(),
            mdfas.len()
        )));
    }
    let mut out = SentenceFeatures {
        instance: Vec::with_capacity(rules.len()),
        tags: Vec::with_capacity(rules.len()),
    };
    for (rule, mdfa) in rules.iter().zip(mdfas) {
        let trace = run_trace_with(mdfa, sentence, opts.mode);
        let mut u = encode_instance(rule.id, &trace, mdfa.state_count())?;
        if opts.gate_instance && !trace.accepted {
            u.values.fill(0.0);
        }
        out.instance.push(u);
        out.tags.push(encode_word_tags(rule.id, &trace, sentence.len())?);
    }
    Ok(out)
}

/// Features for many sentences, in input order.
pub fn encode_batch(
    rules: &RuleSet,
    mdfas: &[Mdfa],
    sentences: &[Sentence],
    opts: EncodeOptions,
    exec: Exec,
) -> Result<Vec<SentenceFeatures>> {
    exec.try_map(sentences, |s| encode_all_with(rules, mdfas, s, opts))
}
