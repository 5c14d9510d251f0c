//! State traces of sentences through a compiled rule.

use serde::{Deserialize, Serialize};

use crate::automata::{Mdfa, StateId};

/// A lowercased, whitespace-tokenized sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Sentence {
    words: Vec<String>,
}

impl Sentence {
    pub fn new(text: &str) -> Self {
        Sentence {
            words: text.split_whitespace().map(str::to_lowercase).collect(),
        }
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Sentence {
            words: words
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn text(&self) -> String {
        self.words.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MatchMode {
    /// Halt on the first final state entered.
    #[default]
    EarlyStop,
    /// Consume every word; accept iff the last state is final.
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    /// States entered after each consumed word. The start state only
    /// appears if it is re-entered.
    pub visited: Vec<StateId>,
    pub consumed: usize,
    pub accepted: bool,
}

pub fn run_trace(mdfa: &Mdfa, sentence: &Sentence) -> Trace {
    run_trace_with(mdfa, sentence, MatchMode::EarlyStop)
}

pub fn run_trace_with(mdfa: &Mdfa, sentence: &Sentence, mode: MatchMode) -> Trace {
    let mut state = mdfa.start();
    let mut visited = Vec::with_capacity(sentence.len());
    for word in sentence.words() {
        state = mdfa.step(state, word);
        visited.push(state);
        if mode == MatchMode::EarlyStop && mdfa.is_final(state) {
            break;
        }
    }
    let accepted = mdfa.is_final(state);
    Trace {
        consumed: visited.len(),
        visited,
        accepted,
    }
}

pub fn accepts(mdfa: &Mdfa, sentence: &Sentence) -> bool {
    run_trace(mdfa, sentence).accepted
}
