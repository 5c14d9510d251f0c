//! Word-level regular-expression rules as features for a neural sentence
//! classifier.
//!
//! Rules are compiled to minimal complete DFAs ([`automata`]). Each sentence
//! is run through every rule ([`matcher`]) and the state traces become two
//! kinds of features ([`encoder`]): per-rule visited-state indicator
//! vectors, and per-word binary tags for accepting rules. The [`neural`]
//! classifier consumes either kind, and [`harness`] runs few-shot
//! experiments over all three model variants.

pub mod automata;
pub mod encoder;
pub mod error;
pub mod exec;
pub mod harness;
pub mod matcher;
pub mod neural;
pub mod regex;

pub use automata::{compile, Mdfa};
pub use encoder::{encode_all, EncodeOptions, InstanceFeature, SentenceFeatures, WordTagSeq};
pub use error::{Error, Result};
pub use exec::Exec;
pub use matcher::{accepts, run_trace, MatchMode, Sentence, Trace};
pub use regex::{load_rules, parse_regex, RuleSet, WordRegexAst};
