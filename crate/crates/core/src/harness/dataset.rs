use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matcher::Sentence;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub sentence: Sentence,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub label_names: Vec<String>,
}

impl Dataset {
    /// Parses `label<TAB>sentence` lines. With `labels` the class order is
    /// fixed and unseen labels are errors; otherwise classes are numbered in
    /// first-appearance order.
    pub fn parse(text: &str, labels: Option<&[String]>) -> Result<Self> {
        let mut label_names: Vec<String> = labels.map(<[String]>::to_vec).unwrap_or_default();
        let mut index: HashMap<String, usize> = label_names
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        if index.len() != label_names.len() {
            return Err(Error::InvalidConfig("duplicate label names".into()));
        }
        let mut samples = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (label, text) = line.split_once('\t').ok_or_else(|| Error::MalformedLine {
                line: i + 1,
                message: "expected `label<TAB>sentence`".into(),
            })?;
            let label = label.trim();
            if label.is_empty() {
                return Err(Error::MalformedLine {
                    line: i + 1,
                    message: "empty label".into(),
                });
            }
            let sentence = Sentence::new(text);
            if sentence.is_empty() {
                return Err(Error::MalformedLine {
                    line: i + 1,
                    message: "empty sentence".into(),
                });
            }
            let id = match index.get(label) {
                Some(&id) => id,
                None if labels.is_some() => return Err(Error::UnknownLabel(label.to_string())),
                None => {
                    index.insert(label.to_string(), label_names.len());
                    label_names.push(label.to_string());
                    label_names.len() - 1
                }
            };
            samples.push(Sample { sentence, label: id });
        }
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Dataset {
            samples,
            label_names,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.label_names.iter().position(|l| l == name)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for s in &self.samples {
            counts[s.label] += 1;
        }
        counts
    }

    pub fn sentences(&self) -> Vec<Sentence> {
        self.samples.iter().map(|s| s.sentence.clone()).collect()
    }

    pub fn to_tsv(&self) -> String {
        self.samples
            .iter()
            .map(|s| format!("{}\t{}\n", self.label_names[s.label], s.sentence.text()))
            .collect()
    }
}

pub fn load_dataset(path: impl AsRef<Path>, labels: Option<&[String]>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Dataset::parse(&text, labels)
}

/// One label per line; blank lines skipped.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_in_first_appearance_order() {
        let d = Dataset::parse("flight\tShow me Flights\nairfare\thow much\nflight\tlist flights\n", None).unwrap();
        assert_eq!(d.label_names, vec!["flight", "airfare"]);
        assert_eq!(d.samples[2].label, 0);
        assert_eq!(d.samples[0].sentence.words(), &["show", "me", "flights"]);
        assert_eq!(d.class_counts(), vec![2, 1]);
    }

    #[test]
    fn fixed_labels_reject_unknown() {
        let labels = vec!["a".to_string()];
        assert!(matches!(
            Dataset::parse("b\tx y\n", Some(&labels)),
            Err(Error::UnknownLabel(l)) if l == "b"
        ));
    }

    #[test]
    fn malformed_and_empty() {
        assert!(matches!(Dataset::parse("", None), Err(Error::EmptyDataset)));
        assert!(matches!(
            Dataset::parse("ok\tfine\nno tab here\n", None),
            Err(Error::MalformedLine { line: 2, .. })
        ));
        assert!(matches!(
            Dataset::parse("ok\t   \n", None),
            Err(Error::MalformedLine { line: 1, .. })
        ));
    }
}
