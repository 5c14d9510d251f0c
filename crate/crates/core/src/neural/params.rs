use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Mat;
use crate::error::{Error, Result};
use crate::matcher::Sentence;

pub const INIT_RANGE: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Recurrent encoder, attention pooling, MLP. No rule features.
    Nnsc,
    /// Instance vectors concatenated to the pooled sentence vector.
    Instance,
    /// Word tags appended to each word embedding.
    Word,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Nnsc, Variant::Instance, Variant::Word];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Nnsc => "NNSC",
            Variant::Instance => "INSTANCE",
            Variant::Word => "WORD",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Variant::Nnsc => 0,
            Variant::Instance => 1,
            Variant::Word => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Variant::ALL.get(c as usize).copied()
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NNSC" => Ok(Variant::Nnsc),
            "INSTANCE" => Ok(Variant::Instance),
            "WORD" => Ok(Variant::Word),
            _ => Err(Error::InvalidConfig(format!("unknown variant {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    /// Word embedding width.
    pub embed: usize,
    /// Hidden width per direction.
    pub hidden: usize,
    pub classes: usize,
    /// Number of rules p.
    pub rules: usize,
    /// Sum of the rules' state counts.
    pub instance_width: usize,
}

impl Dims {
    pub fn recurrent_input(&self, variant: Variant) -> usize {
        match variant {
            Variant::Word => self.embed + self.rules,
            _ => self.embed,
        }
    }

    pub fn classifier_input(&self, variant: Variant) -> usize {
        match variant {
            Variant::Instance => 2 * self.hidden + self.instance_width,
            _ => 2 * self.hidden,
        }
    }
}

/// Word index with the OOV token at index 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    words: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocab {
    pub const UNK: &'static str = "<unk>";

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Vocab {
            words: vec![Self::UNK.to_string()],
            index: HashMap::new(),
        };
        v.index.insert(Self::UNK.to_string(), 0);
        for w in words {
            let w = w.as_ref();
            if !v.index.contains_key(w) {
                v.index.insert(w.to_string(), v.words.len());
                v.words.push(w.to_string());
            }
        }
        v
    }

    /// In first-appearance order over the sentences.
    pub fn from_sentences<'a>(sentences: impl IntoIterator<Item = &'a Sentence>) -> Self {
        Self::from_words(sentences.into_iter().flat_map(|s| s.words().iter()))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(0)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub(crate) fn rebuild_index(&mut self) {
        self.index = self
            .words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
    }
}

/// One LSTM direction. Gate rows are stacked `[input; forget; cell; output]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    pub w_x: Mat,
    pub w_h: Mat,
    pub b: Vec<f64>,
}

impl Lstm {
    fn zeros(input: usize, hidden: usize) -> Self {
        Lstm {
            w_x: Mat::zeros(4 * hidden, input),
            w_h: Mat::zeros(4 * hidden, hidden),
            b: vec![0.0; 4 * hidden],
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_h.cols
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub w: Mat,
    pub b: Vec<f64>,
}

/// All trainable tensors. Gradients use the same shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub embeddings: Mat,
    pub fwd: Lstm,
    pub bwd: Lstm,
    /// Bilinear attention matrix, 2h × 2h.
    pub attention: Mat,
    /// Hidden tanh layer then the C-way output layer.
    pub layers: Vec<Dense>,
}

impl Weights {
    pub fn zeros(variant: Variant, dims: &Dims, vocab_len: usize) -> Self {
        let h = dims.hidden;
        let input = dims.recurrent_input(variant);
        Weights {
            embeddings: Mat::zeros(vocab_len, dims.embed),
            fwd: Lstm::zeros(input, h),
            bwd: Lstm::zeros(input, h),
            attention: Mat::zeros(2 * h, 2 * h),
            layers: vec![
                Dense {
                    w: Mat::zeros(2 * h, dims.classifier_input(variant)),
                    b: vec![0.0; 2 * h],
                },
                Dense {
                    w: Mat::zeros(dims.classes, 2 * h),
                    b: vec![0.0; dims.classes],
                },
            ],
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.for_each_mut(|_, t| t.fill(0.0));
        z
    }

    /// Visits every tensor in a fixed order with a stable name.
    pub fn for_each<'a>(&'a self, mut f: impl FnMut(&str, &'a [f64])) {
        f("embeddings", &self.embeddings.data);
        for (dir, l) in [("fwd", &self.fwd), ("bwd", &self.bwd)] {
            f(&format!("{dir}.w_x"), &l.w_x.data);
            f(&format!("{dir}.w_h"), &l.w_h.data);
            f(&format!("{dir}.b"), &l.b);
        }
        f("attention", &self.attention.data);
        for (i, d) in self.layers.iter().enumerate() {
            f(&format!("layer{i}.w"), &d.w.data);
            f(&format!("layer{i}.b"), &d.b);
        }
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(&str, &mut [f64])) {
        f("embeddings", &mut self.embeddings.data);
        for (dir, l) in [("fwd", &mut self.fwd), ("bwd", &mut self.bwd)] {
            f(&format!("{dir}.w_x"), &mut l.w_x.data);
            f(&format!("{dir}.w_h"), &mut l.w_h.data);
            f(&format!("{dir}.b"), &mut l.b);
        }
        f("attention", &mut self.attention.data);
        for (i, d) in self.layers.iter_mut().enumerate() {
            f(&format!("layer{i}.w"), &mut d.w.data);
            f(&format!("layer{i}.b"), &mut d.b);
        }
    }

    /// `self += scale · other`; shapes must match.
    pub fn add_scaled(&mut self, scale: f64, other: &Weights) {
        let mut src = Vec::new();
        other.for_each(|_, t| src.push(t));
        let mut i = 0;
        self.for_each_mut(|_, t| {
            for (a, b) in t.iter_mut().zip(src[i]) {
                *a += scale * b;
            }
            i += 1;
        });
    }

    pub fn l2_norm(&self) -> f64 {
        let mut s = 0.0;
        self.for_each(|_, t| s += t.iter().map(|x| x * x).sum::<f64>());
        s.sqrt()
    }

    pub fn all_finite(&self) -> bool {
        let mut ok = true;
        self.for_each(|_, t| ok &= t.iter().all(|x| x.is_finite()));
        ok
    }

    pub fn scale(&mut self, s: f64) {
        self.for_each_mut(|_, t| t.iter_mut().for_each(|x| *x *= s));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub variant: Variant,
    pub dims: Dims,
    pub vocab: Vocab,
    pub weights: Weights,
}

impl ModelParams {
    /// Weights uniform in ±0.08, biases zero, drawn from a seeded stream in a
    /// fixed tensor order. Variants with equal shapes get equal values.
    pub fn init(variant: Variant, dims: Dims, vocab: Vocab, seed: u64) -> Self {
        let mut weights = Weights::zeros(variant, &dims, vocab.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        weights.for_each_mut(|name, t| {
            if !name.ends_with(".b") {
                t.iter_mut()
                    .for_each(|x| *x = rng.gen_range(-INIT_RANGE..INIT_RANGE));
            }
        });
        ModelParams {
            variant,
            dims,
            vocab,
            weights,
        }
    }

    /// Overwrites embeddings of known words from a text file with lines of
    /// `word v1 ... vd`. Returns how many rows were replaced.
    pub fn load_pretrained(&mut self, path: impl AsRef<Path>) -> Result<usize> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let d = self.dims.embed;
        let mut replaced = 0;
        for (i, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let values: Vec<f64> = parts
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::MalformedLine {
                    line: i + 1,
                    message: format!("bad float: {e}"),
                })?;
            if values.len() != d {
                return Err(Error::MalformedLine {
                    line: i + 1,
                    message: format!("expected {d} values, found {}", values.len()),
                });
            }
            let idx = self.vocab.get(&word.to_lowercase());
            if idx != 0 || word == Vocab::UNK {
                self.weights.embeddings.row_mut(idx).copy_from_slice(&values);
                replaced += 1;
            }
        }
        Ok(replaced)
    }

    pub fn num_parameters(&self) -> usize {
        let mut n = 0;
        self.weights.for_each(|_, t| n += t.len());
        n
    }
}
