//! Thompson construction over a word alphabet.

use std::collections::{BTreeMap, BTreeSet};

use crate::regex::WordRegexAst;

/// Word vocabulary of one expression. Symbol ids `0..len()` are the literal
/// words in sorted order; id `len()` is the reserved OTHER symbol that every
/// out-of-vocabulary word maps to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Alphabet {
    words: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Alphabet {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sorted: BTreeSet<String> = words.into_iter().map(Into::into).collect();
        let words: Vec<String> = sorted.into_iter().collect();
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Alphabet { words, index }
    }

    /// Number of literal words (excluding OTHER).
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn other(&self) -> usize {
        self.words.len()
    }

    /// Literal words plus OTHER.
    pub fn num_symbols(&self) -> usize {
        self.words.len() + 1
    }

    pub fn symbol(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(self.other())
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn name(&self, symbol: usize) -> &str {
        self.words.get(symbol).map(String::as_str).unwrap_or("OTHER")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Epsilon(usize),
    Symbol(usize, usize),
    /// Matches every symbol including OTHER.
    Any(usize),
}

#[derive(Debug, Clone)]
pub struct Nfa {
    pub alphabet: Alphabet,
    pub edges: Vec<Vec<Edge>>,
    pub start: usize,
    pub accept: usize,
}

struct Builder<'a> {
    alphabet: &'a Alphabet,
    edges: Vec<Vec<Edge>>,
}

impl Builder<'_> {
    fn state(&mut self) -> usize {
        self.edges.push(Vec::new());
        self.edges.len() - 1
    }

    fn eps(&mut self, from: usize, to: usize) {
        self.edges[from].push(Edge::Epsilon(to));
    }

    /// Returns the (entry, exit) pair of the fragment for `ast`.
    fn fragment(&mut self, ast: &WordRegexAst) -> (usize, usize) {
        match ast {
            WordRegexAst::Literal(w) => {
                let (s, a) = (self.state(), self.state());
                let sym = self.alphabet.symbol(w);
                self.edges[s].push(Edge::Symbol(sym, a));
                (s, a)
            }
            WordRegexAst::AnyWord => {
                let (s, a) = (self.state(), self.state());
                self.edges[s].push(Edge::Any(a));
                (s, a)
            }
            WordRegexAst::Concat(children) => {
                let mut frags = children.iter().map(|c| self.fragment(c)).collect::<Vec<_>>();
                for w in frags.windows(2) {
                    self.eps(w[0].1, w[1].0);
                }
                let first = frags.first().map(|f| f.0);
                let last = frags.pop().map(|f| f.1);
                match (first, last) {
                    (Some(s), Some(a)) => (s, a),
                    _ => {
                        let s = self.state();
                        (s, s)
                    }
                }
            }
            WordRegexAst::Alternation(children) => {
                let (s, a) = (self.state(), self.state());
                for c in children {
                    let (cs, ca) = self.fragment(c);
                    self.eps(s, cs);
                    self.eps(ca, a);
                }
                (s, a)
            }
            WordRegexAst::Star(child) => {
                let (s, a) = (self.state(), self.state());
                let (cs, ca) = self.fragment(child);
                self.eps(s, cs);
                self.eps(s, a);
                self.eps(ca, cs);
                self.eps(ca, a);
                (s, a)
            }
            WordRegexAst::Plus(child) => {
                let (cs, ca) = self.fragment(child);
                let a = self.state();
                self.eps(ca, cs);
                self.eps(ca, a);
                (cs, a)
            }
            WordRegexAst::Optional(child) => {
                let (s, a) = (self.state(), self.state());
                let (cs, ca) = self.fragment(child);
                self.eps(s, cs);
                self.eps(s, a);
                self.eps(ca, a);
                (s, a)
            }
        }
    }
}

pub fn nfa_from_ast(ast: &WordRegexAst) -> Nfa {
    let alphabet = Alphabet::from_words(ast.literals());
    let mut b = Builder {
        alphabet: &alphabet,
        edges: Vec::new(),
    };
    let (start, accept) = b.fragment(ast);
    let edges = b.edges;
    Nfa {
        alphabet,
        edges,
        start,
        accept,
    }
}

impl Nfa {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Epsilon closure of `set`, returned sorted.
    pub fn closure(&self, set: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let mut seen = vec![false; self.edges.len()];
        let mut stack: Vec<usize> = set.into_iter().collect();
        let mut out = Vec::new();
        while let Some(s) = stack.pop() {
            if std::mem::replace(&mut seen[s], true) {
                continue;
            }
            out.push(s);
            for e in &self.edges[s] {
                if let Edge::Epsilon(t) = *e {
                    if !seen[t] {
                        stack.push(t);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// States reachable from `set` by one `symbol` edge (before closure).
    pub fn advance(&self, set: &[usize], symbol: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for &s in set {
            for e in &self.edges[s] {
                match *e {
                    Edge::Symbol(sym, t) if sym == symbol => out.push(t),
                    Edge::Any(t) => out.push(t),
                    _ => {}
                }
            }
        }
        out
    }

    /// Classical whole-sequence membership by set simulation.
    pub fn accepts_symbols(&self, symbols: &[usize]) -> bool {
        let mut cur = self.closure([self.start]);
        for &sym in symbols {
            cur = self.closure(self.advance(&cur, sym));
        }
        cur.binary_search(&self.accept).is_ok()
    }
}
