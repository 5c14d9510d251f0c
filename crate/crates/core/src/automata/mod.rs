//! Word-level regular expressions to minimal complete DFAs.
//!
//! The pipeline is Thompson construction ([`nfa_from_ast`]), subset
//! construction with an explicit sink ([`determinize`]), Hopcroft
//! refinement ([`minimize`]). The final automaton is renumbered
//! breadth-first from the start state, visiting symbols in ascending id
//! order, so compiling the same expression always gives identical tables
//! and the start state is always 0.

mod dfa;
mod minimize;
mod nfa;

use std::collections::hash_map::DefaultHasher;
use std::collections::VecDeque;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};

pub use dfa::{determinize, Dfa, DEFAULT_STATE_BUDGET};
pub use minimize::{hopcroft_partition, quotient};
pub use nfa::{nfa_from_ast, Alphabet, Edge, Nfa};

use crate::error::Result;
use crate::exec::Exec;
use crate::regex::{RuleSet, WordRegexAst};

pub type StateId = usize;

/// Minimal complete DFA with canonical state indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mdfa {
    alphabet: Alphabet,
    transitions: Vec<StateId>,
    finals: Vec<bool>,
    dead: Option<StateId>,
}

impl Mdfa {
    pub const START: StateId = 0;

    pub fn state_count(&self) -> usize {
        self.finals.len()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn num_symbols(&self) -> usize {
        self.alphabet.num_symbols()
    }

    pub fn start(&self) -> StateId {
        Self::START
    }

    pub fn is_final(&self, state: StateId) -> bool {
        self.finals[state]
    }

    pub fn finals(&self) -> impl Iterator<Item = StateId> + '_ {
        self.finals
            .iter()
            .enumerate()
            .filter_map(|(s, &f)| f.then_some(s))
    }

    /// The unique non-accepting sink, if the language leaves one reachable.
    pub fn dead(&self) -> Option<StateId> {
        self.dead
    }

    pub fn transitions(&self) -> &[StateId] {
        &self.transitions
    }

    pub fn step_symbol(&self, state: StateId, symbol: usize) -> StateId {
        self.transitions[state * self.num_symbols() + symbol]
    }

    /// Total transition function; unknown words go through OTHER.
    pub fn step(&self, state: StateId, word: &str) -> StateId {
        self.step_symbol(state, self.alphabet.symbol(word))
    }

    /// Classical whole-sentence membership.
    pub fn accepts_full<S: AsRef<str>>(&self, words: &[S]) -> bool {
        let end = words
            .iter()
            .fold(Self::START, |s, w| self.step(s, w.as_ref()));
        self.finals[end]
    }

    pub fn to_dfa(&self) -> Dfa {
        Dfa {
            alphabet: self.alphabet.clone(),
            transitions: self.transitions.clone(),
            finals: self.finals.clone(),
            start: Self::START,
        }
    }

    /// Renumbers the reachable part of `dfa` breadth-first from its start.
    /// Does not merge states; feed it a minimal DFA.
    pub fn canonical(dfa: &Dfa) -> Mdfa {
        let k = dfa.num_symbols();
        let mut order = vec![usize::MAX; dfa.len()];
        let mut queue = VecDeque::from([dfa.start]);
        let mut visited = vec![dfa.start];
        order[dfa.start] = 0;
        while let Some(s) = queue.pop_front() {
            for c in 0..k {
                let t = dfa.next(s, c);
                if order[t] == usize::MAX {
                    order[t] = visited.len();
                    visited.push(t);
                    queue.push_back(t);
                }
            }
        }
        let mut transitions = Vec::with_capacity(visited.len() * k);
        for &s in &visited {
            transitions.extend((0..k).map(|c| order[dfa.next(s, c)]));
        }
        let finals: Vec<bool> = visited.iter().map(|&s| dfa.finals[s]).collect();
        let dead = (0..visited.len())
            .find(|&s| !finals[s] && transitions[s * k..(s + 1) * k].iter().all(|&t| t == s));
        Mdfa {
            alphabet: dfa.alphabet.clone(),
            transitions,
            finals,
            dead,
        }
    }

    /// Stable-within-process hash of the canonical tables.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }

    /// Graphviz rendering. Finals are double circles, the sink is grey.
    pub fn to_dot(&self, name: &str) -> String {
        let k = self.num_symbols();
        let mut out = String::new();
        writeln!(out, "digraph \"{}\" {{", name.replace('"', "\\\"")).unwrap();
        writeln!(out, "  rankdir=LR;").unwrap();
        writeln!(out, "  __start [shape=point];").unwrap();
        for s in 0..self.state_count() {
            let mut label = s.to_string();
            let mut attrs = vec![];
            if self.finals[s] {
                label.push_str(" (final)");
                attrs.push("shape=doublecircle".to_string());
            } else {
                attrs.push("shape=circle".to_string());
            }
            if self.dead == Some(s) {
                label.push_str(" (dead)");
                attrs.push("style=filled, fillcolor=lightgrey".to_string());
            }
            writeln!(out, "  s{s} [label=\"{label}\", {}];", attrs.join(", ")).unwrap();
        }
        writeln!(out, "  __start -> s0;").unwrap();
        for s in 0..self.state_count() {
            // Group parallel edges into one labelled arrow.
            let mut by_target: Vec<(StateId, Vec<&str>)> = Vec::new();
            for c in 0..k {
                let t = self.step_symbol(s, c);
                match by_target.iter_mut().find(|(x, _)| *x == t) {
                    Some((_, names)) => names.push(self.alphabet.name(c)),
                    None => by_target.push((t, vec![self.alphabet.name(c)])),
                }
            }
            for (t, names) in by_target {
                writeln!(out, "  s{s} -> s{t} [label=\"{}\"];", names.join(" | ")).unwrap();
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Minimizes and canonically renumbers a complete DFA.
pub fn minimize(dfa: &Dfa) -> Mdfa {
    Mdfa::canonical(&quotient(dfa))
}

pub fn compile(ast: &WordRegexAst) -> Result<Mdfa> {
    compile_with_budget(ast, DEFAULT_STATE_BUDGET)
}

pub fn compile_with_budget(ast: &WordRegexAst, budget: usize) -> Result<Mdfa> {
    let nfa = nfa_from_ast(ast);
    let dfa = determinize(&nfa, budget)?;
    Ok(minimize(&dfa))
}

/// Compiles every rule, preserving rule order.
pub fn compile_rules(rules: &RuleSet, exec: Exec) -> Result<Vec<Mdfa>> {
    exec.try_map(rules.rules(), |r| compile(&r.ast))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regex::parse_regex;

    fn mdfa(src: &str) -> Mdfa {
        compile(&parse_regex(src).unwrap()).unwrap()
    }

    #[test]
    fn single_literal_has_start_final_dead() {
        let m = mdfa("a");
        assert_eq!(m.state_count(), 3);
        let fin = m.step(0, "a");
        assert!(m.is_final(fin));
        let dead = m.dead().unwrap();
        assert_eq!(m.step(0, "zzz"), dead);
        assert_eq!(m.step(fin, "a"), dead);
        for w in ["a", "b", "zzz"] {
            assert_eq!(m.step(dead, w), dead);
        }
        assert_eq!(m.finals().collect::<Vec<_>>(), vec![fin]);
    }

    #[test]
    fn frozen_state_counts() {
        // Moore table filling by hand on the subset DFAs.
        assert_eq!(mdfa("a a*").state_count(), 3);
        assert_eq!(mdfa("(a | b) (a | b)").state_count(), 4);
        assert_eq!(mdfa("a+").state_count(), 3);
    }

    #[test]
    fn universal_language_is_one_looping_state() {
        let m = mdfa("(.)*");
        assert_eq!(m.state_count(), 1);
        assert!(m.is_final(0));
        assert_eq!(m.dead(), None);
        assert_eq!(m.step(0, "anything"), 0);
    }

    #[test]
    fn canonical_order_is_bfs() {
        // symbols: from=0, to=1, OTHER=2
        let m = mdfa("from . to .");
        assert_eq!(m.start(), 0);
        assert_eq!(m.step(0, "from"), 1);
        assert_eq!(m.step(0, "to"), 2);
        assert_eq!(m.dead(), Some(2));
    }

    #[test]
    fn minimizing_a_minimal_dfa_is_a_fixed_point() {
        let m = mdfa("(a | b)* c (a | .)?");
        assert_eq!(minimize(&m.to_dfa()), m);
    }

    #[test]
    fn compilation_is_reproducible() {
        let src = "show me (.)* flights ( from | to ) .";
        let (a, b) = (mdfa(src), mdfa(src));
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn dot_marks_final_and_dead() {
        let dot = mdfa("a").to_dot("r1");
        assert!(dot.starts_with("digraph \"r1\""));
        assert!(dot.contains("(final)"));
        assert!(dot.contains("(dead)"));
        assert!(dot.contains("__start -> s0"));
    }
}
