//! Subset construction producing a complete DFA.

use std::collections::HashMap;

use super::nfa::{Alphabet, Nfa};
use crate::error::{Error, Result};

pub const DEFAULT_STATE_BUDGET: usize = 10_000;

/// A complete DFA. Row-major transition table: `transitions[state * num_symbols + symbol]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    pub alphabet: Alphabet,
    pub transitions: Vec<usize>,
    pub finals: Vec<bool>,
    pub start: usize,
}

impl Dfa {
    pub fn num_symbols(&self) -> usize {
        self.alphabet.num_symbols()
    }

    pub fn len(&self) -> usize {
        self.finals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.finals.is_empty()
    }

    pub fn next(&self, state: usize, symbol: usize) -> usize {
        self.transitions[state * self.num_symbols() + symbol]
    }

    pub fn accepts_symbols(&self, symbols: &[usize]) -> bool {
        let end = symbols.iter().fold(self.start, |s, &c| self.next(s, c));
        self.finals[end]
    }
}

/// Determinizes `nfa`. The empty subset becomes an explicit sink whenever
/// it is reachable, so the result is total.
pub fn determinize(nfa: &Nfa, budget: usize) -> Result<Dfa> {
    let k = nfa.alphabet.num_symbols();
    let start = nfa.closure([nfa.start]);
    let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut sets = vec![start.clone()];
    ids.insert(start, 0);
    let mut transitions = Vec::new();
    let mut next = 0;
    while next < sets.len() {
        for sym in 0..k {
            let target = nfa.closure(nfa.advance(&sets[next], sym));
            let id = match ids.get(&target) {
                Some(&id) => id,
                None => {
                    if sets.len() >= budget {
                        return Err(Error::CapacityExceeded { limit: budget });
                    }
                    let id = sets.len();
                    ids.insert(target.clone(), id);
                    sets.push(target);
                    id
                }
            };
            transitions.push(id);
        }
        next += 1;
    }
    let finals = sets
        .iter()
        .map(|s| s.binary_search(&nfa.accept).is_ok())
        .collect();
    Ok(Dfa {
        alphabet: nfa.alphabet.clone(),
        transitions,
        finals,
        start: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::nfa::nfa_from_ast;
    use crate::regex::parse_regex;

    #[test]
    fn subset_construction_is_complete() {
        let nfa = nfa_from_ast(&parse_regex("a (b | c)*").unwrap());
        let dfa = determinize(&nfa, DEFAULT_STATE_BUDGET).unwrap();
        assert_eq!(dfa.transitions.len(), dfa.len() * dfa.num_symbols());
        assert!(dfa.transitions.iter().all(|&t| t < dfa.len()));
    }

    #[test]
    fn budget_is_enforced() {
        // (a|b)* a (a|b)^6 needs 2^7 subset states.
        let src = "(a | b)* a (a | b) (a | b) (a | b) (a | b) (a | b) (a | b)";
        let nfa = nfa_from_ast(&parse_regex(src).unwrap());
        assert!(matches!(
            determinize(&nfa, 50),
            Err(Error::CapacityExceeded { limit: 50 })
        ));
        assert!(determinize(&nfa, DEFAULT_STATE_BUDGET).unwrap().len() >= 128);
    }
}
