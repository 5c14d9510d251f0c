//! Hopcroft partition refinement.

use super::dfa::Dfa;

/// Coarsest partition of the states of `dfa` compatible with acceptance and
/// transitions. Returns `block_of[state]` and the number of blocks.
pub fn hopcroft_partition(dfa: &Dfa) -> (Vec<usize>, usize) {
    let n = dfa.len();
    let k = dfa.num_symbols();
    if n == 0 {
        return (Vec::new(), 0);
    }

    // inverse[(target * k) + sym] = sources
    let mut inverse: Vec<Vec<usize>> = vec![Vec::new(); n * k];
    for s in 0..n {
        for c in 0..k {
            inverse[dfa.next(s, c) * k + c].push(s);
        }
    }

    let (fin, non): (Vec<usize>, Vec<usize>) = (0..n).partition(|&s| dfa.finals[s]);
    let mut blocks: Vec<Vec<usize>> = [fin, non].into_iter().filter(|b| !b.is_empty()).collect();
    let mut block_of = vec![0; n];
    for (b, members) in blocks.iter().enumerate() {
        for &s in members {
            block_of[s] = b;
        }
    }

    // Worklist of (splitter block, symbol) pairs.
    let mut queued: Vec<Vec<bool>> = vec![vec![false; k]; blocks.len()];
    let mut work: Vec<(usize, usize)> = Vec::new();
    let seed = if blocks.len() == 2 && blocks[1].len() < blocks[0].len() { 1 } else { 0 };
    work.extend((0..k).map(|c| (seed, c)));
    queued[seed].fill(true);

    let mut in_x = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut hits: Vec<Vec<usize>> = vec![Vec::new(); blocks.len()];

    while let Some((splitter, c)) = work.pop() {
        queued[splitter][c] = false;
        let mut x = Vec::new();
        for &t in &blocks[splitter] {
            for &s in &inverse[t * k + c] {
                if !in_x[s] {
                    in_x[s] = true;
                    x.push(s);
                }
            }
        }
        for &s in &x {
            let b = block_of[s];
            if hits[b].is_empty() {
                touched.push(b);
            }
            hits[b].push(s);
        }
        for b in touched.drain(..) {
            let moved = std::mem::take(&mut hits[b]);
            if moved.len() == blocks[b].len() {
                continue;
            }
            let new_id = blocks.len();
            blocks[b].retain(|s| !in_x[*s]);
            for &s in &moved {
                block_of[s] = new_id;
            }
            blocks.push(moved);
            hits.push(Vec::new());
            queued.push(vec![false; k]);
            #[allow(clippy::needless_range_loop)]
            for sym in 0..k {
                let pick = if queued[b][sym] || blocks[new_id].len() <= blocks[b].len() {
                    new_id
                } else {
                    b
                };
                if !queued[pick][sym] {
                    queued[pick][sym] = true;
                    work.push((pick, sym));
                }
            }
        }
        for s in x {
            in_x[s] = false;
        }
    }
    let count = blocks.len();
    (block_of, count)
}

/// Quotient of `dfa` by its Hopcroft partition.
pub fn quotient(dfa: &Dfa) -> Dfa {
    let (block_of, count) = hopcroft_partition(dfa);
    let k = dfa.num_symbols();
    let mut transitions = vec![usize::MAX; count * k];
    let mut finals = vec![false; count];
    for s in 0..dfa.len() {
        let b = block_of[s];
        if transitions[b * k] != usize::MAX {
            continue;
        }
        for c in 0..k {
            transitions[b * k + c] = block_of[dfa.next(s, c)];
        }
        finals[b] = dfa.finals[s];
    }
    Dfa {
        alphabet: dfa.alphabet.clone(),
        transitions,
        finals,
        start: block_of[dfa.start],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::nfa::Alphabet;

    fn dfa(k_words: &[&str], rows: &[&[usize]], finals: &[bool]) -> Dfa {
        Dfa {
            alphabet: Alphabet::from_words(k_words.iter().copied()),
            transitions: rows.iter().flat_map(|r| r.iter().copied()).collect(),
            finals: finals.to_vec(),
            start: 0,
        }
    }

    #[test]
    fn merges_equivalent_states() {
        // States 1 and 2 both accept and both go to the sink 3.
        let d = dfa(
            &["a"],
            &[&[1, 2], &[3, 3], &[3, 3], &[3, 3]],
            &[false, true, true, false],
        );
        let (_, count) = hopcroft_partition(&d);
        assert_eq!(count, 3);
    }

    #[test]
    fn all_final_collapses_to_one() {
        let d = dfa(&["a"], &[&[1, 0], &[0, 1]], &[true, true]);
        let q = quotient(&d);
        assert_eq!(q.len(), 1);
        assert!(q.finals[0]);
    }
}
