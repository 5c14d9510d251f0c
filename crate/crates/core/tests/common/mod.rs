//! Oracles shared by the integration suites. Nothing here calls into the
//! compiled automata; it works on the AST and on raw DFA tables directly.

#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use rulefuse::automata::{Dfa, Mdfa};
use rulefuse::neural::{example_grad, FeatureView, ModelParams};
use rulefuse::{Sentence, WordRegexAst};

pub const WORDS: [&str; 3] = ["a", "b", "c"];
pub const OOV: &str = "zz";

/// End positions reachable by matching `ast` against `words[start..]`.
pub fn ends(ast: &WordRegexAst, words: &[&str], start: usize) -> BTreeSet<usize> {
    match ast {
        WordRegexAst::Literal(w) => {
            if words.get(start) == Some(&w.as_str()) {
                BTreeSet::from([start + 1])
            } else {
                BTreeSet::new()
            }
        }
        WordRegexAst::AnyWord => {
            if start < words.len() {
                BTreeSet::from([start + 1])
            } else {
                BTreeSet::new()
            }
        }
        WordRegexAst::Concat(cs) => cs.iter().fold(BTreeSet::from([start]), |acc, c| {
            acc.iter().flat_map(|&p| ends(c, words, p)).collect()
        }),
        WordRegexAst::Alternation(cs) => cs.iter().flat_map(|c| ends(c, words, start)).collect(),
        WordRegexAst::Star(c) => closure(c, words, BTreeSet::from([start])),
        WordRegexAst::Plus(c) => closure(c, words, ends(c, words, start)),
        WordRegexAst::Optional(c) => {
            let mut out = ends(c, words, start);
            out.insert(start);
            out
        }
    }
}

fn closure(c: &WordRegexAst, words: &[&str], seed: BTreeSet<usize>) -> BTreeSet<usize> {
    let mut seen = seed.clone();
    let mut todo: Vec<usize> = seed.into_iter().collect();
    while let Some(p) = todo.pop() {
        for e in ends(c, words, p) {
            if seen.insert(e) {
                todo.push(e);
            }
        }
    }
    seen
}

/// Classical membership of the whole sentence.
pub fn full_match(ast: &WordRegexAst, words: &[&str]) -> bool {
    ends(ast, words, 0).contains(&words.len())
}

/// Early-stop semantics: the shortest non-empty accepted prefix, or the
/// empty sentence when it is in the language. Returns (accepted, consumed).
pub fn prefix_match(ast: &WordRegexAst, words: &[&str]) -> (bool, usize) {
    if words.is_empty() {
        return (full_match(ast, words), 0);
    }
    let e = ends(ast, words, 0);
    match e.iter().find(|&&p| p >= 1) {
        Some(&p) => (true, p),
        None => (false, words.len()),
    }
}

/// Random AST with at most `depth` levels over `alphabet` plus AnyWord.
pub fn random_ast<R: Rng>(rng: &mut R, depth: usize, alphabet: &[&str]) -> WordRegexAst {
    let leaf = |rng: &mut R| {
        if rng.gen_bool(0.2) {
            WordRegexAst::AnyWord
        } else {
            WordRegexAst::Literal(alphabet.choose(rng).unwrap().to_string())
        }
    };
    if depth <= 1 || rng.gen_bool(0.25) {
        return leaf(rng);
    }
    match rng.gen_range(0..5) {
        0 | 1 => {
            let n = rng.gen_range(2..=3);
            WordRegexAst::Concat((0..n).map(|_| random_ast(rng, depth - 1, alphabet)).collect())
        }
        2 => {
            let n = rng.gen_range(2..=3);
            WordRegexAst::Alternation((0..n).map(|_| random_ast(rng, depth - 1, alphabet)).collect())
        }
        _ => {
            let child = Box::new(random_ast(rng, depth - 1, alphabet));
            match rng.gen_range(0..3) {
                0 => WordRegexAst::Star(child),
                1 => WordRegexAst::Plus(child),
                _ => WordRegexAst::Optional(child),
            }
        }
    }
}

pub fn ast_strategy(depth: u32) -> impl Strategy<Value = WordRegexAst> {
    let leaf = prop_oneof![
        4 => prop::sample::select(vec!["a", "b", "c", "show", "flights"]).prop_map(|w| WordRegexAst::Literal(w.into())),
        1 => Just(WordRegexAst::AnyWord),
    ];
    leaf.prop_recursive(depth, 48, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(WordRegexAst::Concat),
            prop::collection::vec(inner.clone(), 2..4).prop_map(WordRegexAst::Alternation),
            inner.clone().prop_map(|a| WordRegexAst::Star(Box::new(a))),
            inner.clone().prop_map(|a| WordRegexAst::Plus(Box::new(a))),
            inner.prop_map(|a| WordRegexAst::Optional(Box::new(a))),
        ]
    })
}

/// Every sentence of length 0..=max_len over the three words plus one OOV token.
pub fn all_sentences(max_len: usize) -> Vec<Vec<&'static str>> {
    let tokens: Vec<&str> = WORDS.iter().copied().chain([OOV]).collect();
    let mut out = vec![vec![]];
    let mut frontier: Vec<Vec<&str>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for t in &tokens {
                let mut x = s.clone();
                x.push(*t);
                next.push(x);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub fn sentence(words: &[&str]) -> Sentence {
    Sentence::from_words(words)
}

/// Moore table filling on a complete DFA: number of equivalence classes
/// among states reachable from the start.
pub fn moore_min_states(dfa: &Dfa) -> usize {
    let n = dfa.len();
    let k = dfa.num_symbols();
    let mut reach = vec![false; n];
    let mut q = VecDeque::from([dfa.start]);
    reach[dfa.start] = true;
    while let Some(s) = q.pop_front() {
        for c in 0..k {
            let t = dfa.next(s, c);
            if !reach[t] {
                reach[t] = true;
                q.push_back(t);
            }
        }
    }
    let states: Vec<usize> = (0..n).filter(|&s| reach[s]).collect();
    let mut marked = vec![vec![false; n]; n];
    for &p in &states {
        for &r in &states {
            marked[p][r] = dfa.finals[p] != dfa.finals[r];
        }
    }
    loop {
        let mut changed = false;
        for &p in &states {
            for &r in &states {
                if p < r && !marked[p][r] && (0..k).any(|c| marked[dfa.next(p, c)][dfa.next(r, c)]) {
                    marked[p][r] = true;
                    marked[r][p] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut reps: Vec<usize> = Vec::new();
    for &s in &states {
        if !reps.iter().any(|&r| !marked[r][s]) {
            reps.push(s);
        }
    }
    reps.len()
}

/// Shortest symbol string on which exactly one of `p`, `q` ends in a
/// final state, found by BFS over state pairs.
pub fn distinguishing_suffix(m: &Mdfa, p: usize, q: usize) -> Option<Vec<usize>> {
    let k = m.num_symbols();
    let n = m.state_count();
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n * n];
    let mut seen = vec![false; n * n];
    let mut queue = VecDeque::from([(p, q)]);
    seen[p * n + q] = true;
    while let Some((a, b)) = queue.pop_front() {
        if m.is_final(a) != m.is_final(b) {
            let mut word = Vec::new();
            let mut cur = a * n + b;
            while let Some((from, sym)) = prev[cur] {
                word.push(sym);
                cur = from;
            }
            word.reverse();
            return Some(word);
        }
        for c in 0..k {
            let (x, y) = (m.step_symbol(a, c), m.step_symbol(b, c));
            if !seen[x * n + y] {
                seen[x * n + y] = true;
                prev[x * n + y] = Some((a * n + b, c));
                queue.push_back((x, y));
            }
        }
    }
    None
}

/// Largest relative error between the analytic gradient and central
/// differences over every parameter. Errors are relative to
/// `max(|analytic|, |numeric|, floor)`.
pub fn max_grad_rel_error(
    params: &ModelParams,
    sentence: &Sentence,
    feats: FeatureView,
    label: usize,
    eps: f64,
    floor: f64,
) -> (f64, String) {
    let (_, grad) = example_grad(params, sentence, feats, label).unwrap();
    let mut analytic: Vec<Vec<f64>> = Vec::new();
    grad.for_each(|_, t| analytic.push(t.to_vec()));

    let mut worst = (0.0, String::new());
    let mut probe = params.clone();
    let mut offsets = Vec::new();
    params.weights.for_each(|name, t| offsets.push((name.to_string(), t.len())));
    for (ti, (name, len)) in offsets.iter().enumerate() {
        for (i, &a) in analytic[ti].iter().enumerate().take(*len) {
            let orig = get(&probe, ti, i);
            set(&mut probe, ti, i, orig + eps);
            let plus = example_grad(&probe, sentence, feats, label).unwrap().0;
            set(&mut probe, ti, i, orig - eps);
            let minus = example_grad(&probe, sentence, feats, label).unwrap().0;
            set(&mut probe, ti, i, orig);
            let numeric = (plus - minus) / (2.0 * eps);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            if rel > worst.0 {
                worst = (rel, format!("{name}[{i}]: analytic {a:e} numeric {numeric:e}"));
            }
        }
    }
    worst
}

fn get(p: &ModelParams, tensor: usize, i: usize) -> f64 {
    let mut v = 0.0;
    let mut ti = 0;
    p.weights.for_each(|_, t| {
        if ti == tensor {
            v = t[i];
        }
        ti += 1;
    });
    v
}

fn set(p: &mut ModelParams, tensor: usize, i: usize, value: f64) {
    let mut ti = 0;
    p.weights.for_each_mut(|_, t| {
        if ti == tensor {
            t[i] = value;
        }
        ti += 1;
    });
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct PopulationReport {
    pub expressions: usize,
    pub checks: usize,
    pub prefix_mismatches: usize,
    pub full_mismatches: usize,
    pub minimality_failures: usize,
    pub indistinguishable_pairs: usize,
}

/// Compiles `count` random expressions and checks each against the
/// backtracking matcher on every short sentence, against the Moore
/// oracle, and for pairwise distinguishability of its states.
pub fn check_population(count: usize, seed: u64) -> PopulationReport {
    use rand::SeedableRng;
    use rulefuse::automata::{compile, determinize, nfa_from_ast, DEFAULT_STATE_BUDGET};
    use rulefuse::matcher::run_trace_with;
    use rulefuse::MatchMode;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let sentences = all_sentences(5);
    let mut report = PopulationReport::default();
    for _ in 0..count {
        let ast = random_ast(&mut rng, 4, &WORDS);
        let mdfa = compile(&ast).expect("small expressions fit the budget");
        report.expressions += 1;
        for words in &sentences {
            let s = sentence(words);
            let t = run_trace_with(&mdfa, &s, MatchMode::EarlyStop);
            if (t.accepted, t.consumed) != prefix_match(&ast, words) {
                report.prefix_mismatches += 1;
            }
            let full = run_trace_with(&mdfa, &s, MatchMode::Full);
            if full.accepted != full_match(&ast, words) || mdfa.accepts_full(words) != full.accepted {
                report.full_mismatches += 1;
            }
            report.checks += 1;
        }
        let raw = determinize(&nfa_from_ast(&ast), DEFAULT_STATE_BUDGET).unwrap();
        if moore_min_states(&raw) != mdfa.state_count() {
            report.minimality_failures += 1;
        }
        for p in 0..mdfa.state_count() {
            for q in p + 1..mdfa.state_count() {
                if distinguishing_suffix(&mdfa, p, q).is_none() {
                    report.indistinguishable_pairs += 1;
                }
            }
        }
    }
    report
}

/// Random sentences run through random automata; every trace is encoded
/// and the feature invariants are checked. Returns (cases, failures).
pub fn check_encoding(cases: usize, seed: u64) -> (usize, Vec<String>) {
    use rand::SeedableRng;
    use rulefuse::automata::compile;
    use rulefuse::encoder::{encode_instance, encode_word_tags};
    use rulefuse::matcher::run_trace_with;
    use rulefuse::MatchMode;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let tokens = ["a", "b", "c", OOV];
    let mut failures = Vec::new();
    let mut ast = random_ast(&mut rng, 4, &WORDS);
    let mut mdfa = compile(&ast).unwrap();
    for case in 0..cases {
        if case % 20 == 0 {
            ast = random_ast(&mut rng, 4, &WORDS);
            mdfa = compile(&ast).unwrap();
        }
        let n = rng.gen_range(0..=8);
        let words: Vec<&str> = (0..n).map(|_| *tokens.choose(&mut rng).unwrap()).collect();
        let mode = if rng.gen_bool(0.5) { MatchMode::EarlyStop } else { MatchMode::Full };
        let trace = run_trace_with(&mdfa, &sentence(&words), mode);
        let m = mdfa.state_count();
        let u = encode_instance(0, &trace, m).unwrap();
        let v = encode_word_tags(0, &trace, n).unwrap();

        let mut fail = |what: &str| failures.push(format!("case {case} ({ast}, {words:?}): {what}"));
        if u.values.len() != m || v.tags.len() != n {
            fail("width");
        }
        if !u.values.iter().all(|&x| x == 0.0 || x == 1.0) || !v.tags.iter().all(|&x| x <= 1) {
            fail("non-binary value");
        }
        for s in 0..m {
            if (u.values[s] == 1.0) != trace.visited.contains(&s) {
                fail("instance vector is not the visited indicator");
            }
        }
        if !trace.accepted && v.tags.iter().any(|&x| x != 0) {
            fail("rejected trace has non-zero tags");
        }
        if trace.accepted {
            let ones = v.tags.iter().take_while(|&&x| x == 1).count();
            if ones != trace.consumed || v.tags[ones..].iter().any(|&x| x != 0) {
                fail("accepted tags are not a prefix of ones of length consumed");
            }
        }
        if mode == MatchMode::EarlyStop && trace.accepted {
            let expected = prefix_match(&ast, &words);
            if expected != (true, trace.consumed) {
                fail("early-stop trace disagrees with the backtracking matcher");
            }
        }
    }
    (cases, failures)
}

/// One finite-difference gradient check at d=4, h=3, C=3, p=2, n<=5 with
/// weights drawn from U(-1, 1).
pub fn gradient_case(seed: u64, variant: rulefuse::neural::Variant) -> (f64, String) {
    use rand::SeedableRng;
    use rulefuse::automata::compile_rules;
    use rulefuse::neural::{Dims, Vocab};
    use rulefuse::{encode_all, Exec, RuleSet};

    const VOCAB: [&str; 5] = ["show", "flights", "to", "boston", "fare"];
    let rules = RuleSet::parse("a\tshow (.)*\nb\t(.)* boston\n", None).unwrap();
    let mdfas = compile_rules(&rules, Exec::Sequential).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=5);
    let words: Vec<&str> = (0..n).map(|_| *VOCAB.choose(&mut rng).unwrap()).collect();
    let s = sentence(&words);
    let feats = encode_all(&rules, &mdfas, &s).unwrap();
    let dims = Dims {
        embed: 4,
        hidden: 3,
        classes: 3,
        rules: 2,
        instance_width: mdfas.iter().map(|m| m.state_count()).sum(),
    };
    let mut params = ModelParams::init(variant, dims, Vocab::from_words(VOCAB), seed);
    params.weights.for_each_mut(|_, t| {
        for v in t.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
    });
    let label = rng.gen_range(0..3);
    max_grad_rel_error(&params, &s, FeatureView::for_variant(variant, &feats), label, 1e-5, 1e-6)
}
