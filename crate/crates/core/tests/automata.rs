mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rulefuse::automata::{compile, compile_with_budget, determinize, nfa_from_ast, DEFAULT_STATE_BUDGET};
use rulefuse::matcher::run_trace_with;
use rulefuse::{parse_regex, run_trace, MatchMode, WordRegexAst};

#[test]
fn random_population_agrees_with_backtracking_and_moore() {
    let r = common::check_population(150, 7);
    assert_eq!(r.expressions, 150);
    assert_eq!(r.prefix_mismatches, 0, "{r:?}");
    assert_eq!(r.full_mismatches, 0, "{r:?}");
    assert_eq!(r.minimality_failures, 0, "{r:?}");
    assert_eq!(r.indistinguishable_pairs, 0, "{r:?}");
}

#[test]
fn hand_examples_match_moore_oracle() {
    for (src, states) in [("a", 3), ("a a *", 3), ("( a | b ) ( a | b )", 4), ("( . ) *", 1)] {
        let ast = parse_regex(src).unwrap();
        let raw = determinize(&nfa_from_ast(&ast), DEFAULT_STATE_BUDGET).unwrap();
        assert_eq!(common::moore_min_states(&raw), states, "{src}");
        assert_eq!(compile(&ast).unwrap().state_count(), states, "{src}");
    }
}

#[test]
fn route_example_trace() {
    let m = compile(&parse_regex("from . to .").unwrap()).unwrap();
    let t = run_trace(&m, &common::sentence(&["from", "boston", "to", "denver"]));
    assert!(t.accepted);
    assert_eq!(t.consumed, 4);
    assert!(m.is_final(*t.visited.last().unwrap()));
    let empty = run_trace(&m, &common::sentence(&[]));
    assert_eq!((empty.visited.len(), empty.consumed, empty.accepted), (0, 0, false));
}

#[test]
fn random_sentence_pairs_agree_with_prefix_oracle() {
    use rand::seq::SliceRandom;
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let tokens = ["a", "b", "c", "zz"];
    for _ in 0..100 {
        let ast = common::random_ast(&mut rng, 4, &common::WORDS);
        let m = compile(&ast).unwrap();
        let n = rng.gen_range(0..8);
        let words: Vec<&str> = (0..n).map(|_| *tokens.choose(&mut rng).unwrap()).collect();
        let t = run_trace_with(&m, &common::sentence(&words), MatchMode::EarlyStop);
        assert_eq!((t.accepted, t.consumed), common::prefix_match(&ast, &words), "{ast} on {words:?}");
    }
}

#[test]
fn budget_is_enforced() {
    let ast = parse_regex("( a | b ) * a ( a | b ) ( a | b ) ( a | b ) ( a | b )").unwrap();
    assert!(compile_with_budget(&ast, 8).is_err());
    let raw = determinize(&nfa_from_ast(&ast), DEFAULT_STATE_BUDGET).unwrap();
    // 2^5 suffix windows plus the sink reached on OTHER.
    assert_eq!(common::moore_min_states(&raw), 33);
    assert_eq!(compile(&ast).unwrap().state_count(), 33);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn unparse_round_trips(ast in common::ast_strategy(5)) {
        let text = ast.unparse();
        let reparsed = parse_regex(&text).unwrap();
        prop_assert_eq!(reparsed.unparse(), text);
        prop_assert_eq!(compile(&reparsed).unwrap(), compile(&ast).unwrap());
    }

    #[test]
    fn compilation_is_reproducible(ast in common::ast_strategy(4)) {
        let a = compile(&ast).unwrap();
        let b = compile(&ast).unwrap();
        prop_assert_eq!(a.fingerprint(), b.fingerprint());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn dead_state_is_a_sink(ast in common::ast_strategy(4)) {
        let m = compile(&ast).unwrap();
        if let Some(d) = m.dead() {
            prop_assert!(!m.is_final(d));
            for c in 0..m.num_symbols() {
                prop_assert_eq!(m.step_symbol(d, c), d);
            }
        }
    }
}

#[test]
fn literal_lowercasing_reaches_the_matcher() {
    let m = compile(&parse_regex("Show ME").unwrap()).unwrap();
    assert!(run_trace(&m, &rulefuse::Sentence::new("SHOW me flights")).accepted);
    let _: WordRegexAst = parse_regex("show").unwrap();
}
