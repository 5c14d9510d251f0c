mod common;

use rulefuse::neural::Variant;

#[test]
fn analytic_gradients_match_central_differences() {
    for variant in Variant::ALL {
        for seed in 0..20 {
            let (err, at) = common::gradient_case(seed, variant);
            assert!(err < 1e-4, "{variant} seed {seed}: {err:e} at {at}");
        }
    }
}

#[test]
fn three_word_single_rule_binary_case() {
    use rand::{Rng, SeedableRng};
    use rulefuse::automata::compile_rules;
    use rulefuse::neural::{Dims, FeatureView, ModelParams, Vocab};
    use rulefuse::{encode_all, Exec, RuleSet, Sentence};

    let rules = RuleSet::parse("x\tshow (.)*\n", None).unwrap();
    let mdfas = compile_rules(&rules, Exec::Sequential).unwrap();
    let s = Sentence::new("show cheap flights");
    let feats = encode_all(&rules, &mdfas, &s).unwrap();
    let dims = Dims { embed: 4, hidden: 3, classes: 2, rules: 1, instance_width: mdfas[0].state_count() };
    for variant in Variant::ALL {
        let mut params = ModelParams::init(variant, dims, Vocab::from_words(["show", "cheap", "flights"]), 1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        params.weights.for_each_mut(|_, t| t.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0)));
        let (err, at) = common::max_grad_rel_error(&params, &s, FeatureView::for_variant(variant, &feats), 1, 1e-5, 1e-6);
        assert!(err < 1e-4, "{variant}: {err:e} at {at}");
    }
}
