mod support;

use std::collections::BTreeSet;

use magfuse_core::grammar::{binarize, load_grammar, save_grammar, seed_grammar, validate_grammar, Modality};
use magfuse_core::lexicon::{detect_cooperation, merge_streams, FusionConfig, MultimodalToken};
use magfuse_core::parser::{ParseOutcome, ParseTree, Parser};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use support::{all_strings, grammar_language, language, random_grammar, spoken};

const MODALITIES: [Modality; 4] = [
    Modality::Speech,
    Modality::Gesture,
    Modality::Handwriting,
    Modality::Sketch,
];

fn token_strategy() -> impl Strategy<Value = MultimodalToken> {
    (
        prop::sample::select(vec!["song", "this", "point", "cd", "help"]),
        0usize..4,
        0u64..3000,
        0u64..600,
        prop::sample::select(vec!["asr", "gr", "pen"]),
        prop::option::of(prop::sample::select(vec!["track_7", "hvac_icon"])),
    )
        .prop_map(|(v, m, t, d, src, target)| {
            let mut tok = MultimodalToken::new(v, MODALITIES[m], t, t + d).from_source(src);
            if tok.modality != Modality::Speech {
                tok.target_id = target.map(String::from);
            }
            tok
        })
}

fn stream_strategy() -> impl Strategy<Value = Vec<MultimodalToken>> {
    prop::collection::vec(token_strategy(), 0..6).prop_map(|mut v| {
        v.sort_by_key(|t| t.t_start);
        v
    })
}

fn check_mod_soundness(t: &ParseTree) {
    let below: BTreeSet<Modality> = t.leaf_modalities();
    assert!(t.mods().unwrap().is_subset(&below), "mod of {} exceeds its leaves", t.symbol);
    t.children.iter().for_each(check_mod_soundness);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn save_load_round_trip(seed in any::<u64>()) {
        let g = random_grammar(&mut StdRng::seed_from_u64(seed), 6, 10);
        prop_assume!(validate_grammar(&g).is_ok());
        let text = save_grammar(&g);
        prop_assert_eq!(load_grammar(&text).unwrap(), g);
    }

    #[test]
    fn binarization_preserves_language(seed in any::<u64>()) {
        let g = random_grammar(&mut StdRng::seed_from_u64(seed), 8, 10);
        let b = binarize(&g);
        prop_assert!(b.rules.iter().all(|r| matches!(r.rhs.len(), 1 | 2)));
        prop_assert!(b.synthetic.iter().all(|s| b.provenance.contains_key(s)));
        let rules: Vec<(String, Vec<String>)> =
            b.rules.iter().map(|r| (r.lhs.clone(), r.rhs.clone())).collect();
        let terminals: BTreeSet<&str> = b.terminals.iter().map(|t| t.name.as_str()).collect();
        let bin = language(&b.start, &rules, |s| terminals.contains(s), 6);
        // Binary pieces never exceed the source rule's length, so the bound
        // is the same on both sides.
        prop_assert_eq!(bin, grammar_language(&g, 6));
    }

    #[test]
    fn trees_invert_binarization(seed in any::<u64>()) {
        let g = random_grammar(&mut StdRng::seed_from_u64(seed), 4, 8);
        let parser = Parser::new(g.clone());
        for words in grammar_language(&g, 4).into_iter().take(12) {
            let s = spoken(&words);
            let trees = parser.trees(&s, 4).unwrap();
            prop_assert!(!trees.is_empty());
            for t in &trees {
                let frontier: Vec<String> = t.leaves().iter().map(|l| l.symbol.clone()).collect();
                prop_assert_eq!(&frontier, &words);
                prop_assert!(t.production_sequence().iter().all(|id| g.production(id).is_some()));
            }
            prop_assert_eq!(&parser.trees(&s, 4).unwrap(), &trees);
            let ParseOutcome::Parsed(first) = parser.parse(&s).unwrap() else {
                panic!("accepted sentence must parse");
            };
            check_mod_soundness(&first);
        }
    }

    #[test]
    fn merge_preserves_tokens(streams in prop::collection::vec(stream_strategy(), 0..4)) {
        let cfg = FusionConfig::default();
        let s = merge_streams(&streams, &cfg);
        prop_assert_eq!(s.len(), streams.iter().map(Vec::len).sum::<usize>());
        prop_assert!(s.coop_links.is_empty());
        let rank = |m: Modality| cfg.tie_break_order.iter().position(|&o| o == m).unwrap();
        for w in s.tokens.windows(2) {
            let key = |t: &MultimodalToken| (t.t_start, rank(t.modality), t.source_id.clone());
            prop_assert!(key(&w[0]) <= key(&w[1]));
        }
        let mut expected: Vec<MultimodalToken> = streams.concat();
        let mut got = s.tokens.clone();
        let order = |t: &MultimodalToken| (t.t_start, t.t_end, t.value.clone(), t.source_id.clone(), t.modality);
        expected.sort_by_key(order);
        got.sort_by_key(order);
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn cooperation_is_idempotent(streams in prop::collection::vec(stream_strategy(), 0..4)) {
        let cfg = FusionConfig::for_grammar(&seed_grammar());
        let merged = merge_streams(&streams, &cfg);
        let values: BTreeSet<String> = merged.tokens.iter().map(|t| t.normalized_value()).collect();
        let once = detect_cooperation(merged, &cfg);
        let twice = detect_cooperation(once.clone(), &cfg);
        prop_assert_eq!(&twice, &once);
        let after: BTreeSet<String> = once.tokens.iter().map(|t| t.normalized_value()).collect();
        prop_assert_eq!(after, values);
        prop_assert!(once.tokens.windows(2).all(|w| w[0].t_start <= w[1].t_start));
        for l in &once.coop_links {
            prop_assert!(l.a < l.b && l.b < once.tokens.len());
        }
    }
}

#[test]
fn seed_language_round_trip_and_exhaustive_parse() {
    let g = seed_grammar();
    assert_eq!(load_grammar(&save_grammar(&g)).unwrap(), g);
    let parser = Parser::new(g.clone());
    let lang = grammar_language(&g, 3);
    // 10 nouns, 9 verbs, 90 verb-noun and 90 verb-this-noun sentences.
    assert_eq!(lang.len(), 199);
    let alphabet: Vec<String> = g.terminals.iter().map(|t| t.name.clone()).collect();
    for words in all_strings(&alphabet, 2) {
        let vals: Vec<String> = words.iter().map(|w| g.terminal(w).unwrap().val.clone()).collect();
        assert_eq!(parser.accepts(&spoken(&vals)), lang.contains(&words), "{words:?}");
    }
}
