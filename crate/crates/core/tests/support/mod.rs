//! Independent language oracle and random grammar generation for tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};

use magfuse_core::grammar::{Expr, Modality, MultimodalGrammar, Production, SynRole, TerminalDef};
use magfuse_core::lexicon::{MultimodalSentence, MultimodalToken};
use rand::Rng;

pub const NONTERMINALS: [&str; 8] = ["S", "A", "B", "C", "D", "E", "F", "G"];
pub const TERMINALS: [&str; 3] = ["a", "b", "c"];

/// Every terminal string of length at most `max_len` derivable from
/// `start`, by breadth-first leftmost derivation over sentential forms.
/// Rules never shrink a form, so forms longer than `max_len` are dropped.
pub fn language(
    start: &str,
    rules: &[(String, Vec<String>)],
    is_terminal: impl Fn(&str) -> bool,
    max_len: usize,
) -> BTreeSet<Vec<String>> {
    let mut out = BTreeSet::new();
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    let mut queue = VecDeque::from([vec![start.to_string()]]);
    seen.insert(vec![start.to_string()]);
    while let Some(form) = queue.pop_front() {
        let Some(pos) = form.iter().position(|s| !is_terminal(s)) else {
            out.insert(form);
            continue;
        };
        for (_, rhs) in rules.iter().filter(|(l, _)| *l == form[pos]) {
            if form.len() - 1 + rhs.len() > max_len {
                continue;
            }
            let mut next = form[..pos].to_vec();
            next.extend(rhs.iter().cloned());
            next.extend(form[pos + 1..].iter().cloned());
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    out
}

pub fn grammar_language(g: &MultimodalGrammar, max_len: usize) -> BTreeSet<Vec<String>> {
    let rules: Vec<(String, Vec<String>)> =
        g.productions.iter().map(|p| (p.lhs.clone(), p.rhs.clone())).collect();
    language(&g.start, &rules, |s| g.is_terminal(s), max_len)
}

/// All strings over `alphabet` with length in `1..=max_len`.
pub fn all_strings(alphabet: &[String], max_len: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| {
                alphabet.iter().map(move |a| {
                    let mut w = w.clone();
                    w.push(a.clone());
                    w
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Speech tokens 400 ms apart, one per word.
pub fn spoken(words: &[String]) -> MultimodalSentence {
    MultimodalSentence::from_tokens(
        words
            .iter()
            .enumerate()
            .map(|(i, w)| MultimodalToken::speech(w.clone(), i as u64 * 400, i as u64 * 400 + 300))
            .collect(),
    )
}

/// A random grammar over `S` plus up to `max_nts - 1` further
/// nonterminals and two or three terminals. Right-hand sides have one to
/// three symbols; about half the rules join the children's `val`
/// explicitly.
pub fn random_grammar(rng: &mut impl Rng, max_nts: usize, max_rules: usize) -> MultimodalGrammar {
    let n_nts = rng.gen_range(1..=max_nts);
    let n_terms = rng.gen_range(2..=3);
    let nts: Vec<&str> = NONTERMINALS[..n_nts].to_vec();
    let terms: Vec<&str> = TERMINALS[..n_terms].to_vec();
    let n_rules = rng.gen_range(1..=max_rules);
    let mut productions = Vec::new();
    for k in 0..n_rules {
        // The first rule always expands S so the language is rarely empty.
        let lhs = if k == 0 { "S" } else { nts[rng.gen_range(0..n_nts)] };
        let len = rng.gen_range(1..=3);
        let rhs: Vec<&str> = (0..len)
            .map(|_| {
                if rng.gen_bool(0.45) {
                    terms[rng.gen_range(0..n_terms)]
                } else {
                    nts[rng.gen_range(0..n_nts)]
                }
            })
            .collect();
        let mut p = Production::new(format!("P{}", k + 1), lhs, &rhs);
        if rng.gen_bool(0.5) {
            let e = Expr::concat_all((1..=rhs.len()).map(|i| Expr::attr(i, "val"))).unwrap();
            p = p.assign("val", e);
        }
        if rng.gen_bool(0.3) {
            p = p.assign("synrole", Expr::literal("noun_phrase"));
        }
        productions.push(p);
    }
    MultimodalGrammar {
        terminals: terms
            .iter()
            .map(|t| TerminalDef::new(*t, [Modality::Speech], SynRole::Noun))
            .collect(),
        nonterminals: nts.iter().map(|s| s.to_string()).collect(),
        productions,
        start: "S".into(),
        attr_decls: Default::default(),
    }
}
