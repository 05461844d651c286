use std::collections::BTreeSet;

use super::{CoopType, Expr, Modality, MultimodalGrammar, Production, SynRole, TerminalDef};

use Modality::{Gesture, Speech};

/// The driver-assistance grammar: 20 terminals, 6 nonterminals and the
/// productions P1..P26.
pub fn seed_grammar() -> MultimodalGrammar {
    let verb = |name: &str| TerminalDef::new(name, [Speech], SynRole::Verb);
    let noun = |name: &str, mods: &[Modality]| {
        TerminalDef::new(name, mods.iter().copied(), SynRole::Noun)
    };
    let sg: &[Modality] = &[Speech, Gesture];
    let s: &[Modality] = &[Speech];

    // (id, preterminal, terminal) in production order.
    let lexicon: Vec<(&str, &str, TerminalDef)> = vec![
        ("P7", "VERBT", verb("Save")),
        ("P8", "VERBT", verb("Call")),
        ("P9", "VERBT", verb("Recall")),
        ("P10", "VERBT", verb("Delete")),
        (
            "P11",
            "DT",
            TerminalDef::new("This", [Speech], SynRole::Deictic).with_coop(CoopType::Complementary),
        ),
        ("P12", "VERBT", verb("Play")),
        ("P13", "NOUN", noun("Help", sg)),
        (
            "P14",
            "NOUN",
            noun("Person", s).with_coop(CoopType::Complementary),
        ),
        ("P15", "NOUN", noun("Number", sg)),
        ("P16", "NOUN", noun("Phone-book", sg)),
        ("P17", "NOUN", noun("Song", sg)),
        ("P18", "NOUN", noun("CD", sg)),
        ("P19", "NOUN", noun("Station", sg)),
        ("P20", "VERBT", verb("Turn off")),
        ("P21", "NOUN", noun("Temperature", sg)),
        ("P22", "NOUN", noun("Defrost", sg)),
        ("P23", "NOUN", noun("USB", s)),
        ("P24", "VERBT", verb("Repeat")),
        ("P25", "VERBT", verb("Read")),
        ("P26", "VERBT", verb("Turn on")),
    ];

    let copy = |p: Production, from: usize| {
        p.assign("val", Expr::attr(from, "val"))
            .assign("mod", Expr::attr(from, "mod"))
    };

    let mut productions = vec![
        copy(Production::new("P1", "S", &["NOUN"]), 1),
        copy(Production::new("P2", "S", &["VP"]), 1),
        copy(Production::new("P3", "VP", &["VERBT"]), 1),
        Production::new("P4", "VP", &["VERBT", "NP"])
            .assign("val", Expr::attr(1, "val").concat(Expr::attr(2, "val")))
            .assign("mod", Expr::attr(1, "mod").concat(Expr::attr(2, "mod"))),
        Production::new("P5", "NP", &["DT", "NOUN"])
            .assign("val", Expr::attr(2, "val"))
            .assign("mod", Expr::attr(1, "mod").concat(Expr::attr(2, "mod"))),
        copy(Production::new("P6", "NP", &["NOUN"]), 1),
    ];
    let mut terminals = Vec::with_capacity(lexicon.len());
    for (id, lhs, term) in lexicon {
        productions.push(Production::lexical(id, lhs, &term));
        terminals.push(term);
    }

    let nonterminals: BTreeSet<String> = ["NOUN", "VP", "VERBT", "NP", "DT", "S"]
        .into_iter()
        .map(String::from)
        .collect();

    MultimodalGrammar {
        terminals,
        nonterminals,
        productions,
        start: "S".to_string(),
        attr_decls: Default::default(),
    }
}
