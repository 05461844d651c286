//! Proposing and applying the smallest rule delta that makes an
//! unparseable sentence parseable.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::command::{normalize_pattern, CommandError, CommandTemplate, MeaningRegistry};
use crate::grammar::{
    production_id_key, render_productions, validate_grammar, Expr, Modality, MultimodalGrammar,
    Production, SynRole, TerminalDef, ValidationReport,
};
use crate::lexicon::MultimodalSentence;
use crate::parser::{Backpointer, NotParseable, ParseError, ParseOutcome, Parser};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoverLabel {
    Symbol { name: String },
    Unknown { value: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverSegment {
    pub start: usize,
    pub end: usize,
    pub label: CoverLabel,
}

/// Segments tiling `[0, n)` left to right.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstituentCover {
    pub segments: Vec<CoverSegment>,
}

impl ConstituentCover {
    pub fn labels(&self) -> Vec<&str> {
        self.segments
            .iter()
            .map(|s| match &s.label {
                CoverLabel::Symbol { name } => name.as_str(),
                CoverLabel::Unknown { value } => value.as_str(),
            })
            .collect()
    }

    pub fn unknown_values(&self) -> Vec<&str> {
        self.segments
            .iter()
            .filter_map(|s| match &s.label {
                CoverLabel::Unknown { value } => Some(value.as_str()),
                CoverLabel::Symbol { .. } => None,
            })
            .collect()
    }

    fn symbols(&self) -> Option<Vec<&str>> {
        self.segments
            .iter()
            .map(|s| match &s.label {
                CoverLabel::Symbol { name } => Some(name.as_str()),
                CoverLabel::Unknown { .. } => None,
            })
            .collect()
    }
}

/// Greedy longest-span cover. Among labels of one span, a label derived
/// directly (lexically or by a binary rule) beats one reached only through
/// unit rules; then labels unit-reachable from the start symbol; then name
/// order. Unlabelled positions become unknown singletons.
pub fn find_cover(report: &NotParseable, g: &MultimodalGrammar) -> ConstituentCover {
    let chart = &report.chart;
    let parser_view = Parser::new(g.clone());
    let binarized = parser_view.binarized();
    let mut segments = Vec::new();
    let mut i = 0;
    while i < chart.n {
        let mut chosen = None;
        for len in (1..=chart.n - i).rev() {
            let mut labels: Vec<(bool, bool, &str)> = chart
                .cell(i, len)
                .entries
                .iter()
                .filter(|(&sym, _)| chart.is_nonterminal[sym] && g.is_nonterminal(&chart.symbols[sym]))
                .map(|(&sym, bps)| {
                    let direct = bps.iter().any(|bp| match bp {
                        Backpointer::Unary { child, .. } => !chart.is_nonterminal[*child],
                        _ => true,
                    });
                    let name = chart.symbols[sym].as_str();
                    (!direct, !binarized.unit_reachable(&g.start, name), name)
                })
                .collect();
            labels.sort();
            if let Some(&(_, _, name)) = labels.first() {
                chosen = Some((len, name.to_string()));
                break;
            }
        }
        match chosen {
            Some((len, name)) => {
                segments.push(CoverSegment {
                    start: i,
                    end: i + len,
                    label: CoverLabel::Symbol { name },
                });
                i += len;
            }
            None => {
                segments.push(CoverSegment {
                    start: i,
                    end: i + 1,
                    label: CoverLabel::Unknown {
                        value: chart.tokens[i].normalized_value(),
                    },
                });
                i += 1;
            }
        }
    }
    ConstituentCover { segments }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LearnError {
    #[error("sentence already parses; nothing to learn")]
    AlreadyParseable,
    #[error("missing synrole for unknown tokens: {}", .0.join(", "))]
    MissingRoles(Vec<String>),
    #[error("meaning required")]
    MeaningRequired,
    #[error("stale delta: grammar changed since proposal")]
    StaleDelta,
    #[error("delta does not make the sentence parseable")]
    Ineffective,
    #[error("grammar after delta is invalid: {0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Meaning(#[from] CommandError),
}

/// New rules for one taught sentence, reviewed before commit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleDelta {
    pub new_terminals: Vec<TerminalDef>,
    #[serde(default)]
    pub new_nonterminals: Vec<String>,
    pub new_productions: Vec<Production>,
    /// Production id to a short note on why it is needed.
    pub rationale: BTreeMap<String, String>,
    pub sentence: MultimodalSentence,
    pub meaning: CommandTemplate,
    pub base_fingerprint: String,
}

impl RuleDelta {
    pub fn rule_count(&self) -> usize {
        self.new_productions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.new_productions.is_empty()
    }

    /// The delta in grammar-file form.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if !self.new_nonterminals.is_empty() {
            out.push_str("nonterm ");
            out.push_str(&self.new_nonterminals.join(" "));
            out.push('\n');
        }
        out.push_str(&render_productions(&self.new_terminals, &self.new_productions));
        out
    }

    /// `g` extended by this delta, without any checks.
    pub fn extend(&self, g: &MultimodalGrammar) -> MultimodalGrammar {
        let mut next = g.clone();
        next.terminals.extend(self.new_terminals.iter().cloned());
        next.nonterminals.extend(self.new_nonterminals.iter().cloned());
        next.productions.extend(self.new_productions.iter().cloned());
        next
    }
}

/// Host preterminal for a synrole.
pub fn preterminal_for(role: SynRole) -> &'static str {
    match role {
        SynRole::Verb => "VERBT",
        SynRole::Noun => "NOUN",
        SynRole::Deictic => "DT",
        SynRole::Preposition => "PREP",
        SynRole::Adjective => "ADJ",
        SynRole::Conjunction => "CONJ",
        SynRole::Determiner => "DET",
        SynRole::NounPhrase => "NPHR",
        SynRole::VerbPhrase => "VPHR",
    }
}

/// Normalized values of the tokens the learner needs a synrole for, in
/// sentence order without repeats. Empty when the sentence parses.
pub fn required_roles(g: &MultimodalGrammar, s: &MultimodalSentence) -> Result<Vec<String>, LearnError> {
    match Parser::new(g.clone()).parse(s)? {
        ParseOutcome::Parsed(_) => Ok(Vec::new()),
        ParseOutcome::NotParseable(report) => {
            let mut seen = BTreeSet::new();
            Ok(find_cover(&report, g)
                .unknown_values()
                .into_iter()
                .filter(|v| seen.insert(v.to_string()))
                .map(String::from)
                .collect())
        }
    }
}

fn next_learned_index(g: &MultimodalGrammar) -> u64 {
    g.productions
        .iter()
        .map(|p| production_id_key(&p.id))
        .filter(|(prefix, _, tail)| prefix == "L" && tail.is_empty())
        .map(|(_, k, _)| k)
        .max()
        .unwrap_or(0)
        + 1
}

fn fresh_terminal_name(g: &MultimodalGrammar, taken: &BTreeSet<String>, value: &str) -> String {
    let clash = |name: &str| {
        let lower = name.to_lowercase();
        taken.contains(&lower)
            || g.terminals.iter().any(|t| t.name.to_lowercase() == lower)
            || g.nonterminals.iter().any(|n| n.to_lowercase() == lower)
    };
    if !clash(value) {
        return value.to_string();
    }
    (2..)
        .map(|k| format!("{value}_{k}"))
        .find(|n| !clash(n))
        .expect("unbounded suffix search")
}

/// Proposes new terminals for every unknown token and, when those alone do
/// not suffice, one production `S -> C1 .. Ck` over the resulting cover.
///
/// `roles` is keyed by normalized token value.
pub fn propose_delta(
    g: &MultimodalGrammar,
    s: &MultimodalSentence,
    meaning: Option<CommandTemplate>,
    roles: &BTreeMap<String, SynRole>,
) -> Result<RuleDelta, LearnError> {
    let report = match Parser::new(g.clone()).parse(s)? {
        ParseOutcome::Parsed(_) => return Err(LearnError::AlreadyParseable),
        ParseOutcome::NotParseable(r) => r,
    };
    let cover = find_cover(&report, g);
    let mut missing: Vec<String> = Vec::new();
    for v in cover.unknown_values() {
        if !roles.contains_key(v) && !missing.iter().any(|m| m == v) {
            missing.push(v.to_string());
        }
    }
    if !missing.is_empty() {
        return Err(LearnError::MissingRoles(missing));
    }
    let meaning = meaning.ok_or(LearnError::MeaningRequired)?;

    let mut next_id = next_learned_index(g);
    let mut delta = RuleDelta {
        new_terminals: Vec::new(),
        new_nonterminals: Vec::new(),
        new_productions: Vec::new(),
        rationale: BTreeMap::new(),
        sentence: s.clone(),
        meaning,
        base_fingerprint: g.fingerprint(),
    };

    // One terminal per distinct unknown value; modalities gathered from
    // every occurrence.
    let mut by_value: BTreeMap<String, (usize, BTreeSet<Modality>)> = BTreeMap::new();
    for seg in &cover.segments {
        if let CoverLabel::Unknown { value } = &seg.label {
            let tok = &report.chart.tokens[seg.start];
            let entry = by_value
                .entry(value.clone())
                .or_insert_with(|| (seg.start, BTreeSet::new()));
            entry.1.insert(tok.modality);
            if tok.modality == Modality::Gesture {
                entry.1.insert(Modality::Speech);
            }
        }
    }
    let mut order: Vec<(&String, &(usize, BTreeSet<Modality>))> = by_value.iter().collect();
    order.sort_by_key(|(_, (first, _))| *first);

    let mut taken = BTreeSet::new();
    for (value, (_, mods)) in order {
        let role = roles[value.as_str()];
        let lhs = preterminal_for(role);
        if !g.is_nonterminal(lhs) && !delta.new_nonterminals.iter().any(|n| n == lhs) {
            delta.new_nonterminals.push(lhs.to_string());
        }
        let name = fresh_terminal_name(g, &taken, value);
        taken.insert(name.to_lowercase());
        let term = TerminalDef::new(name, mods.iter().copied(), role).with_val(value.clone());
        let id = format!("L{next_id}");
        next_id += 1;
        delta
            .rationale
            .insert(id.clone(), format!("unknown token `{value}` as {role}"));
        delta.new_productions.push(Production::lexical(id, lhs, &term));
        delta.new_terminals.push(term);
    }

    let lexical = delta.extend(g);
    let parser = Parser::new(lexical.clone());
    if let ParseOutcome::NotParseable(report) = parser.parse(s)? {
        let cover = find_cover(&report, &lexical);
        let Some(symbols) = cover.symbols() else {
            return Err(LearnError::Ineffective);
        };
        let id = format!("L{next_id}");
        let parts = |attr: &str| {
            Expr::concat_all((1..=symbols.len()).map(|k| Expr::attr(k, attr)))
                .expect("cover is non-empty")
        };
        let production = Production::new(id.clone(), g.start.clone(), &symbols)
            .assign("val", parts("val"))
            .assign("mod", parts("mod"));
        delta
            .rationale
            .insert(id, format!("joins cover {}", symbols.join(" ")));
        delta.new_productions.push(production);
    }
    Ok(delta)
}

/// Result of a confirmed delta.
#[derive(Debug, Clone)]
pub struct Committed {
    pub grammar: MultimodalGrammar,
    pub registry: MeaningRegistry,
    pub pattern: String,
}

/// Applies `d` when `confirmed`, registering its meaning under the
/// sentence pattern. A rejected delta leaves both values as they were.
pub fn apply_delta(
    g: &MultimodalGrammar,
    reg: &MeaningRegistry,
    d: &RuleDelta,
    confirmed: bool,
) -> Result<Option<Committed>, LearnError> {
    if !confirmed {
        return Ok(None);
    }
    if g.fingerprint() != d.base_fingerprint {
        return Err(LearnError::StaleDelta);
    }
    let next = d.extend(g);
    let report = validate_grammar(&next);
    if !report.is_ok() {
        return Err(LearnError::Invalid(report));
    }
    let ParseOutcome::Parsed(tree) = Parser::new(next.clone()).parse(&d.sentence)? else {
        return Err(LearnError::Ineffective);
    };
    let pattern = normalize_pattern(&tree);
    let mut registry = reg.clone();
    registry.insert(pattern.clone(), d.meaning.clone())?;
    Ok(Some(Committed {
        grammar: next,
        registry,
        pattern,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::{interpret, Scalar, NUM_SLOT};
    use crate::grammar::seed_grammar;
    use crate::lexicon::{fuse, FusionConfig, MultimodalToken};

    fn speech(words: &[&str]) -> MultimodalSentence {
        MultimodalSentence::from_tokens(
            words
                .iter()
                .enumerate()
                .map(|(i, w)| MultimodalToken::speech(*w, i as u64 * 400, i as u64 * 400 + 300))
                .collect(),
        )
    }

    fn roles(pairs: &[(&str, SynRole)]) -> BTreeMap<String, SynRole> {
        pairs.iter().map(|(k, r)| (k.to_string(), *r)).collect()
    }

    fn report(g: &MultimodalGrammar, s: &MultimodalSentence) -> NotParseable {
        match Parser::new(g.clone()).parse(s).unwrap() {
            ParseOutcome::NotParseable(r) => *r,
            ParseOutcome::Parsed(_) => panic!("sentence parses"),
        }
    }

    fn volume() -> CommandTemplate {
        CommandTemplate::new("set")
            .with_object("speaker_volume")
            .with_param("value", Scalar::Text(NUM_SLOT.into()))
    }

    #[test]
    fn covers() {
        let g = seed_grammar();
        let c = find_cover(&report(&g, &speech(&["set", "to", "15"])), &g);
        assert_eq!(c.labels(), vec!["set", "to", "15"]);
        assert_eq!(c.unknown_values().len(), 3);

        let c = find_cover(&report(&g, &speech(&["play", "xyzzy"])), &g);
        assert_eq!(c.labels(), vec!["VERBT", "xyzzy"]);

        let c = find_cover(&report(&g, &speech(&["play", "this", "song", "xyzzy"])), &g);
        assert_eq!(c.labels(), vec!["VP", "xyzzy"]);
        assert_eq!((c.segments[0].start, c.segments[0].end), (0, 3));
    }

    #[test]
    fn s6_delta() {
        let g = seed_grammar();
        let s = speech(&["set", "to", "15"]);
        assert_eq!(required_roles(&g, &s).unwrap(), vec!["set", "to", "15"]);
        let r = roles(&[
            ("set", SynRole::Verb),
            ("to", SynRole::Preposition),
            ("15", SynRole::Noun),
        ]);
        let d = propose_delta(&g, &s, Some(volume()), &r).unwrap();
        let summary: Vec<(String, Vec<String>)> = d
            .new_productions
            .iter()
            .map(|p| (p.lhs.clone(), p.rhs.clone()))
            .collect();
        assert_eq!(
            summary,
            vec![
                ("VERBT".to_string(), vec!["set".to_string()]),
                ("PREP".to_string(), vec!["to".to_string()]),
                ("NOUN".to_string(), vec!["15".to_string()]),
                (
                    "S".to_string(),
                    ["VERBT", "PREP", "NOUN"].map(String::from).to_vec()
                ),
            ]
        );
        assert_eq!(d.new_nonterminals, vec!["PREP"]);
        let ids: Vec<&str> = d.new_productions.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, vec!["L1", "L2", "L3", "L4"]);
        assert!(d.render().contains("prod L4: S -> VERBT PREP NOUN"));

        let done = apply_delta(&g, &MeaningRegistry::new(), &d, true).unwrap().unwrap();
        assert_eq!(done.pattern, "set to <num>");
        let tree = Parser::new(done.grammar.clone()).parse(&s).unwrap();
        let frame = interpret(tree.tree().unwrap(), &s, &done.registry).unwrap();
        assert_eq!(frame.action, "set");
        assert_eq!(frame.params["value"], Scalar::Int(15));

        assert_eq!(
            propose_delta(&done.grammar, &s, Some(volume()), &r),
            Err(LearnError::AlreadyParseable)
        );
        assert_eq!(
            apply_delta(&done.grammar, &done.registry, &d, true).unwrap_err(),
            LearnError::StaleDelta
        );
    }

    #[test]
    fn terminal_only_delta() {
        let g = seed_grammar();
        let s = speech(&["play", "xyzzy"]);
        let d = propose_delta(&g, &s, Some(CommandTemplate::new("play")), &roles(&[("xyzzy", SynRole::Noun)]))
            .unwrap();
        assert_eq!(d.rule_count(), 1);
        assert_eq!(d.new_productions[0].lhs, "NOUN");
        assert!(d.new_nonterminals.is_empty());
    }

    #[test]
    fn errors_in_order() {
        let g = seed_grammar();
        assert_eq!(
            propose_delta(&g, &speech(&["recall"]), None, &BTreeMap::new()),
            Err(LearnError::AlreadyParseable)
        );
        let s = speech(&["set", "to", "15"]);
        assert_eq!(
            propose_delta(&g, &s, None, &roles(&[("set", SynRole::Verb)])),
            Err(LearnError::MissingRoles(vec!["to".into(), "15".into()]))
        );
        let all = roles(&[
            ("set", SynRole::Verb),
            ("to", SynRole::Preposition),
            ("15", SynRole::Noun),
        ]);
        assert_eq!(propose_delta(&g, &s, None, &all), Err(LearnError::MeaningRequired));
    }

    #[test]
    fn reject_leaves_grammar() {
        let g = seed_grammar();
        let d = propose_delta(
            &g,
            &speech(&["play", "xyzzy"]),
            Some(CommandTemplate::new("play")),
            &roles(&[("xyzzy", SynRole::Noun)]),
        )
        .unwrap();
        assert!(apply_delta(&g, &MeaningRegistry::new(), &d, false).unwrap().is_none());
        assert_eq!(g.fingerprint(), d.base_fingerprint);
    }

    #[test]
    fn gesture_terminal_is_speakable() {
        let g = seed_grammar();
        let s = fuse(
            &[
                vec![
                    MultimodalToken::speech("turn", 0, 200),
                    MultimodalToken::speech("on", 210, 400),
                    MultimodalToken::speech("this", 500, 700),
                ],
                vec![MultimodalToken::gesture("headlight", 600, 900).pointing_at("headlight_icon")],
            ],
            &g,
            &FusionConfig::for_grammar(&g),
        )
        .unwrap();
        let d = propose_delta(
            &g,
            &s,
            Some(CommandTemplate::new("turn on").with_object("headlight")),
            &roles(&[("headlight", SynRole::Noun)]),
        )
        .unwrap();
        assert_eq!(d.rule_count(), 1);
        assert_eq!(
            d.new_terminals[0].admissible_mods,
            BTreeSet::from([Modality::Speech, Modality::Gesture])
        );
    }

    #[test]
    fn name_clash_gets_suffix() {
        let g = seed_grammar();
        // `usb` is speech-only, so a gestured `usb` is unknown.
        let mut s = speech(&["play", "usb"]);
        s.tokens[1].modality = Modality::Gesture;
        let d = propose_delta(&g, &s, Some(CommandTemplate::new("play")), &roles(&[("usb", SynRole::Noun)]))
            .unwrap();
        assert_eq!(d.new_terminals[0].name, "usb_2");
        assert_eq!(d.new_terminals[0].val, "usb");
        assert!(apply_delta(&g, &MeaningRegistry::new(), &d, true).unwrap().is_some());
    }
}
