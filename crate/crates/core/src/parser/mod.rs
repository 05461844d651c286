//! CYK recognition with unit closure, tree reconstruction over the original
//! productions, and synthesized-attribute evaluation.

mod chart;
mod eval;
mod trees;

use std::collections::BTreeSet;

use serde::Serialize;

use crate::grammar::{
    binarize, BinarizedGrammar, CoopType, Modality, MultimodalGrammar, SynRole, TerminalDef,
};
use crate::lexicon::{normalize_concept, MultimodalSentence, MultimodalToken};

pub use chart::{Backpointer, Cell, ChartTable};
pub use eval::evaluate_attributes;
pub use trees::extract_trees;

use chart::CompiledGrammar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("empty input")]
    EmptyInput,
    #[error("no parse")]
    NoParse,
    #[error("symbol `{0}` is not defined by the grammar")]
    UnknownSymbol(String),
    #[error("production `{0}` is not defined by the grammar")]
    UnknownProduction(String),
    #[error("production {production}: attribute {attr} is undefined")]
    UndefinedAttribute { production: String, attr: String },
    #[error("production {production}: invalid literal \"{literal}\"")]
    BadLiteral { production: String, literal: String },
    #[error("production {production}: `++` applied to mismatched values")]
    BadConcat { production: String },
}

/// Value of one evaluated attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum AttrValue {
    Concept(String),
    Modalities(BTreeSet<Modality>),
    Synrole(SynRole),
    Coop(CoopType),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Leaf {
    pub index: usize,
    pub token: MultimodalToken,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseTree {
    pub symbol: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub production_id: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ParseTree>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leaf: Option<Leaf>,
    pub attrs: std::collections::BTreeMap<String, AttrValue>,
}

impl ParseTree {
    pub fn val(&self) -> Option<&str> {
        match self.attrs.get("val") {
            Some(AttrValue::Concept(s)) => Some(s),
            _ => None,
        }
    }

    pub fn mods(&self) -> Option<&BTreeSet<Modality>> {
        match self.attrs.get("mod") {
            Some(AttrValue::Modalities(m)) => Some(m),
            _ => None,
        }
    }

    pub fn synrole(&self) -> Option<SynRole> {
        match self.attrs.get("synrole") {
            Some(AttrValue::Synrole(r)) => Some(*r),
            _ => None,
        }
    }

    pub fn coop(&self) -> Option<CoopType> {
        match self.attrs.get("coop") {
            Some(AttrValue::Coop(c)) => Some(*c),
            _ => None,
        }
    }

    /// Leaves in frontier order.
    pub fn leaves(&self) -> Vec<&ParseTree> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a ParseTree>) {
        if self.leaf.is_some() {
            out.push(self);
        }
        for c in &self.children {
            c.collect_leaves(out);
        }
    }

    pub fn leaf_modalities(&self) -> BTreeSet<Modality> {
        self.leaves()
            .iter()
            .filter_map(|l| l.leaf.as_ref())
            .map(|l| l.token.modality)
            .collect()
    }

    /// Number of nodes, leaves included.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(ParseTree::size).sum::<usize>()
    }

    /// Production ids in preorder.
    pub fn production_sequence(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_ids(&mut out);
        out
    }

    fn collect_ids<'a>(&'a self, out: &mut Vec<&'a str>) {
        if let Some(id) = &self.production_id {
            out.push(id);
        }
        for c in &self.children {
            c.collect_ids(out);
        }
    }

    fn child_symbol(&self, occurrence: usize) -> &str {
        if occurrence == 0 {
            &self.symbol
        } else {
            self.children
                .get(occurrence - 1)
                .map_or("?", |c| c.symbol.as_str())
        }
    }
}

pub(crate) fn matching_terminals<'g>(
    tok: &MultimodalToken,
    terminals: &'g [TerminalDef],
) -> Vec<&'g TerminalDef> {
    let value = tok.normalized_value();
    terminals
        .iter()
        .filter(|t| normalize_concept(&t.val) == value && t.admissible_mods.contains(&tok.modality))
        .collect()
}

/// Terminals whose value equals the token's (case-insensitively) and that
/// admit the token's modality.
pub fn match_terminal<'g>(tok: &MultimodalToken, g: &'g MultimodalGrammar) -> Vec<&'g TerminalDef> {
    matching_terminals(tok, &g.terminals)
}

/// CYK over the sentence tokens.
pub fn recognize(g: &BinarizedGrammar, s: &MultimodalSentence) -> Result<ChartTable, ParseError> {
    chart::build_chart(&CompiledGrammar::new(g), g, s)
}

/// A nonterminal-labelled span `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpanLabel {
    pub start: usize,
    pub end: usize,
    pub symbols: Vec<String>,
}

/// Why a sentence did not parse, with enough chart state for the learner.
#[derive(Debug, Clone, Serialize)]
pub struct NotParseable {
    pub chart: ChartTable,
    /// Tokens that matched no terminal.
    pub unknown: Vec<usize>,
    /// Labelled spans not strictly inside another labelled span.
    pub maximal_spans: Vec<SpanLabel>,
}

impl NotParseable {
    pub fn tokens(&self) -> &[MultimodalToken] {
        &self.chart.tokens
    }

    pub fn unknown_values(&self) -> Vec<String> {
        self.unknown
            .iter()
            .map(|&i| self.chart.tokens[i].normalized_value())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub enum ParseOutcome {
    Parsed(ParseTree),
    NotParseable(Box<NotParseable>),
}

impl ParseOutcome {
    pub fn tree(&self) -> Option<&ParseTree> {
        match self {
            ParseOutcome::Parsed(t) => Some(t),
            ParseOutcome::NotParseable(_) => None,
        }
    }

    pub fn is_parsed(&self) -> bool {
        matches!(self, ParseOutcome::Parsed(_))
    }
}

/// A grammar with its binarized form and rule indices, built once.
#[derive(Debug, Clone)]
pub struct Parser {
    grammar: MultimodalGrammar,
    binarized: BinarizedGrammar,
    compiled: CompiledGrammar,
}

impl Parser {
    pub fn new(grammar: MultimodalGrammar) -> Self {
        let binarized = binarize(&grammar);
        let compiled = CompiledGrammar::new(&binarized);
        Parser {
            grammar,
            binarized,
            compiled,
        }
    }

    pub fn grammar(&self) -> &MultimodalGrammar {
        &self.grammar
    }

    pub fn binarized(&self) -> &BinarizedGrammar {
        &self.binarized
    }

    pub fn recognize(&self, s: &MultimodalSentence) -> Result<ChartTable, ParseError> {
        chart::build_chart(&self.compiled, &self.binarized, s)
    }

    pub fn trees(&self, s: &MultimodalSentence, limit: usize) -> Result<Vec<ParseTree>, ParseError> {
        extract_trees(&self.recognize(s)?, &self.binarized, limit)
    }

    /// The first tree in the deterministic order, attributed, or a report of
    /// what the chart could cover.
    pub fn parse(&self, s: &MultimodalSentence) -> Result<ParseOutcome, ParseError> {
        let chart = self.recognize(s)?;
        if !chart.accepted {
            return Ok(ParseOutcome::NotParseable(Box::new(self.report(chart))));
        }
        let tree = extract_trees(&chart, &self.binarized, 1)?
            .into_iter()
            .next()
            .ok_or(ParseError::NoParse)?;
        Ok(ParseOutcome::Parsed(evaluate_attributes(&tree, &self.grammar)?))
    }

    pub fn accepts(&self, s: &MultimodalSentence) -> bool {
        self.recognize(s).is_ok_and(|c| c.accepted)
    }

    fn report(&self, chart: ChartTable) -> NotParseable {
        let unknown = (0..chart.n)
            .filter(|&i| matching_terminals(&chart.tokens[i], &self.binarized.terminals).is_empty())
            .collect();
        let mut labelled = Vec::new();
        for len in 1..=chart.n {
            for i in 0..=chart.n - len {
                let symbols: Vec<String> = chart
                    .nonterminals_at(i, len)
                    .into_iter()
                    .filter(|s| !self.binarized.is_synthetic(s))
                    .map(String::from)
                    .collect();
                if !symbols.is_empty() {
                    labelled.push(SpanLabel {
                        start: i,
                        end: i + len,
                        symbols,
                    });
                }
            }
        }
        let maximal_spans = labelled
            .iter()
            .filter(|a| {
                !labelled.iter().any(|b| {
                    b.start <= a.start && a.end <= b.end && (b.end - b.start) > (a.end - a.start)
                })
            })
            .cloned()
            .collect();
        NotParseable {
            chart,
            unknown,
            maximal_spans,
        }
    }
}

/// Binarizes `g` and parses `s`. Prefer a long-lived [`Parser`] when parsing
/// many sentences against one grammar.
pub fn parse(g: &MultimodalGrammar, s: &MultimodalSentence) -> Result<ParseOutcome, ParseError> {
    Parser::new(g.clone()).parse(s)
}
