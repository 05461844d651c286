//! Multimodal attribute grammars.
//!
//! A grammar is a context-free core (terminals, nonterminals, productions,
//! start symbol) extended with attribute declarations and per-production
//! semantic functions. Every symbol implicitly carries the four multimodal
//! synthesized attributes `val`, `mod`, `synrole` and `coop`; further
//! attributes can be declared per symbol.

mod binarize;
mod format;
mod seed;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use binarize::{binarize, BinRule, BinarizedGrammar};
pub use format::{load_grammar, render_productions, save_grammar, LoadError};
pub use seed::seed_grammar;
pub use validate::{validate_grammar, ValidationReport, Violation};

/// Input modality of a recognizer output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Speech,
    Handwriting,
    Gesture,
    Sketch,
}

impl Modality {
    pub const ALL: [Modality; 4] = [
        Modality::Speech,
        Modality::Handwriting,
        Modality::Gesture,
        Modality::Sketch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Speech => "speech",
            Modality::Handwriting => "handwriting",
            Modality::Gesture => "gesture",
            Modality::Sketch => "sketch",
        }
    }
}

/// Syntactic role carried by the `synrole` attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynRole {
    NounPhrase,
    VerbPhrase,
    Determiner,
    Verb,
    Noun,
    Adjective,
    Preposition,
    Deictic,
    Conjunction,
}

impl SynRole {
    pub const ALL: [SynRole; 9] = [
        SynRole::NounPhrase,
        SynRole::VerbPhrase,
        SynRole::Determiner,
        SynRole::Verb,
        SynRole::Noun,
        SynRole::Adjective,
        SynRole::Preposition,
        SynRole::Deictic,
        SynRole::Conjunction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SynRole::NounPhrase => "noun_phrase",
            SynRole::VerbPhrase => "verb_phrase",
            SynRole::Determiner => "determiner",
            SynRole::Verb => "verb",
            SynRole::Noun => "noun",
            SynRole::Adjective => "adjective",
            SynRole::Preposition => "preposition",
            SynRole::Deictic => "deictic",
            SynRole::Conjunction => "conjunction",
        }
    }
}

/// Modality cooperation type carried by the `coop` attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoopType {
    Complementary,
    Redundant,
}

impl CoopType {
    pub const ALL: [CoopType; 2] = [CoopType::Complementary, CoopType::Redundant];

    pub fn as_str(self) -> &'static str {
        match self {
            CoopType::Complementary => "complementary",
            CoopType::Redundant => "redundant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} `{value}`")]
pub struct UnknownLiteral {
    pub kind: &'static str,
    pub value: String,
}

macro_rules! impl_from_str {
    ($ty:ty, $kind:literal) => {
        impl FromStr for $ty {
            type Err = UnknownLiteral;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                <$ty>::ALL
                    .iter()
                    .copied()
                    .find(|v| v.as_str() == s)
                    .ok_or_else(|| UnknownLiteral {
                        kind: $kind,
                        value: s.to_string(),
                    })
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

impl_from_str!(Modality, "modality");
impl_from_str!(SynRole, "synrole");
impl_from_str!(CoopType, "coop");

/// Parses a modality set literal such as `"speech gesture"` or `speech,gesture`.
pub fn parse_modality_set(s: &str) -> Result<BTreeSet<Modality>, UnknownLiteral> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|part| !part.is_empty())
        .map(Modality::from_str)
        .collect()
}

pub fn modality_set_literal(mods: &BTreeSet<Modality>) -> String {
    mods.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKind {
    Synthesized,
    Inherited,
}

/// Value domain of an attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrDomain {
    Concept,
    Modalities,
    Synrole,
    Coop,
}

impl AttrDomain {
    pub fn as_str(self) -> &'static str {
        match self {
            AttrDomain::Concept => "concept",
            AttrDomain::Modalities => "modalities",
            AttrDomain::Synrole => "synrole",
            AttrDomain::Coop => "coop",
        }
    }
}

impl FromStr for AttrDomain {
    type Err = UnknownLiteral;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "concept" => Ok(AttrDomain::Concept),
            "modalities" => Ok(AttrDomain::Modalities),
            "synrole" => Ok(AttrDomain::Synrole),
            "coop" => Ok(AttrDomain::Coop),
            _ => Err(UnknownLiteral {
                kind: "attribute domain",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDecl {
    pub name: String,
    pub kind: AttrKind,
    pub domain: AttrDomain,
}

impl AttributeDecl {
    /// The multimodal synthesized attributes every symbol carries.
    pub fn multimodal() -> [AttributeDecl; 4] {
        let decl = |name: &str, domain| AttributeDecl {
            name: name.to_string(),
            kind: AttrKind::Synthesized,
            domain,
        };
        [
            decl("val", AttrDomain::Concept),
            decl("mod", AttrDomain::Modalities),
            decl("synrole", AttrDomain::Synrole),
            decl("coop", AttrDomain::Coop),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalDef {
    pub name: String,
    pub val: String,
    pub admissible_mods: BTreeSet<Modality>,
    pub synrole: SynRole,
    pub coop: Option<CoopType>,
}

impl TerminalDef {
    /// Terminal whose `val` is the lowercased name.
    pub fn new(
        name: impl Into<String>,
        mods: impl IntoIterator<Item = Modality>,
        synrole: SynRole,
    ) -> Self {
        let name = name.into();
        TerminalDef {
            val: name.to_lowercase(),
            name,
            admissible_mods: mods.into_iter().collect(),
            synrole,
            coop: None,
        }
    }

    pub fn with_coop(mut self, coop: CoopType) -> Self {
        self.coop = Some(coop);
        self
    }

    pub fn with_val(mut self, val: impl Into<String>) -> Self {
        self.val = val.into();
        self
    }
}

/// One attribute occurrence inside a production: occurrence 0 is the LHS,
/// occurrence `k >= 1` is the `k`-th RHS symbol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttrRef {
    pub occurrence: usize,
    pub attr: String,
}

impl AttrRef {
    pub fn new(occurrence: usize, attr: impl Into<String>) -> Self {
        AttrRef {
            occurrence,
            attr: attr.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Literal(String),
    Ref(AttrRef),
    Concat(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn literal(s: impl Into<String>) -> Self {
        Expr::Literal(s.into())
    }

    pub fn attr(occurrence: usize, attr: impl Into<String>) -> Self {
        Expr::Ref(AttrRef::new(occurrence, attr))
    }

    pub fn concat(self, rhs: Expr) -> Self {
        Expr::Concat(Box::new(self), Box::new(rhs))
    }

    /// Left fold of `++` over `parts`; `None` when empty.
    pub fn concat_all(parts: impl IntoIterator<Item = Expr>) -> Option<Expr> {
        parts.into_iter().reduce(Expr::concat)
    }

    /// Every attribute reference in the expression, left to right.
    pub fn refs(&self) -> Vec<&AttrRef> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a AttrRef>) {
        match self {
            Expr::Literal(_) => {}
            Expr::Ref(r) => out.push(r),
            Expr::Concat(a, b) => {
                a.collect_refs(out);
                b.collect_refs(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticFunction {
    pub target: AttrRef,
    pub expr: Expr,
}

impl SemanticFunction {
    pub fn new(target: AttrRef, expr: Expr) -> Self {
        SemanticFunction { target, expr }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Production {
    pub id: String,
    pub lhs: String,
    pub rhs: Vec<String>,
    pub semantics: Vec<SemanticFunction>,
}

impl Production {
    pub fn new(id: impl Into<String>, lhs: impl Into<String>, rhs: &[&str]) -> Self {
        Production {
            id: id.into(),
            lhs: lhs.into(),
            rhs: rhs.iter().map(|s| s.to_string()).collect(),
            semantics: Vec::new(),
        }
    }

    /// Adds `lhs.attr <- expr`.
    pub fn assign(mut self, attr: &str, expr: Expr) -> Self {
        self.semantics
            .push(SemanticFunction::new(AttrRef::new(0, attr), expr));
        self
    }

    /// A preterminal rule `lhs -> terminal` whose semantic functions assign
    /// the terminal's multimodal attributes as literals.
    pub fn lexical(id: impl Into<String>, lhs: impl Into<String>, term: &TerminalDef) -> Self {
        let mut p = Production {
            id: id.into(),
            lhs: lhs.into(),
            rhs: vec![term.name.clone()],
            semantics: Vec::new(),
        }
        .assign("val", Expr::literal(term.val.clone()))
        .assign("mod", Expr::literal(modality_set_literal(&term.admissible_mods)))
        .assign("synrole", Expr::literal(term.synrole.as_str()));
        if let Some(coop) = term.coop {
            p = p.assign("coop", Expr::literal(coop.as_str()));
        }
        p
    }

    /// Symbol at occurrence `k` (0 = LHS).
    pub fn symbol_at(&self, k: usize) -> Option<&str> {
        if k == 0 {
            Some(&self.lhs)
        } else {
            self.rhs.get(k - 1).map(String::as_str)
        }
    }

    pub fn function_for(&self, target: &AttrRef) -> Option<&SemanticFunction> {
        self.semantics.iter().find(|f| &f.target == target)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MultimodalGrammar {
    pub terminals: Vec<TerminalDef>,
    pub nonterminals: BTreeSet<String>,
    pub productions: Vec<Production>,
    pub start: String,
    /// Declarations beyond the implicit multimodal attributes, per symbol.
    pub attr_decls: BTreeMap<String, Vec<AttributeDecl>>,
}

impl MultimodalGrammar {
    pub fn terminal(&self, name: &str) -> Option<&TerminalDef> {
        self.terminals.iter().find(|t| t.name == name)
    }

    pub fn is_terminal(&self, name: &str) -> bool {
        self.terminal(name).is_some()
    }

    pub fn is_nonterminal(&self, name: &str) -> bool {
        self.nonterminals.contains(name)
    }

    pub fn production(&self, id: &str) -> Option<&Production> {
        self.productions.iter().find(|p| p.id == id)
    }

    /// Full attribute set of `symbol`: the multimodal attributes followed
    /// by any explicit declarations.
    pub fn attributes_of(&self, symbol: &str) -> Vec<AttributeDecl> {
        let mut decls = AttributeDecl::multimodal().to_vec();
        if let Some(extra) = self.attr_decls.get(symbol) {
            decls.extend(extra.iter().cloned());
        }
        decls
    }

    pub fn attribute(&self, symbol: &str, name: &str) -> Option<AttributeDecl> {
        self.attributes_of(symbol).into_iter().find(|d| d.name == name)
    }

    /// Number of words in the longest terminal value.
    pub fn max_terminal_words(&self) -> usize {
        self.terminals
            .iter()
            .map(|t| t.val.split_whitespace().count())
            .max()
            .unwrap_or(0)
    }

    /// SHA-256 over the canonical text form.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(save_grammar(self).as_bytes()))
    }
}

/// Ordering key for production ids: alphabetic prefix, then numeric part,
/// then the remainder, so `P2 < P10 < L1`-style ids sort naturally.
pub fn production_id_key(id: &str) -> (String, u64, String) {
    let prefix_end = id
        .find(|c: char| c.is_ascii_digit())
        .unwrap_or(id.len());
    let (prefix, rest) = id.split_at(prefix_end);
    let digits_end = rest
        .find(|c: char| !c.is_ascii_digit())
        .unwrap_or(rest.len());
    let (digits, tail) = rest.split_at(digits_end);
    (
        prefix.to_string(),
        digits.parse().unwrap_or(0),
        tail.to_string(),
    )
}
