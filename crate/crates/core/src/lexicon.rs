//! Recognizer outputs, stream fusion and cooperation detection.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::grammar::{CoopType, Modality, MultimodalGrammar, SynRole};
use crate::parser::match_terminal;

/// One recognizer output: a concept with its modality and time span in ms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultimodalToken {
    pub value: String,
    pub modality: Modality,
    pub t_start: u64,
    pub t_end: u64,
    #[serde(default)]
    pub target_id: Option<String>,
    #[serde(default)]
    pub source_id: String,
}

impl MultimodalToken {
    pub fn new(value: impl Into<String>, modality: Modality, t_start: u64, t_end: u64) -> Self {
        MultimodalToken {
            value: value.into(),
            modality,
            t_start,
            t_end,
            target_id: None,
            source_id: String::new(),
        }
    }

    pub fn speech(value: impl Into<String>, t_start: u64, t_end: u64) -> Self {
        Self::new(value, Modality::Speech, t_start, t_end).from_source("asr")
    }

    pub fn gesture(value: impl Into<String>, t_start: u64, t_end: u64) -> Self {
        Self::new(value, Modality::Gesture, t_start, t_end).from_source("gr")
    }

    pub fn pointing_at(mut self, target: impl Into<String>) -> Self {
        self.target_id = Some(target.into());
        self
    }

    pub fn from_source(mut self, source: impl Into<String>) -> Self {
        self.source_id = source.into();
        self
    }

    /// Lowercased value with internal whitespace collapsed.
    pub fn normalized_value(&self) -> String {
        normalize_concept(&self.value)
    }
}

pub(crate) fn normalize_concept(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Time between two intervals; zero when they overlap.
pub fn gap_ms(a: &MultimodalToken, b: &MultimodalToken) -> u64 {
    if a.t_start <= b.t_end && b.t_start <= a.t_end {
        0
    } else if a.t_end < b.t_start {
        b.t_start - a.t_end
    } else {
        a.t_start - b.t_end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoopLink {
    pub a: usize,
    pub b: usize,
    pub coop: CoopType,
}

/// Left behind when two redundant tokens are collapsed into `index`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedundancyNote {
    pub index: usize,
    pub absorbed: MultimodalToken,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultimodalSentence {
    pub tokens: Vec<MultimodalToken>,
    #[serde(default)]
    pub coop_links: Vec<CoopLink>,
    /// Token index to the on-screen object a gesture pointed at.
    #[serde(default)]
    pub referents: BTreeMap<usize, String>,
    #[serde(default)]
    pub redundancies: Vec<RedundancyNote>,
}

impl MultimodalSentence {
    pub fn from_tokens(tokens: Vec<MultimodalToken>) -> Self {
        MultimodalSentence {
            tokens,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn values(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.normalized_value()).collect()
    }

    /// Drops the tokens at `removed`, renumbering links, referents and notes.
    /// Links touching a removed token are dropped.
    fn without(mut self, removed: &BTreeSet<usize>) -> Self {
        if removed.is_empty() {
            return self;
        }
        let remap: Vec<Option<usize>> = {
            let mut next = 0;
            (0..self.tokens.len())
                .map(|i| {
                    if removed.contains(&i) {
                        None
                    } else {
                        next += 1;
                        Some(next - 1)
                    }
                })
                .collect()
        };
        let tokens = std::mem::take(&mut self.tokens)
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !removed.contains(i))
            .map(|(_, t)| t)
            .collect();
        MultimodalSentence {
            tokens,
            coop_links: self
                .coop_links
                .into_iter()
                .filter_map(|l| {
                    Some(CoopLink {
                        a: remap[l.a]?,
                        b: remap[l.b]?,
                        coop: l.coop,
                    })
                })
                .collect(),
            referents: self
                .referents
                .into_iter()
                .filter_map(|(i, t)| Some((remap[i]?, t)))
                .collect(),
            redundancies: self
                .redundancies
                .into_iter()
                .filter_map(|n| {
                    Some(RedundancyNote {
                        index: remap[n.index]?,
                        absorbed: n.absorbed,
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub coop_window_ms: u64,
    /// Earlier entries win ties at equal `t_start`.
    pub tie_break_order: [Modality; 4],
    /// Token values treated as deictics when pairing with gestures.
    pub deictic_values: BTreeSet<String>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            coop_window_ms: 1000,
            tie_break_order: [
                Modality::Speech,
                Modality::Gesture,
                Modality::Handwriting,
                Modality::Sketch,
            ],
            deictic_values: BTreeSet::from(["this".to_string()]),
        }
    }
}

impl FusionConfig {
    /// Default settings with deictic values taken from the grammar's
    /// deictic terminals.
    pub fn for_grammar(g: &MultimodalGrammar) -> Self {
        let mut cfg = FusionConfig::default();
        cfg.deictic_values.extend(
            g.terminals
                .iter()
                .filter(|t| t.synrole == SynRole::Deictic)
                .map(|t| normalize_concept(&t.val)),
        );
        cfg
    }

    pub fn with_tie_break(mut self, order: [Modality; 4]) -> Result<Self, LexiconError> {
        let distinct: BTreeSet<Modality> = order.iter().copied().collect();
        if distinct.len() != 4 {
            return Err(LexiconError::TieBreakNotTotal);
        }
        self.tie_break_order = order;
        Ok(self)
    }

    fn rank(&self, m: Modality) -> usize {
        self.tie_break_order
            .iter()
            .position(|&x| x == m)
            .unwrap_or(usize::MAX)
    }

    fn is_deictic(&self, tok: &MultimodalToken) -> bool {
        tok.modality != Modality::Gesture && self.deictic_values.contains(&tok.normalized_value())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("record {index}: t_start is after t_end")]
    InvertedInterval { index: usize },
    #[error("record {index}: empty value")]
    EmptyValue { index: usize },
    #[error("record {index}: speech tokens cannot carry a target")]
    SpeechTarget { index: usize },
    #[error("unresolvable deictic at token {index}")]
    UnresolvableDeictic { index: usize },
    #[error("tie-break order must list every modality exactly once")]
    TieBreakNotTotal,
}

/// Validates one recognizer's records and merges adjacent speech words that
/// together spell a multiword terminal of `g` (longest match first).
pub fn ingest_stream(
    raw: &[MultimodalToken],
    g: &MultimodalGrammar,
) -> Result<Vec<MultimodalToken>, LexiconError> {
    for (index, r) in raw.iter().enumerate() {
        if r.t_start > r.t_end {
            return Err(LexiconError::InvertedInterval { index });
        }
        if r.value.trim().is_empty() {
            return Err(LexiconError::EmptyValue { index });
        }
        if r.modality == Modality::Speech && r.target_id.is_some() {
            return Err(LexiconError::SpeechTarget { index });
        }
    }

    let multiword: BTreeSet<String> = g
        .terminals
        .iter()
        .map(|t| normalize_concept(&t.val))
        .filter(|v| v.contains(' '))
        .collect();
    let max_words = g.max_terminal_words();

    let mut out = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        let mut taken = 1;
        if raw[i].modality == Modality::Speech {
            let longest = max_words.min(raw.len() - i);
            for len in (2..=longest).rev() {
                let run = &raw[i..i + len];
                if !run.iter().all(|r| r.modality == Modality::Speech) {
                    continue;
                }
                let joined = normalize_concept(
                    &run.iter().map(|r| r.value.as_str()).collect::<Vec<_>>().join(" "),
                );
                if multiword.contains(&joined) {
                    let mut tok = raw[i].clone();
                    tok.value = run
                        .iter()
                        .map(|r| r.value.trim())
                        .collect::<Vec<_>>()
                        .join(" ");
                    tok.t_start = run.iter().map(|r| r.t_start).min().unwrap_or(tok.t_start);
                    tok.t_end = run.iter().map(|r| r.t_end).max().unwrap_or(tok.t_end);
                    out.push(tok);
                    taken = len;
                    break;
                }
            }
        }
        if taken == 1 {
            out.push(raw[i].clone());
        }
        i += taken;
    }
    Ok(out)
}

/// Interleaves streams into one sentence ordered by start time, then the
/// configured modality order, then source id.
pub fn merge_streams(streams: &[Vec<MultimodalToken>], cfg: &FusionConfig) -> MultimodalSentence {
    let mut tokens: Vec<MultimodalToken> = streams.iter().flatten().cloned().collect();
    tokens.sort_by(|a, b| {
        a.t_start
            .cmp(&b.t_start)
            .then_with(|| cfg.rank(a.modality).cmp(&cfg.rank(b.modality)))
            .then_with(|| a.source_id.cmp(&b.source_id))
    });
    MultimodalSentence::from_tokens(tokens)
}

fn find_redundant(tokens: &[MultimodalToken], window: u64) -> Option<(usize, usize)> {
    for i in 0..tokens.len() {
        for j in i + 1..tokens.len() {
            let (a, b) = (&tokens[i], &tokens[j]);
            if a.modality != b.modality
                && a.normalized_value() == b.normalized_value()
                && gap_ms(a, b) <= window
            {
                return Some((i, j));
            }
        }
    }
    None
}

/// Collapses redundant cross-modal pairs and links deictics to the gesture
/// that complements them. Idempotent.
pub fn detect_cooperation(s: MultimodalSentence, cfg: &FusionConfig) -> MultimodalSentence {
    let mut s = s;
    while let Some((i, j)) = find_redundant(&s.tokens, cfg.coop_window_ms) {
        let absorbed = s.tokens[j].clone();
        let keep = &mut s.tokens[i];
        keep.t_start = keep.t_start.min(absorbed.t_start);
        keep.t_end = keep.t_end.max(absorbed.t_end);
        if let Some(target) = &absorbed.target_id {
            if keep.modality == Modality::Speech {
                s.referents.entry(i).or_insert_with(|| target.clone());
            } else if keep.target_id.is_none() {
                keep.target_id = Some(target.clone());
            }
        }
        if let Some(target) = s.referents.remove(&j) {
            s.referents.entry(i).or_insert(target);
        }
        s.redundancies.push(RedundancyNote { index: i, absorbed });
        s = s.without(&BTreeSet::from([j]));
    }

    s.coop_links.retain(|l| l.coop != CoopType::Complementary);
    let mut linked = BTreeSet::new();
    for d in 0..s.tokens.len() {
        if !cfg.is_deictic(&s.tokens[d]) {
            continue;
        }
        let best = (0..s.tokens.len())
            .filter(|&x| {
                let t = &s.tokens[x];
                t.modality == Modality::Gesture
                    && !linked.contains(&x)
                    && t.normalized_value() != s.tokens[d].normalized_value()
                    && gap_ms(&s.tokens[d], t) <= cfg.coop_window_ms
            })
            .min_by_key(|&x| (gap_ms(&s.tokens[d], &s.tokens[x]), x));
        if let Some(x) = best {
            linked.insert(x);
            s.coop_links.push(CoopLink {
                a: d.min(x),
                b: d.max(x),
                coop: CoopType::Complementary,
            });
        }
    }
    s.coop_links.sort_by_key(|l| (l.a, l.b));
    s
}

fn has_role(tok: &MultimodalToken, g: &MultimodalGrammar, role: SynRole) -> bool {
    match_terminal(tok, g).iter().any(|t| t.synrole == role)
}

fn gesture_terminal(tok: &MultimodalToken, g: &MultimodalGrammar) -> bool {
    let v = tok.normalized_value();
    g.terminals
        .iter()
        .any(|t| t.admissible_mods.contains(&Modality::Gesture) && normalize_concept(&t.val) == v)
}

/// Resolves each complementary (deictic, gesture) pair.
///
/// A gesture whose value is a gesture-capable terminal fills the slot after
/// the deictic when speech supplies no noun there; otherwise it is dropped
/// and its target is attached to the spoken noun. A gesture with an
/// unknown value but a target stays in place for the learner. Pointing
/// gestures outside any deictic pair whose value is no gesture terminal are
/// dropped, their target attached to the nearest token.
pub fn bind_deictic(
    s: MultimodalSentence,
    g: &MultimodalGrammar,
    cfg: &FusionConfig,
) -> Result<MultimodalSentence, LexiconError> {
    let mut s = s;
    let mut removed = BTreeSet::new();
    let mut paired = BTreeSet::new();

    let links: Vec<CoopLink> = s
        .coop_links
        .iter()
        .copied()
        .filter(|l| l.coop == CoopType::Complementary)
        .collect();
    for link in links {
        let (d, x) = if s.tokens[link.a].modality == Modality::Gesture {
            (link.b, link.a)
        } else {
            (link.a, link.b)
        };
        paired.insert(x);
        let deictic = &s.tokens[d];
        let following_noun = (d + 1..s.tokens.len()).find(|&k| {
            k != x
                && !removed.contains(&k)
                && gap_ms(deictic, &s.tokens[k]) <= cfg.coop_window_ms
                && has_role(&s.tokens[k], g, SynRole::Noun)
        });
        let gesture = s.tokens[x].clone();
        match following_noun {
            None if gesture_terminal(&gesture, g) || gesture.target_id.is_some() => {
                if let Some(t) = gesture.target_id {
                    s.referents.insert(x, t);
                }
            }
            None => return Err(LexiconError::UnresolvableDeictic { index: x }),
            Some(noun) => {
                removed.insert(x);
                if let Some(t) = gesture.target_id {
                    s.referents.insert(noun, t);
                }
            }
        }
    }

    for x in 0..s.tokens.len() {
        let tok = &s.tokens[x];
        if tok.modality != Modality::Gesture || paired.contains(&x) {
            continue;
        }
        let Some(target) = tok.target_id.clone() else {
            continue;
        };
        if gesture_terminal(tok, g) {
            s.referents.insert(x, target);
            continue;
        }
        let candidates: Vec<usize> = (0..s.tokens.len())
            .filter(|&k| k != x && !removed.contains(&k) && !paired.contains(&k))
            .filter(|&k| s.tokens[k].modality != Modality::Gesture)
            .collect();
        let nearest = |pool: &mut dyn Iterator<Item = usize>| {
            pool.min_by_key(|&k| (gap_ms(tok, &s.tokens[k]), k))
        };
        let noun = nearest(
            &mut candidates
                .iter()
                .copied()
                .filter(|&k| gap_ms(tok, &s.tokens[k]) <= cfg.coop_window_ms)
                .filter(|&k| has_role(&s.tokens[k], g, SynRole::Noun)),
        );
        if let Some(host) = noun.or_else(|| nearest(&mut candidates.iter().copied())) {
            removed.insert(x);
            s.referents.entry(host).or_insert(target);
        } else {
            s.referents.insert(x, target);
        }
    }

    Ok(s.without(&removed))
}

/// `ingest_stream` on every stream, then merge, cooperation and deictic
/// binding.
pub fn fuse(
    streams: &[Vec<MultimodalToken>],
    g: &MultimodalGrammar,
    cfg: &FusionConfig,
) -> Result<MultimodalSentence, LexiconError> {
    let ingested = streams
        .iter()
        .map(|s| ingest_stream(s, g))
        .collect::<Result<Vec<_>, _>>()?;
    let merged = merge_streams(&ingested, cfg);
    bind_deictic(detect_cooperation(merged, cfg), g, cfg)
}
