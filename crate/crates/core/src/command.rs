//! Mapping attributed parse trees to driver-assistance command frames.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::grammar::{seed_grammar, Modality, MultimodalGrammar, SynRole};
use crate::lexicon::{MultimodalSentence, MultimodalToken};
use crate::parser::{ParseTree, Parser};

/// Slot marker for the first numeral of a sentence; `<num2>`, `<num3>`, ..
/// address later ones.
pub const NUM_SLOT: &str = "<num>";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Int(i64),
    Text(String),
}

impl Scalar {
    /// Index of the numeral this value stands for when it is a slot marker.
    fn slot(&self) -> Option<usize> {
        let Scalar::Text(s) = self else {
            return None;
        };
        let inner = s.strip_prefix("<num")?.strip_suffix('>')?;
        if inner.is_empty() {
            return Some(0);
        }
        match inner.parse::<usize>() {
            Ok(k) if k >= 1 => Some(k - 1),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandFrame {
    pub action: String,
    #[serde(default)]
    pub object: Option<String>,
    #[serde(default)]
    pub target_id: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, Scalar>,
}

impl CommandFrame {
    pub fn new(action: impl Into<String>) -> Self {
        CommandFrame {
            action: action.into(),
            object: None,
            target_id: None,
            params: BTreeMap::new(),
        }
    }
}

/// A frame whose params may contain numeral slot markers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandTemplate {
    pub action: String,
    #[serde(default)]
    pub object: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, Scalar>,
}

impl CommandTemplate {
    pub fn new(action: impl Into<String>) -> Self {
        CommandTemplate {
            action: action.into(),
            object: None,
            params: BTreeMap::new(),
        }
    }

    pub fn with_object(mut self, object: impl Into<String>) -> Self {
        self.object = Some(object.into());
        self
    }

    pub fn with_param(mut self, name: impl Into<String>, value: Scalar) -> Self {
        self.params.insert(name.into(), value);
        self
    }

    fn max_slot(&self) -> Option<usize> {
        self.params.values().filter_map(Scalar::slot).max()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CommandError {
    #[error("uninterpretable sentence `{0}`")]
    Uninterpretable(String),
    #[error("template slot {slot} is not bindable from pattern `{pattern}`")]
    UnbindableSlot { pattern: String, slot: String },
    #[error("action must not be empty")]
    EmptyAction,
}

/// Sentence patterns with numerals abstracted, mapped to frame templates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeaningRegistry {
    entries: BTreeMap<String, CommandTemplate>,
}

impl MeaningRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, pattern: &str) -> Option<&CommandTemplate> {
        self.entries.get(pattern)
    }

    pub fn contains(&self, pattern: &str) -> bool {
        self.entries.contains_key(pattern)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &CommandTemplate)> {
        self.entries.iter()
    }

    /// Registers or replaces the meaning of `pattern`.
    pub fn insert(&mut self, pattern: impl Into<String>, template: CommandTemplate) -> Result<(), CommandError> {
        let pattern = pattern.into();
        if template.action.trim().is_empty() {
            return Err(CommandError::EmptyAction);
        }
        let slots = pattern.split(' ').filter(|w| *w == NUM_SLOT).count();
        if let Some(max) = template.max_slot() {
            if max >= slots {
                let slot = template
                    .params
                    .values()
                    .find(|v| v.slot() == Some(max))
                    .map(|v| match v {
                        Scalar::Text(s) => s.clone(),
                        Scalar::Int(i) => i.to_string(),
                    })
                    .unwrap_or_default();
                return Err(CommandError::UnbindableSlot { pattern, slot });
            }
        }
        self.entries.insert(pattern, template);
        Ok(())
    }
}

fn is_numeral(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_digit())
}

/// Space-joined leaf values with all-digit values replaced by `<num>`.
pub fn normalize_pattern(tree: &ParseTree) -> String {
    tree.leaves()
        .iter()
        .filter_map(|l| l.val())
        .map(|v| if is_numeral(v) { NUM_SLOT } else { v })
        .collect::<Vec<_>>()
        .join(" ")
}

fn numerals(tree: &ParseTree) -> Vec<Scalar> {
    tree.leaves()
        .iter()
        .filter_map(|l| l.val())
        .filter(|v| is_numeral(v))
        .map(|v| v.parse().map(Scalar::Int).unwrap_or_else(|_| Scalar::Text(v.to_string())))
        .collect()
}

fn leaf_index(leaf: &ParseTree) -> Option<usize> {
    leaf.leaf.as_ref().map(|l| l.index)
}

/// Builds the frame for an attributed tree. A registered pattern wins;
/// otherwise the first verb is the action and the last non-numeral noun
/// the object. A lone noun is its own action.
pub fn interpret(
    tree: &ParseTree,
    s: &MultimodalSentence,
    reg: &MeaningRegistry,
) -> Result<CommandFrame, CommandError> {
    let pattern = normalize_pattern(tree);
    let nums = numerals(tree);

    if let Some(template) = reg.get(&pattern) {
        let params = template
            .params
            .iter()
            .map(|(k, v)| {
                let bound = match v.slot() {
                    Some(i) => nums.get(i).cloned().unwrap_or_else(|| v.clone()),
                    None => v.clone(),
                };
                (k.clone(), bound)
            })
            .collect();
        return Ok(CommandFrame {
            action: template.action.clone(),
            object: template.object.clone(),
            target_id: s.referents.values().next().cloned(),
            params,
        });
    }

    let leaves = tree.leaves();
    let verb = leaves.iter().find(|l| l.synrole() == Some(SynRole::Verb));
    let noun = leaves
        .iter()
        .rev()
        .find(|l| l.synrole() == Some(SynRole::Noun) && !l.val().is_some_and(is_numeral));

    let mut frame = match (verb, noun) {
        (Some(v), noun) => {
            let mut f = CommandFrame::new(v.val().unwrap_or_default());
            f.object = noun.and_then(|n| n.val()).map(String::from);
            f
        }
        (None, Some(n)) if leaves.len() == 1 => CommandFrame::new(n.val().unwrap_or_default()),
        _ => return Err(CommandError::Uninterpretable(pattern)),
    };
    if frame.action.is_empty() {
        return Err(CommandError::Uninterpretable(pattern));
    }
    frame.target_id = noun
        .and_then(|n| leaf_index(n))
        .and_then(|i| s.referents.get(&i))
        .or_else(|| s.referents.values().next())
        .cloned();
    for (k, n) in nums.into_iter().enumerate() {
        let key = if k == 0 {
            "value".to_string()
        } else {
            format!("value_{}", k + 1)
        };
        frame.params.insert(key, n);
    }
    Ok(frame)
}

/// Sentences of the shapes `NOUN`, `VERBT`, `VERBT NOUN` and
/// `VERBT DT NOUN` over the grammar's preterminals.
pub(crate) fn seed_shaped_sentences(g: &MultimodalGrammar) -> Vec<Vec<String>> {
    let words = |pre: &str| -> Vec<String> {
        g.productions
            .iter()
            .filter(|p| p.lhs == pre && p.rhs.len() == 1)
            .filter_map(|p| g.terminal(&p.rhs[0]))
            .map(|t| t.val.clone())
            .collect()
    };
    let (nouns, verbs, dets) = (words("NOUN"), words("VERBT"), words("DT"));
    let mut out: Vec<Vec<String>> = nouns.iter().map(|n| vec![n.clone()]).collect();
    for v in &verbs {
        out.push(vec![v.clone()]);
        for n in &nouns {
            out.push(vec![v.clone(), n.clone()]);
            for d in &dets {
                out.push(vec![v.clone(), d.clone(), n.clone()]);
            }
        }
    }
    out
}

pub(crate) fn spoken(words: &[String]) -> MultimodalSentence {
    MultimodalSentence::from_tokens(
        words
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let t0 = i as u64 * 400;
                MultimodalToken::new(w.clone(), Modality::Speech, t0, t0 + 300)
            })
            .collect(),
    )
}

/// Structural meanings for every seed sentence of the shapes derived by
/// `S -> NOUN`, `S -> VP(VERBT)` and `S -> VP(VERBT NP)`.
pub fn seed_meanings() -> MeaningRegistry {
    let parser = Parser::new(seed_grammar());
    let empty = MeaningRegistry::new();
    let mut reg = MeaningRegistry::new();
    for words in seed_shaped_sentences(parser.grammar()) {
        let s = spoken(&words);
        let Ok(outcome) = parser.parse(&s) else {
            continue;
        };
        let Some(tree) = outcome.tree() else {
            continue;
        };
        let Ok(frame) = interpret(tree, &s, &empty) else {
            continue;
        };
        let mut template = CommandTemplate::new(frame.action);
        template.object = frame.object;
        template.params = frame.params;
        reg.insert(normalize_pattern(tree), template)
            .expect("structural frames carry no slots");
    }
    reg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::fuse;
    use crate::lexicon::FusionConfig;
    use crate::parser::ParseOutcome;

    fn attributed(streams: Vec<Vec<MultimodalToken>>) -> (ParseTree, MultimodalSentence) {
        let g = seed_grammar();
        let s = fuse(&streams, &g, &FusionConfig::for_grammar(&g)).unwrap();
        match Parser::new(g).parse(&s).unwrap() {
            ParseOutcome::Parsed(t) => (t, s),
            ParseOutcome::NotParseable(r) => panic!("not parseable: {:?}", r.unknown_values()),
        }
    }

    fn sp(v: &str, a: u64, b: u64) -> MultimodalToken {
        MultimodalToken::speech(v, a, b)
    }

    #[test]
    fn s3_frame() {
        let (tree, s) = attributed(vec![
            vec![sp("play", 0, 300), sp("this", 350, 500), sp("song", 550, 800)],
            vec![MultimodalToken::gesture("point", 400, 600).pointing_at("track_7")],
        ]);
        let frame = interpret(&tree, &s, &MeaningRegistry::new()).unwrap();
        assert_eq!(frame.action, "play");
        assert_eq!(frame.object.as_deref(), Some("song"));
        assert_eq!(frame.target_id.as_deref(), Some("track_7"));
        assert!(frame.params.is_empty());
        assert_eq!(normalize_pattern(&tree), "play this song");
    }

    #[test]
    fn s2_frame() {
        let (tree, s) = attributed(vec![
            vec![sp("turn", 0, 200), sp("on", 210, 400), sp("this", 500, 700)],
            vec![MultimodalToken::gesture("temperature", 600, 900).pointing_at("hvac_icon")],
        ]);
        let frame = interpret(&tree, &s, &seed_meanings()).unwrap();
        assert_eq!(frame.action, "turn on");
        assert_eq!(frame.object.as_deref(), Some("temperature"));
        assert_eq!(frame.target_id.as_deref(), Some("hvac_icon"));
    }

    #[test]
    fn help_is_its_own_action() {
        let (tree, s) = attributed(vec![vec![sp("help", 0, 300)]]);
        assert_eq!(normalize_pattern(&tree), "help");
        let frame = interpret(&tree, &s, &MeaningRegistry::new()).unwrap();
        assert_eq!(frame, CommandFrame::new("help"));
    }

    #[test]
    fn seed_registry_contents() {
        let reg = seed_meanings();
        assert_eq!(reg.get("recall"), Some(&CommandTemplate::new("recall")));
        assert_eq!(
            reg.get("delete this phone-book"),
            Some(&CommandTemplate::new("delete").with_object("phone-book"))
        );
        assert!(!reg.contains("set to <num>"));
        // 10 nouns + 9 verbs + 9 * 10 * 2 verb phrases.
        assert_eq!(reg.len(), 199);
    }

    #[test]
    fn slots_must_be_bindable() {
        let mut reg = MeaningRegistry::new();
        let t = CommandTemplate::new("set")
            .with_object("speaker_volume")
            .with_param("value", Scalar::Text(NUM_SLOT.into()));
        assert!(reg.insert("set to <num>", t.clone()).is_ok());
        assert!(matches!(
            reg.insert("set volume", t),
            Err(CommandError::UnbindableSlot { .. })
        ));
        let two = CommandTemplate::new("range").with_param("hi", Scalar::Text("<num2>".into()));
        assert!(reg.insert("from <num> to <num>", two.clone()).is_ok());
        assert!(reg.insert("from <num>", two).is_err());
        assert_eq!(
            reg.insert("x", CommandTemplate::new(" ")),
            Err(CommandError::EmptyAction)
        );
    }

    #[test]
    fn scalar_wire_format() {
        let frame: CommandFrame = serde_json::from_str(
            r#"{"action":"set","object":"speaker_volume","target_id":null,"params":{"value":15}}"#,
        )
        .unwrap();
        assert_eq!(frame.params["value"], Scalar::Int(15));
        let json = serde_json::to_value(&frame).unwrap();
        assert_eq!(json["params"]["value"], 15);
        assert_eq!(json["target_id"], serde_json::Value::Null);
    }
}
