//! Flat-file persistence: the grammar file, its meaning registry beside it
//! and an append-only history of committed deltas.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use magfuse_core::command::MeaningRegistry;
use magfuse_core::grammar::{load_grammar, save_grammar, seed_grammar, validate_grammar, MultimodalGrammar};
use magfuse_core::learner::RuleDelta;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::EngineError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub timestamp: String,
    pub session_id: Uuid,
    pub base_fingerprint: String,
    pub fingerprint: String,
    pub pattern: String,
    pub rendered: String,
    pub delta: RuleDelta,
}

#[derive(Debug, Clone)]
pub struct Store {
    grammar: PathBuf,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

impl Store {
    pub fn new(grammar: impl Into<PathBuf>) -> Self {
        Store {
            grammar: grammar.into(),
        }
    }

    pub fn grammar_path(&self) -> &Path {
        &self.grammar
    }

    pub fn meanings_path(&self) -> PathBuf {
        sibling(&self.grammar, ".meanings.json")
    }

    pub fn history_path(&self) -> PathBuf {
        sibling(&self.grammar, ".history.jsonl")
    }

    /// The stored grammar, or the seed grammar when no file exists yet.
    pub fn load_grammar(&self) -> Result<MultimodalGrammar, EngineError> {
        let text = match fs::read_to_string(&self.grammar) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(seed_grammar()),
            Err(e) => return Err(EngineError::io(&self.grammar, e)),
        };
        let g = load_grammar(&text).map_err(|e| EngineError::GrammarSyntax(e.to_string()))?;
        let report = validate_grammar(&g);
        if !report.is_ok() {
            return Err(EngineError::InvalidGrammar(report));
        }
        Ok(g)
    }

    /// Stored meanings, or `fallback` when the file does not exist.
    pub fn load_meanings(&self, fallback: impl FnOnce() -> MeaningRegistry) -> Result<MeaningRegistry, EngineError> {
        let path = self.meanings_path();
        match fs::read_to_string(&path) {
            Ok(t) => serde_json::from_str(&t).map_err(|e| EngineError::Corrupt {
                path: path.display().to_string(),
                reason: e.to_string(),
            }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(fallback()),
            Err(e) => Err(EngineError::io(&path, e)),
        }
    }

    pub fn save_grammar(&self, g: &MultimodalGrammar) -> Result<(), EngineError> {
        write_atomic(&self.grammar, save_grammar(g).as_bytes()).map_err(|e| EngineError::io(&self.grammar, e))
    }

    pub fn save_meanings(&self, reg: &MeaningRegistry) -> Result<(), EngineError> {
        let path = self.meanings_path();
        let json = serde_json::to_vec_pretty(reg).expect("registry serializes");
        write_atomic(&path, &json).map_err(|e| EngineError::io(&path, e))
    }

    pub fn append_history(&self, entry: &HistoryEntry) -> Result<(), EngineError> {
        let path = self.history_path();
        let mut line = serde_json::to_string(entry).expect("history entry serializes");
        line.push('\n');
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| EngineError::io(&path, e))?;
        f.write_all(line.as_bytes())
            .and_then(|_| f.sync_all())
            .map_err(|e| EngineError::io(&path, e))
    }

    pub fn history(&self) -> Result<Vec<HistoryEntry>, EngineError> {
        let path = self.history_path();
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(EngineError::io(&path, e)),
        };
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                serde_json::from_str(l).map_err(|e| EngineError::Corrupt {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                })
            })
            .collect()
    }
}
