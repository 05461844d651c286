//! Teach-loop service around the multimodal grammar engine: fusion, parsing
//! and interpretation per request, three-step teach sessions for sentences
//! the grammar cannot parse, and flat-file persistence of the grammar.

pub mod engine;
pub mod http;
pub mod session;
pub mod store;

use std::path::Path;

use magfuse_core::command::CommandError;
use magfuse_core::grammar::ValidationReport;
use magfuse_core::learner::LearnError;
use magfuse_core::lexicon::LexiconError;
use magfuse_core::parser::ParseError;
use uuid::Uuid;

pub use engine::{Engine, ParseResponse, Snapshot};
pub use session::{SessionState, SessionView};
pub use store::{HistoryEntry, Store};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("malformed request: {0}")]
    Malformed(String),
    #[error("empty input")]
    EmptyInput,
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Command(#[from] CommandError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("no teach session {0}")]
    SessionNotFound(Uuid),
    #[error("teach session {0} has expired")]
    SessionExpired(Uuid),
    #[error("session is {actual}, expected {expected}")]
    WrongState {
        expected: SessionState,
        actual: SessionState,
    },
    #[error("grammar syntax: {0}")]
    GrammarSyntax(String),
    #[error("invalid grammar:\n{0}")]
    InvalidGrammar(ValidationReport),
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
    #[error("{path} is corrupt: {reason}")]
    Corrupt { path: String, reason: String },
}

impl EngineError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        EngineError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        }
    }

    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::Malformed(_) => "malformed",
            EngineError::EmptyInput | EngineError::Parse(ParseError::EmptyInput) => "empty_input",
            EngineError::Lexicon(LexiconError::UnresolvableDeictic { .. }) => "unresolvable_deictic",
            EngineError::Lexicon(_) => "invalid_tokens",
            EngineError::Parse(_) => "parse_error",
            EngineError::Command(_) => "uninterpretable",
            EngineError::Learn(LearnError::MissingRoles(_)) => "missing_roles",
            EngineError::Learn(LearnError::MeaningRequired) => "meaning_required",
            EngineError::Learn(LearnError::StaleDelta) => "stale_delta",
            EngineError::Learn(LearnError::AlreadyParseable) => "already_parseable",
            EngineError::Learn(LearnError::Meaning(_)) => "bad_meaning",
            EngineError::Learn(_) => "learn_error",
            EngineError::SessionNotFound(_) => "session_not_found",
            EngineError::SessionExpired(_) => "session_expired",
            EngineError::WrongState { .. } => "wrong_state",
            EngineError::GrammarSyntax(_) => "grammar_syntax",
            EngineError::InvalidGrammar(_) => "invalid_grammar",
            EngineError::Io { .. } => "io",
            EngineError::Corrupt { .. } => "corrupt",
        }
    }
}
