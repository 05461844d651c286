use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};
use std::time::Duration;

use magfuse_core::command::{interpret, seed_meanings, CommandFrame, CommandTemplate, MeaningRegistry};
use magfuse_core::grammar::{load_grammar, save_grammar, seed_grammar, validate_grammar, MultimodalGrammar, SynRole};
use magfuse_core::learner::{apply_delta, find_cover, propose_delta, LearnError};
use magfuse_core::lexicon::{fuse, FusionConfig, MultimodalSentence, MultimodalToken};
use magfuse_core::parser::{ParseOutcome, ParseTree, Parser, SpanLabel};
use serde::Serialize;
use uuid::Uuid;

use crate::session::{SessionState, SessionView, TeachSession};
use crate::store::{HistoryEntry, Store};
use crate::EngineError;

pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(600);

/// One immutable grammar generation with everything derived from it.
#[derive(Debug)]
pub struct Snapshot {
    pub grammar: MultimodalGrammar,
    pub parser: Parser,
    pub registry: MeaningRegistry,
    pub fusion: FusionConfig,
    pub fingerprint: String,
}

impl Snapshot {
    fn new(grammar: MultimodalGrammar, registry: MeaningRegistry) -> Self {
        Snapshot {
            fusion: FusionConfig::for_grammar(&grammar),
            fingerprint: grammar.fingerprint(),
            parser: Parser::new(grammar.clone()),
            grammar,
            registry,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ParseResponse {
    Parsed {
        tree: ParseTree,
        frame: CommandFrame,
        sentence: MultimodalSentence,
    },
    NotParseable {
        session: SessionView,
        maximal_spans: Vec<SpanLabel>,
    },
}

impl ParseResponse {
    pub fn frame(&self) -> Option<&CommandFrame> {
        match self {
            ParseResponse::Parsed { frame, .. } => Some(frame),
            ParseResponse::NotParseable { .. } => None,
        }
    }

    pub fn session(&self) -> Option<&SessionView> {
        match self {
            ParseResponse::Parsed { .. } => None,
            ParseResponse::NotParseable { session, .. } => Some(session),
        }
    }
}

struct OpenSession {
    session: TeachSession,
    base: Arc<Snapshot>,
}

/// Readers clone the current snapshot; commits and grammar replacement
/// hold `writer` and swap the snapshot only after persistence succeeded.
pub struct Engine {
    current: RwLock<Arc<Snapshot>>,
    writer: Mutex<()>,
    sessions: Mutex<HashMap<Uuid, OpenSession>>,
    history: Mutex<Vec<HistoryEntry>>,
    store: Option<Store>,
    ttl: Duration,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

fn normalize_key(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn is_numeral(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_digit())
}

impl Engine {
    /// An engine without persistence.
    pub fn in_memory(grammar: MultimodalGrammar, registry: MeaningRegistry) -> Result<Self, EngineError> {
        let report = validate_grammar(&grammar);
        if !report.is_ok() {
            return Err(EngineError::InvalidGrammar(report));
        }
        Ok(Self::build(grammar, registry, None, Vec::new()))
    }

    pub fn seeded() -> Self {
        Self::build(seed_grammar(), seed_meanings(), None, Vec::new())
    }

    /// Loads grammar, meanings and history from `store`; a missing grammar
    /// file means the seed grammar with its seed meanings.
    pub fn open(store: Store) -> Result<Self, EngineError> {
        let grammar = store.load_grammar()?;
        let registry = store.load_meanings(seed_meanings)?;
        let history = store.history()?;
        Ok(Self::build(grammar, registry, Some(store), history))
    }

    fn build(
        grammar: MultimodalGrammar,
        registry: MeaningRegistry,
        store: Option<Store>,
        history: Vec<HistoryEntry>,
    ) -> Self {
        Engine {
            current: RwLock::new(Arc::new(Snapshot::new(grammar, registry))),
            writer: Mutex::new(()),
            sessions: Mutex::new(HashMap::new()),
            history: Mutex::new(history),
            store,
            ttl: DEFAULT_SESSION_TTL,
        }
    }

    pub fn with_ttl(mut self, ttl: Duration) -> Self {
        self.ttl = ttl;
        self
    }

    pub fn store(&self) -> Option<&Store> {
        self.store.as_ref()
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn swap(&self, next: Snapshot) {
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(next);
    }

    /// Fusion, parsing and interpretation. An unparseable sentence opens a
    /// teach session.
    pub fn parse(&self, streams: &[Vec<MultimodalToken>]) -> Result<ParseResponse, EngineError> {
        if streams.iter().all(Vec::is_empty) {
            return Err(EngineError::EmptyInput);
        }
        let snap = self.snapshot();
        let sentence = fuse(streams, &snap.grammar, &snap.fusion)?;
        match snap.parser.parse(&sentence)? {
            ParseOutcome::Parsed(tree) => {
                let frame = interpret(&tree, &sentence, &snap.registry)?;
                Ok(ParseResponse::Parsed { tree, frame, sentence })
            }
            ParseOutcome::NotParseable(report) => {
                let mut seen = BTreeSet::new();
                let unknowns = find_cover(&report, &snap.grammar)
                    .unknown_values()
                    .into_iter()
                    .filter(|v| seen.insert(v.to_string()))
                    .map(String::from)
                    .collect();
                let session = TeachSession::open(sentence, unknowns, snap.fingerprint.clone());
                let view = session.view();
                self.sweep();
                lock(&self.sessions).insert(session.id, OpenSession { session, base: snap });
                Ok(ParseResponse::NotParseable {
                    session: view,
                    maximal_spans: report.maximal_spans,
                })
            }
        }
    }

    /// Expires idle sessions and forgets ones idle for twice the TTL.
    fn sweep(&self) {
        let mut sessions = lock(&self.sessions);
        let ttl = self.ttl;
        sessions.retain(|_, s| s.session.touched.elapsed() <= ttl * 2);
        for s in sessions.values_mut() {
            if !s.session.state.is_terminal() && s.session.touched.elapsed() > ttl {
                s.session.finish(SessionState::Expired);
            }
        }
    }

    fn with_session<R>(
        &self,
        id: Uuid,
        expected: SessionState,
        f: impl FnOnce(&mut OpenSession) -> Result<R, EngineError>,
    ) -> Result<R, EngineError> {
        let mut sessions = lock(&self.sessions);
        let entry = sessions.get_mut(&id).ok_or(EngineError::SessionNotFound(id))?;
        if !entry.session.state.is_terminal() && entry.session.touched.elapsed() > self.ttl {
            entry.session.finish(SessionState::Expired);
        }
        if entry.session.state == SessionState::Expired {
            return Err(EngineError::SessionExpired(id));
        }
        entry
            .session
            .expect(expected)
            .map_err(|(expected, actual)| EngineError::WrongState { expected, actual })?;
        f(entry)
    }

    pub fn session(&self, id: Uuid) -> Result<SessionView, EngineError> {
        lock(&self.sessions)
            .get(&id)
            .map(|s| s.session.view())
            .ok_or(EngineError::SessionNotFound(id))
    }

    /// Records a synrole for every unknown token.
    pub fn teach_roles(&self, id: Uuid, roles: BTreeMap<String, SynRole>) -> Result<SessionView, EngineError> {
        self.with_session(id, SessionState::AwaitingRoles, |entry| {
            let roles: BTreeMap<String, SynRole> =
                roles.into_iter().map(|(k, v)| (normalize_key(&k), v)).collect();
            let missing: Vec<String> = entry
                .session
                .unknowns
                .iter()
                .filter(|u| !roles.contains_key(*u))
                .cloned()
                .collect();
            if !missing.is_empty() {
                return Err(LearnError::MissingRoles(missing).into());
            }
            entry.session.set_roles(roles);
            Ok(entry.session.view())
        })
    }

    /// Proposes the rule delta for the session's sentence and meaning.
    pub fn teach_meaning(&self, id: Uuid, meaning: CommandTemplate) -> Result<SessionView, EngineError> {
        self.with_session(id, SessionState::AwaitingMeaning, |entry| {
            let pattern = entry
                .session
                .sentence
                .tokens
                .iter()
                .map(|t| {
                    let v = t.normalized_value();
                    if is_numeral(&v) {
                        "<num>".to_string()
                    } else {
                        v
                    }
                })
                .collect::<Vec<_>>()
                .join(" ");
            MeaningRegistry::new().insert(pattern, meaning.clone())?;
            let delta = propose_delta(
                &entry.base.grammar,
                &entry.session.sentence,
                Some(meaning.clone()),
                &entry.session.roles,
            )?;
            entry.session.set_delta(meaning, delta);
            Ok(entry.session.view())
        })
    }

    /// Commits or rejects the pending delta. A delta whose base grammar is
    /// no longer current expires the session.
    pub fn teach_confirm(&self, id: Uuid, confirmed: bool) -> Result<SessionView, EngineError> {
        let _writer = lock(&self.writer);
        self.with_session(id, SessionState::AwaitingConfirm, |entry| {
            if !confirmed {
                entry.session.finish(SessionState::Rejected);
                return Ok(entry.session.view());
            }
            let delta = entry
                .session
                .pending_delta
                .clone()
                .expect("awaiting_confirm carries a delta");
            let snap = self.snapshot();
            let committed = match apply_delta(&snap.grammar, &snap.registry, &delta, true) {
                Ok(c) => c.expect("confirmed delta commits"),
                Err(LearnError::StaleDelta) => {
                    entry.session.finish(SessionState::Expired);
                    return Err(LearnError::StaleDelta.into());
                }
                Err(e) => return Err(e.into()),
            };
            let next = Snapshot::new(committed.grammar, committed.registry);
            let record = HistoryEntry {
                timestamp: chrono::Utc::now().to_rfc3339(),
                session_id: id,
                base_fingerprint: delta.base_fingerprint.clone(),
                fingerprint: next.fingerprint.clone(),
                pattern: committed.pattern,
                rendered: delta.render(),
                delta,
            };
            if let Some(store) = &self.store {
                store.save_grammar(&next.grammar)?;
                store.save_meanings(&next.registry)?;
                store.append_history(&record)?;
            }
            lock(&self.history).push(record);
            self.swap(next);
            entry.session.finish(SessionState::Committed);
            Ok(entry.session.view())
        })
    }

    pub fn grammar_text(&self) -> String {
        save_grammar(&self.snapshot().grammar)
    }

    /// Replaces the grammar after validating `text`; returns the new
    /// fingerprint. The meaning registry is kept.
    pub fn replace_grammar(&self, text: &str) -> Result<String, EngineError> {
        let g = load_grammar(text).map_err(|e| EngineError::GrammarSyntax(e.to_string()))?;
        let report = validate_grammar(&g);
        if !report.is_ok() {
            return Err(EngineError::InvalidGrammar(report));
        }
        let _writer = lock(&self.writer);
        if let Some(store) = &self.store {
            store.save_grammar(&g)?;
        }
        let next = Snapshot::new(g, self.snapshot().registry.clone());
        let fp = next.fingerprint.clone();
        self.swap(next);
        Ok(fp)
    }

    pub fn history(&self) -> Vec<HistoryEntry> {
        lock(&self.history).clone()
    }
}
