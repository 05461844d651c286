use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use magfuse_core::command::CommandTemplate;
use magfuse_core::grammar::SynRole;
use magfuse_core::learner::RuleDelta;
use magfuse_core::lexicon::MultimodalSentence;
use serde::Serialize;
use uuid::Uuid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    AwaitingRoles,
    AwaitingMeaning,
    AwaitingConfirm,
    Committed,
    Rejected,
    Expired,
}

impl SessionState {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            SessionState::Committed | SessionState::Rejected | SessionState::Expired
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SessionState::AwaitingRoles => "awaiting_roles",
            SessionState::AwaitingMeaning => "awaiting_meaning",
            SessionState::AwaitingConfirm => "awaiting_confirm",
            SessionState::Committed => "committed",
            SessionState::Rejected => "rejected",
            SessionState::Expired => "expired",
        }
    }
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One teach dialog. `pending_delta` is set exactly in `AwaitingConfirm`.
#[derive(Debug, Clone)]
pub struct TeachSession {
    pub id: Uuid,
    pub state: SessionState,
    pub sentence: MultimodalSentence,
    pub unknowns: Vec<String>,
    pub grammar_fingerprint: String,
    pub roles: BTreeMap<String, SynRole>,
    pub meaning: Option<CommandTemplate>,
    pub pending_delta: Option<RuleDelta>,
    pub touched: Instant,
}

impl TeachSession {
    pub fn open(sentence: MultimodalSentence, unknowns: Vec<String>, grammar_fingerprint: String) -> Self {
        TeachSession {
            id: Uuid::new_v4(),
            state: SessionState::AwaitingRoles,
            sentence,
            unknowns,
            grammar_fingerprint,
            roles: BTreeMap::new(),
            meaning: None,
            pending_delta: None,
            touched: Instant::now(),
        }
    }

    pub fn expect(&self, state: SessionState) -> Result<(), (SessionState, SessionState)> {
        if self.state == state {
            Ok(())
        } else {
            Err((state, self.state))
        }
    }

    pub fn set_roles(&mut self, roles: BTreeMap<String, SynRole>) {
        self.roles = roles;
        self.state = SessionState::AwaitingMeaning;
        self.touched = Instant::now();
    }

    pub fn set_delta(&mut self, meaning: CommandTemplate, delta: RuleDelta) {
        self.meaning = Some(meaning);
        self.pending_delta = Some(delta);
        self.state = SessionState::AwaitingConfirm;
        self.touched = Instant::now();
    }

    pub fn finish(&mut self, state: SessionState) {
        debug_assert!(state.is_terminal());
        self.state = state;
        self.pending_delta = None;
        self.touched = Instant::now();
    }

    pub fn view(&self) -> SessionView {
        let delta = self.pending_delta.as_ref();
        SessionView {
            id: self.id,
            state: self.state,
            unknowns: self.unknowns.clone(),
            sentence: self.sentence.clone(),
            grammar_fingerprint: self.grammar_fingerprint.clone(),
            roles: self.roles.clone(),
            pending_delta: delta.cloned(),
            rendered_delta: delta.map(RuleDelta::render),
        }
    }
}

/// Wire form of a session.
#[derive(Debug, Clone, Serialize)]
pub struct SessionView {
    pub id: Uuid,
    pub state: SessionState,
    pub unknowns: Vec<String>,
    pub sentence: MultimodalSentence,
    pub grammar_fingerprint: String,
    pub roles: BTreeMap<String, SynRole>,
    pub pending_delta: Option<RuleDelta>,
    pub rendered_delta: Option<String>,
}
