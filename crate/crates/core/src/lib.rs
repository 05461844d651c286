//! Grammar-level fusion of speech and gesture input.
//!
//! Recognizer outputs become terminals of a multimodal attribute grammar,
//! are fused into one time-ordered sentence, parsed with a CYK chart and
//! attributed bottom-up. Sentences the grammar cannot parse can be taught:
//! the learner proposes the smallest rule delta that makes them parseable.

pub mod command;
pub mod grammar;
pub mod learner;
pub mod lexicon;
pub mod parser;
