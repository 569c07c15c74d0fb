//! Rhyme-scheme constrained lyric generation for romanized Hindi.
//!
//! The pipeline: tokenize a lyrics corpus ([`corpus`]), file each line's
//! last two words under the sound group of its final word ([`rhyme`]),
//! train a trigram model on lines read backwards ([`ngram`]) and grow new
//! lines from rhyming endings towards their start ([`generator`]).
//! [`eval`] holds the agreement arithmetic used to score generated songs.

pub mod cli;
pub mod corpus;
pub mod eval;
pub mod generator;
pub mod ngram;
pub mod rhyme;

/// Sentinel that terminates every reversed training sequence.
pub const START_TOKEN: &str = "<start>";
