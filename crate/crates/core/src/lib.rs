//! Source-text augmentation and evaluation toolkit for keyphrase generation
//! over full-text scholarly articles.

pub mod assemble;
pub mod cli;
pub mod corpus;
pub mod eval;
pub mod retrieve;
pub mod summarize;
pub mod synth;
pub mod textproc;
