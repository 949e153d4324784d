pub mod error;
pub mod eval;
pub mod lexicon;
pub mod neural;
pub mod phonology;
pub mod runner;
pub mod seqcodec;
pub mod synth;

pub use error::{Error, Result};
