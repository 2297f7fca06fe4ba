//! Graph compilation: lexicon, CTC topology, numerator and denominator graphs.

mod denominator;
mod fsa;
mod lexicon;
mod numerator;
mod topology;

pub use denominator::{
    build_denominator_graph, estimate_phone_bigram, BigramLm, Context, BIGRAM_FORMAT_VERSION,
};
pub use fsa::{Arc, Fsa, StateId, FSA_FORMAT_VERSION};
pub use lexicon::{
    Lexicon, PhoneId, TokenId, BLANK, BLANK_SYMBOL, DEFAULT_SILENCE_PROB, LEXICON_FORMAT_VERSION,
};
pub use numerator::{build_numerator_graph, build_numerator_graph_from_symbols};
pub use topology::{build_ctc_topology, ctc_collapse};

pub(crate) use fsa::ByteCursor;
pub(crate) use numerator::build_numerator_with_topology;
