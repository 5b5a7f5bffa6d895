//! Reproducible preprocessing bound to each WEC.
//!
//! Level 1 ([`pipeline`]) turns a raw line into tokens. Level 2 ([`phrases`])
//! joins adjacent tokens into stored phrases.

pub mod phrases;
pub mod pipeline;
pub mod porter;
pub mod stopwords;
pub mod tokenize;

pub use phrases::{
    apply_phrases_model, apply_phrases_vocab, train_phrase_model, PhraseError, PhraseModel,
    PhraseParams, Vocabulary,
};
pub use pipeline::{
    run_pipeline, ExternalCommand, PipelineDescriptor, PipelineError, PipelineOptions,
    PreprocessCache, Stage,
};
pub use stopwords::StopwordList;
pub use tokenize::{SpecialRules, TokenizerRules};
