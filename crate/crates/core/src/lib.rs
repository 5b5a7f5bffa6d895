//! Embedded storage and retrieval for word embedding collections (WECs).
//!
//! A [`Catalog`] holds any number of WECs, each named by a [`WecIdentifier`]
//! and bound to the preprocessing pipeline it was trained with. Queries may
//! name several WECs at once with brace sets (`dims:{100,300}`) and
//! [`get_vectors`] returns one result per expanded identifier.
//!
//! ```no_run
//! use wecstore::{get_vectors, Catalog, Inputs, PreprocessCache, RetrieveOptions};
//!
//! let catalog = Catalog::open("wecs", false)?;
//! let cache = PreprocessCache::default();
//! let lines = vec!["Petri nets are bipartite graphs".to_string()];
//! let res = get_vectors(
//!     &catalog,
//!     "algo:glove;dataset:wiki;dims:{100,300};fold:1;unit:token",
//!     &cache,
//!     Inputs::Raw(&lines),
//!     RetrieveOptions::default(),
//! )?;
//! for wec in &res.per_wec {
//!     println!("{}: {} hits", wec.identifier, wec.units[0].pairs().len());
//! }
//! # Ok::<(), wecstore::Error>(())
//! ```

pub mod analyse;
pub mod catalog;
pub mod cli;
pub mod identifier;
pub mod preprocess;
pub mod retrieve;
pub mod store;

use thiserror::Error;

pub use analyse::{
    average_vector, cosine_distance, export_heatmap, pairwise_distances, similarity_matrix,
    AnalyseError, DistanceRanking, HeatmapFormat, Metric, SentenceVector, SimilarityMatrix,
};
pub use catalog::{Catalog, CatalogEntry, CatalogError, PhraseJoin, PhraseSetup};
pub use identifier::{
    normalize, parse_identifier, parse_query, IdentifierError, WecIdentifier, WecQuery,
};
pub use preprocess::{
    PhraseModel, PhraseParams, PipelineDescriptor, PipelineOptions, PreprocessCache, StopwordList,
};
pub use retrieve::{get_vectors, Inputs, RetrievalResult, RetrieveOptions, UnitResult, WecResult};
pub use store::{DuplicatePolicy, HeaderMode, ImportOptions, ImportReport, StoreError, WecStore};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Identifier(#[from] IdentifierError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Pipeline(#[from] preprocess::PipelineError),
    #[error(transparent)]
    Phrase(#[from] preprocess::PhraseError),
    #[error(transparent)]
    Analyse(#[from] AnalyseError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Input(String),
}
