//! Descriptive analytics: the publication–subject bipartite network,
//! expertise weighting and field correlations, keyword extraction and
//! overlap, and mosaic-plot layout.
//!
//! Everything here is a pure function over immutable inputs with
//! deterministic output ordering, so the artifacts (graph exports, keyword
//! tables, rectangle lists) are reproducible byte for byte.

pub mod expertise;
pub mod keywords;
pub mod mosaic;
pub mod network;

use thiserror::Error;

pub use expertise::{
    expertise_weights, field_correlation, ExpertiseWeights, PiAssignment, PiRank, ProjectLead,
};
pub use keywords::{
    bundled_stopwords, extract_keywords, keyword_overlap, parse_stopwords, term_frequencies,
};
pub use mosaic::{mosaic_layout, ContingencyTable3, MosaicRect, GENDERS, LOCATIONS, SECTORS};
pub use network::{
    build_jel_network, export_network, import_network_json, BipartiteGraph, NetworkFormat,
};

/// Errors raised by the descriptive analytics.
#[derive(Debug, Error)]
pub enum DescriptiveError {
    #[error("invalid network document: {0}")]
    InvalidNetworkDocument(String),
    #[error("keyword lists must be non-empty and of equal length, got {a} and {b}")]
    KeywordListMismatch { a: usize, b: usize },
    #[error("field correlation needs at least 2 shared keys, found {found}")]
    TooFewSharedFields { found: usize },
    #[error("field correlation is undefined when a series has zero variance")]
    ZeroVariance,
    #[error("person {person:?} has no project assignments")]
    NoProjects { person: String },
    #[error("person {person:?}, project {project:?} has no subject areas")]
    NoAreas { person: String, project: String },
    #[error("duplicate assignment entry for person {person:?}")]
    DuplicatePerson { person: String },
    #[error("mosaic layout is undefined for an all-zero table")]
    EmptyTable,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
