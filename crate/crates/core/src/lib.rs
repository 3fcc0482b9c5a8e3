//! Feature extraction and classification for Cookie Theft picture
//! descriptions: transcript ingestion, reference similarity, keyword and
//! fluency features, and a seeded random forest.

pub mod error;
pub mod ingest;
pub mod label;
pub mod llmgen;
pub mod model;
pub mod pipeline;
pub mod refscore;
pub mod taskfeat;
pub mod textproc;
pub mod tfidf;

pub use error::{Error, Result};
pub use label::Label;
