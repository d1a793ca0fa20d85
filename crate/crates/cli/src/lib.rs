//! Pipeline orchestration behind the `gobench` command: record stores,
//! engine annotation, test-set curation, shards, and experiment runs.

pub mod agents;
pub mod annotate;
pub mod config;
pub mod curate;
pub mod experiment;
pub mod knowledge;
pub mod shards;
pub mod store;
