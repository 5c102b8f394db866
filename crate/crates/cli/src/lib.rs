//! Corpus-scale runs over weighted-voting proposals: ingestion of
//! newline-delimited JSON records, ballot-extraction attacks, B-privacy
//! computation and CSV/JSON reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod config;
pub mod ingest;
pub mod pipeline;
pub mod report;
pub mod synth;
