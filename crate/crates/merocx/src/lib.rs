//! File formats, reports, scenario runner and acceptance suite on top of
//! `merocx-core`.

pub mod acceptance;
pub mod config;
pub mod json;
pub mod report;
pub mod scenario;
