//! IO companion to `skan-core`: dataset ingest, report/plot emission and
//! the experiment drivers behind the CLI.

pub mod config;
pub mod driver;
pub mod mnist;
pub mod pgm;
pub mod report;
pub mod svg;
