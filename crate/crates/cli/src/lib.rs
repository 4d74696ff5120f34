//! File IO, filesystem ingestion and synthetic data generation around the
//! `xmlcube-core` engine, shared by the command-line binary and the test
//! suites.

pub mod gen;
pub mod ingest;
pub mod io;
