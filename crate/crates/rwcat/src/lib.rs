//! Files, experiments and the command line around `rwcat-core`.

pub mod cli;
pub mod config;
pub mod formats;
pub mod lab;
pub mod manifest;
