//! Configuration, event logs, rendering and validation suites for the
//! `brt` command line tool.

pub mod commands;
pub mod config;
pub mod eventlog;
pub mod render;
pub mod suites;
