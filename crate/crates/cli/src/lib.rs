//! Command-line and HTTP front end for the migration engine.

pub mod api;
pub mod manifest;
pub mod runner;
pub mod script;
pub mod session;
