//! Interactive, rule-based migration of procedural programs into
//! object-oriented target models.
//!
//! All programs live in one [`meta_model::Workspace`] as models of a single
//! unified abstract semantic graph. Users issue directives through the
//! [`engine::Engine`]: *produce* migrates a source entity into a target
//! context using scoped productive rules, *map* declares two declarations
//! equivalent and lets adaptive rules repair the references waiting on it.
//! Every directive is a transaction that can be rolled back.

pub mod builtin_rules;
pub mod engine;
pub mod frontends;
pub mod meta_model;
pub mod rules;
