#![allow(dead_code)]

use std::path::PathBuf;

use migra_cli::manifest::Manifest;
use migra_cli::session::Session;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap()
}

pub fn manifest(rel: &str) -> Manifest {
    Manifest::load(&fixture(rel)).unwrap()
}

/// showName models loaded, no rules.
pub fn showname_session() -> Session {
    Session::from_manifest(&manifest("showname/session.toml")).unwrap()
}

/// showName models with the worked example's four rules installed.
pub fn showname_with_rules() -> Session {
    let mut s = showname_session();
    let none = Default::default();
    s.install("AnyCopy", &none, "global").unwrap();
    s.install("CopyAsStaticMethod", &none, "oo:").unwrap();
    let ops = [
        ("OtD".to_string(), "&".to_string()),
        ("OtR".to_string(), "+".to_string()),
    ]
    .into();
    s.install("CopyReplaceOperator", &ops, "oo:").unwrap();
    s.install("RenameAdaptToStaticReceiver", &none, "oo:")
        .unwrap();
    s
}
