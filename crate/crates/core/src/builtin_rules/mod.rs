//! The built-in rule catalog and a factory instantiating rules by name.

mod adaptive;
mod productive;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::rules::{Rule, RuleFamily};

pub use adaptive::{
    Autowrap, RenameAdaptToArgumentReceiver, RenameAdaptToSameClassReceiver,
    RenameAdaptToStaticReceiver, SimpleRename, SHIM_CLASS,
};
pub use productive::{AnyCopy, CopyReplaceOperator, MemberRule};

/// Declarative summary of one built-in rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleCatalogEntry {
    pub name: &'static str,
    pub family: RuleFamily,
    pub aliases: &'static [&'static str],
    pub required: &'static [&'static str],
    pub optional: &'static [&'static str],
    pub condition: &'static str,
    pub operation: &'static str,
}

const CATALOG: &[RuleCatalogEntry] = &[
    RuleCatalogEntry {
        name: "AnyCopy",
        family: RuleFamily::Productive,
        aliases: &[],
        required: &[],
        optional: &[],
        condition: "always",
        operation: "copy kind, name and payload; migrate children under the copy",
    },
    RuleCatalogEntry {
        name: "CopyAsStaticMethod",
        family: RuleFamily::Productive,
        aliases: &[],
        required: &[],
        optional: &["overwrite"],
        condition: "sub-procedure into a class",
        operation: "static method with the same name returning void; migrate children under it",
    },
    RuleCatalogEntry {
        name: "CopyReplaceOperator",
        family: RuleFamily::Productive,
        aliases: &["CopyReplaceBinaryOperator"],
        required: &["OtD", "OtR"],
        optional: &[],
        condition: "binary operation using OtD",
        operation: "binary operation using OtR; migrate operands under it",
    },
    RuleCatalogEntry {
        name: "FunctionToMethod",
        family: RuleFamily::Productive,
        aliases: &[],
        required: &[],
        optional: &["overwrite"],
        condition: "function into a class",
        operation: "static method with the same name; return type and children migrated under it",
    },
    RuleCatalogEntry {
        name: "ModuleToClass",
        family: RuleFamily::Productive,
        aliases: &[],
        required: &[],
        optional: &["overwrite"],
        condition: "module into a package or project",
        operation: "class with the same name; members migrated under it",
    },
    RuleCatalogEntry {
        name: "GlobalToAttribute",
        family: RuleFamily::Productive,
        aliases: &[],
        required: &[],
        optional: &["overwrite"],
        condition: "module-level variable into a class",
        operation: "static attribute with the same name; type migrated under it",
    },
    RuleCatalogEntry {
        name: "SimpleRename",
        family: RuleFamily::Adaptive,
        aliases: &[],
        required: &[],
        optional: &[],
        condition: "variable access or type reference waiting on the mapped source; same-shaped target",
        operation: "rebind the reference to the mapped target",
    },
    RuleCatalogEntry {
        name: "RenameAdaptToStaticReceiver",
        family: RuleFamily::Adaptive,
        aliases: &[],
        required: &[],
        optional: &[],
        condition: "function invocation; mapped target is a static method",
        operation: "method invocation on the owning class with the same arguments",
    },
    RuleCatalogEntry {
        name: "RenameAdaptToSameClassReceiver",
        family: RuleFamily::Adaptive,
        aliases: &["RenameAdaptToThisReceiver"],
        required: &[],
        optional: &[],
        condition: "function invocation; mapped target is an instance method of the enclosing class",
        operation: "method invocation on `this` with the same arguments",
    },
    RuleCatalogEntry {
        name: "RenameAdaptToArgumentReceiver",
        family: RuleFamily::Adaptive,
        aliases: &[],
        required: &[],
        optional: &[],
        condition: "function invocation with arguments; mapped target is an instance method elsewhere; chooser available",
        operation: "the chosen argument becomes the receiver, the others stay arguments",
    },
    RuleCatalogEntry {
        name: "Autowrap",
        family: RuleFamily::Adaptive,
        aliases: &[],
        required: &[],
        optional: &[],
        condition: "reference waiting on an unmapped library element (tested without a mapping)",
        operation: "empty skeleton in the target, mapping onto it, then regular adaptation",
    },
];

pub fn catalog() -> &'static [RuleCatalogEntry] {
    CATALOG
}

pub fn catalog_entry(name: &str) -> Option<&'static RuleCatalogEntry> {
    CATALOG
        .iter()
        .find(|e| e.name == name || e.aliases.contains(&name))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("rule `{rule}` requires parameter `{param}`")]
    MissingParam { rule: String, param: String },
    #[error("rule `{rule}` has no parameter `{param}`")]
    UnknownParam { rule: String, param: String },
    #[error("bad value `{value}` for parameter `{param}`")]
    BadValue { param: String, value: String },
}

/// Builds the rule called `name` (or one of its aliases) with `params`.
pub fn instantiate(name: &str, params: &BTreeMap<String, String>) -> Result<Rule, CatalogError> {
    let entry = catalog_entry(name).ok_or_else(|| CatalogError::UnknownRule(name.to_string()))?;
    for key in params.keys() {
        if !entry.required.contains(&key.as_str()) && !entry.optional.contains(&key.as_str()) {
            return Err(CatalogError::UnknownParam {
                rule: entry.name.into(),
                param: key.clone(),
            });
        }
    }
    let get = |p: &str| {
        params
            .get(p)
            .cloned()
            .ok_or_else(|| CatalogError::MissingParam {
                rule: entry.name.into(),
                param: p.into(),
            })
    };
    let overwrite = match params.get("overwrite").map(String::as_str) {
        None | Some("false") => false,
        Some("true") => true,
        Some(other) => {
            return Err(CatalogError::BadValue {
                param: "overwrite".into(),
                value: other.into(),
            })
        }
    };
    Ok(match entry.name {
        "AnyCopy" => Rule::productive(AnyCopy::new()),
        "CopyAsStaticMethod" => Rule::productive(MemberRule::copy_as_static_method(overwrite)),
        "CopyReplaceOperator" => {
            Rule::productive(CopyReplaceOperator::new(&get("OtD")?, &get("OtR")?))
        }
        "FunctionToMethod" => Rule::productive(MemberRule::function_to_method(overwrite)),
        "ModuleToClass" => Rule::productive(MemberRule::module_to_class(overwrite)),
        "GlobalToAttribute" => Rule::productive(MemberRule::global_to_attribute(overwrite)),
        "SimpleRename" => Rule::adaptive(SimpleRename::new()),
        "RenameAdaptToStaticReceiver" => Rule::adaptive(RenameAdaptToStaticReceiver::new()),
        "RenameAdaptToSameClassReceiver" => Rule::adaptive(RenameAdaptToSameClassReceiver::new()),
        "RenameAdaptToArgumentReceiver" => Rule::adaptive(RenameAdaptToArgumentReceiver::new()),
        "Autowrap" => Rule::adaptive(Autowrap::new()),
        other => unreachable!("catalog entry {other} without constructor"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_names_are_unique_and_instantiable() {
        let mut names: Vec<&str> = CATALOG
            .iter()
            .flat_map(|e| std::iter::once(e.name).chain(e.aliases.iter().copied()))
            .collect();
        let total = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), total);
        for e in CATALOG {
            let params: BTreeMap<String, String> = e
                .required
                .iter()
                .map(|p| (p.to_string(), "x".to_string()))
                .collect();
            let rule = instantiate(e.name, &params).unwrap();
            assert_eq!(rule.name(), e.name);
            assert_eq!(rule.family(), e.family);
        }
    }

    #[test]
    fn aliases_and_parameter_errors() {
        let params: BTreeMap<String, String> = [("OtD", "&"), ("OtR", "+")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let rule = instantiate("CopyReplaceBinaryOperator", &params).unwrap();
        assert_eq!(
            rule.descriptor().label(),
            "CopyReplaceOperator(OtD=&, OtR=+)"
        );
        assert!(matches!(
            instantiate("CopyReplaceOperator", &BTreeMap::new()),
            Err(CatalogError::MissingParam { .. })
        ));
        assert!(matches!(
            instantiate("Nope", &BTreeMap::new()),
            Err(CatalogError::UnknownRule(_))
        ));
        let bad: BTreeMap<String, String> = [("color".to_string(), "red".to_string())]
            .into_iter()
            .collect();
        assert!(matches!(
            instantiate("AnyCopy", &bad),
            Err(CatalogError::UnknownParam { .. })
        ));
    }
}
