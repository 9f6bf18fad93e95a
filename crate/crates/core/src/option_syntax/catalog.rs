use std::collections::BTreeMap;

use super::{OptionError, OptionSpec, CATEGORIES};

/// The bundled catalog.
pub const DEFAULT_CATALOG: &str = include_str!("../../fixtures/catalog.tsv");

/// Options keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OptionCatalog {
    specs: BTreeMap<String, OptionSpec>,
}

impl OptionCatalog {
    /// Parses a tab-separated catalog document.
    pub fn load(document: &str) -> Result<Self, OptionError> {
        let mut specs = BTreeMap::new();
        for (idx, raw) in document.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.splitn(3, '\t').collect();
            let [name, category, expression] = fields[..] else {
                return Err(OptionError::Format {
                    line: line_no,
                    reason: "expected name<TAB>category<TAB>syntax".into(),
                });
            };
            let name = name.trim();
            if name.is_empty() {
                return Err(OptionError::Format {
                    line: line_no,
                    reason: "empty option name".into(),
                });
            }
            let category = category.trim();
            if !CATEGORIES.contains(&category) {
                return Err(OptionError::Format {
                    line: line_no,
                    reason: format!("unknown category `{category}`"),
                });
            }
            let spec = OptionSpec::new(name, category, expression.trim())?;
            if specs.insert(name.to_owned(), spec).is_some() {
                return Err(OptionError::Duplicate(name.to_owned()));
            }
        }
        Ok(Self { specs })
    }

    /// The bundled catalog.
    pub fn bundled() -> Self {
        Self::load(DEFAULT_CATALOG).expect("bundled catalog parses")
    }

    pub fn get(&self, name: &str) -> Option<&OptionSpec> {
        self.specs.get(name)
    }

    pub fn require(&self, name: &str) -> Result<&OptionSpec, OptionError> {
        self.get(name)
            .ok_or_else(|| OptionError::Unknown(name.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &OptionSpec> {
        self.specs.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::option_syntax::ValueSyntax;

    #[test]
    fn rows_parse() {
        let cat = OptionCatalog::load(
            "cpu-shares\tint\t<U18>\ndetach\tbool\t<Bool>\ncpu-period\tint\t(1000, 1000000)\n",
        )
        .unwrap();
        assert_eq!(cat.get("cpu-shares").unwrap().syntax, ValueSyntax::UnsignedInt { bits: 18 });
        assert_eq!(cat.get("detach").unwrap().syntax, ValueSyntax::BoolFlag);
        assert_eq!(
            cat.get("cpu-period").unwrap().syntax,
            ValueSyntax::ContinuousRange { lo: 1000, hi: 1_000_000 }
        );
    }

    #[test]
    fn malformed_syntax_names_option() {
        let err = OptionCatalog::load("good\tint\t<U8>\nbroken\tint\t<U18\n").unwrap_err();
        assert!(matches!(err, OptionError::Syntax { ref option, .. } if option == "broken"));
    }

    #[test]
    fn duplicate_is_conflict() {
        let err = OptionCatalog::load("a\tint\t<U8>\na\tbool\t<Bool>\n").unwrap_err();
        assert_eq!(err, OptionError::Duplicate("a".into()));
    }

    #[test]
    fn missing_columns() {
        assert!(matches!(
            OptionCatalog::load("a <U8>\n"),
            Err(OptionError::Format { line: 1, .. })
        ));
        assert!(matches!(
            OptionCatalog::load("# c\na\tnumber\t<U8>\n"),
            Err(OptionError::Format { line: 2, .. })
        ));
    }

    #[test]
    fn bundled_catalog_has_every_table_row() {
        let cat = OptionCatalog::bundled();
        for name in [
            "attach",
            "detach",
            "tty",
            "interactive",
            "stop-signal",
            "health-retries",
            "publish",
            "pids-limit",
            "memory",
            "memory-swap",
            "memory-reservation",
            "kernel-memory",
            "cpu-shares",
            "cpu-period",
            "stop-timeout",
            "volume",
            "oom-score-adj",
            "shm-size",
        ] {
            assert!(cat.get(name).is_some(), "missing {name}");
        }
        assert!(cat.get("cap-add").is_none());
        assert!(cat.get("help").is_none());
    }
}
