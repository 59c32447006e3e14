//! MACCS-style 166-bit structural keys.
//!
//! Keys come from a `key<TAB>SMARTS[<TAB>min_count]` file; the key number is
//! the 1-based bit. A key with `min_count = N` is set only when more than `N`
//! distinct atom sets match. The shipped file leaves these keys undefined, so
//! they are always 0:
//!
//! 1–7, 9, 10, 12, 18, 26, 31, 35, 44, 59, 62, 64, 75, 86, 87, 90, 91, 101,
//! 105, 107, 113, 116, 118, 125–129, 133–135, 143, 144, 147, 149, 150, 155,
//! 160, 166.
//!
//! Most of these test isotopes, element groups outside the supported element
//! set, or SMARTS features the matcher does not support (disjunctions and
//! recursive SMARTS).

use std::path::Path;
use std::sync::LazyLock;

use crate::chem::smarts::unique_match_count;
use crate::chem::{match_pattern, parse_smarts, MolecularGraph, SmartsPattern};
use crate::error::DataError;

pub const MACCS_BITS: usize = 166;

const BUILTIN_KEYS: &str = include_str!("../../data/maccs_keys.tsv");

static BUILTIN: LazyLock<MaccsKeys> =
    LazyLock::new(|| MaccsKeys::parse(BUILTIN_KEYS).expect("shipped MACCS keys parse"));

#[derive(Debug, Clone, PartialEq)]
pub struct MaccsKey {
    /// 0-based bit position.
    pub bit: usize,
    pub pattern: SmartsPattern,
    pub min_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaccsKeys {
    keys: Vec<MaccsKey>,
    source: String,
}

impl MaccsKeys {
    pub fn builtin() -> &'static MaccsKeys {
        &BUILTIN
    }

    pub fn from_path(path: &Path) -> Result<MaccsKeys, DataError> {
        let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        MaccsKeys::parse(&text)
    }

    pub fn parse(text: &str) -> Result<MaccsKeys, DataError> {
        let mut keys: Vec<MaccsKey> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let bad = |message: String| DataError::Format {
                what: "MACCS key file".into(),
                line: lineno + 1,
                message,
            };
            let fields: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(bad("expected key<TAB>SMARTS[<TAB>min_count]".into()));
            }
            let key: usize = fields[0]
                .parse()
                .map_err(|_| bad(format!("bad key number `{}`", fields[0])))?;
            if !(1..=MACCS_BITS).contains(&key) {
                return Err(bad(format!("key {key} outside 1..={MACCS_BITS}")));
            }
            if keys.iter().any(|k| k.bit == key - 1) {
                return Err(bad(format!("key {key} defined twice")));
            }
            let pattern = parse_smarts(fields[1]).map_err(|source| DataError::Pattern {
                name: format!("MACCS key {key}"),
                source,
            })?;
            let min_count = match fields.get(2) {
                Some(c) => c.parse().map_err(|_| bad(format!("bad count `{c}`")))?,
                None => 0,
            };
            keys.push(MaccsKey {
                bit: key - 1,
                pattern: pattern.with_name(format!("maccs{key}")),
                min_count,
            });
        }
        Ok(MaccsKeys {
            keys,
            source: text.to_string(),
        })
    }

    pub fn keys(&self) -> &[MaccsKey] {
        &self.keys
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

/// The 166-bit key vector of `graph`.
pub fn maccs_fingerprint(graph: &MolecularGraph, keys: &MaccsKeys) -> Vec<f64> {
    let mut out = vec![0.0; MACCS_BITS];
    for key in &keys.keys {
        let matches = match_pattern(&key.pattern, graph);
        let hit = if key.min_count == 0 {
            !matches.is_empty()
        } else {
            unique_match_count(&matches) > key.min_count
        };
        if hit {
            out[key.bit] = 1.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn benzene_sets_aromatic_key() {
        let fp = maccs_fingerprint(&parse_smiles("c1ccccc1").unwrap(), MaccsKeys::builtin());
        assert_eq!(fp[162 - 1], 1.0);
        assert_eq!(fp[163 - 1], 1.0);
    }

    #[test]
    fn ethane_sets_few_keys() {
        let fp = maccs_fingerprint(&parse_smiles("CC").unwrap(), MaccsKeys::builtin());
        assert_eq!(fp[162 - 1], 0.0);
        assert!(fp.iter().filter(|&&b| b == 1.0).count() <= 4);
    }

    #[test]
    fn empty_file_gives_zero_vector() {
        let keys = MaccsKeys::parse("# nothing\n").unwrap();
        let fp = maccs_fingerprint(&parse_smiles("c1ccccc1O").unwrap(), &keys);
        assert_eq!(fp, vec![0.0; MACCS_BITS]);
    }

    #[test]
    fn count_predicate() {
        let keys = MaccsKeys::parse("10\t[#8]\t1\n").unwrap();
        let one = maccs_fingerprint(&parse_smiles("CO").unwrap(), &keys);
        let two = maccs_fingerprint(&parse_smiles("OCO").unwrap(), &keys);
        assert_eq!(one[9], 0.0);
        assert_eq!(two[9], 1.0);
    }

    #[test]
    fn undefined_keys_match_module_docs() {
        let documented: Vec<usize> = [1, 2, 3, 4, 5, 6, 7, 9, 10, 12, 18, 26, 31, 35, 44, 59]
            .into_iter()
            .chain([62, 64, 75, 86, 87, 90, 91, 101, 105, 107, 113, 116, 118])
            .chain([125, 126, 127, 128, 129, 133, 134, 135, 143, 144, 147, 149])
            .chain([150, 155, 160, 166])
            .collect();
        let defined: Vec<usize> = MaccsKeys::builtin().keys().iter().map(|k| k.bit + 1).collect();
        let missing: Vec<usize> = (1..=MACCS_BITS).filter(|k| !defined.contains(k)).collect();
        assert_eq!(missing, documented);
    }

    #[test]
    fn malformed_files() {
        for text in ["0\tC", "167\tC", "x\tC", "5\tC\tmany", "5", "5\tC\n5\tN"] {
            assert!(MaccsKeys::parse(text).is_err(), "{text:?}");
        }
    }
}
