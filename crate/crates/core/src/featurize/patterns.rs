//! Named SMARTS pattern lists and functional-group indicators.

use std::path::Path;
use std::sync::LazyLock;

use crate::chem::{match_pattern, parse_smarts, MolecularGraph, SmartsPattern};
use crate::error::DataError;

const BUILTIN_GROUPS: &str = include_str!("../../data/functional_groups.tsv");

static BUILTIN: LazyLock<PatternSet> =
    LazyLock::new(|| PatternSet::parse(BUILTIN_GROUPS).expect("shipped functional groups parse"));

/// An ordered list of named patterns read from `name<TAB>SMARTS` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSet {
    patterns: Vec<SmartsPattern>,
    source: String,
}

impl PatternSet {
    /// The 20 functional groups shipped with the crate.
    pub fn builtin() -> &'static PatternSet {
        &BUILTIN
    }

    pub fn from_path(path: &Path) -> Result<PatternSet, DataError> {
        let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        PatternSet::parse(&text)
    }

    pub fn parse(text: &str) -> Result<PatternSet, DataError> {
        let mut patterns = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((name, smarts)) = trimmed.split_once('\t') else {
                return Err(DataError::Format {
                    what: "pattern file".into(),
                    line: lineno + 1,
                    message: "expected name<TAB>SMARTS".into(),
                });
            };
            let pattern = parse_smarts(smarts.trim()).map_err(|source| DataError::Pattern {
                name: name.to_string(),
                source,
            })?;
            patterns.push(pattern.with_name(name.trim()));
        }
        Ok(PatternSet {
            patterns,
            source: text.to_string(),
        })
    }

    pub fn patterns(&self) -> &[SmartsPattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.patterns.iter().map(|p| p.name.as_str())
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Embeddings of every pattern in `graph`.
    pub fn match_all(&self, graph: &MolecularGraph) -> GroupMatches {
        GroupMatches {
            per_pattern: self
                .patterns
                .iter()
                .map(|p| match_pattern(p, graph))
                .collect(),
        }
    }
}

/// Match results for each pattern of a [`PatternSet`] on one molecule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupMatches {
    pub per_pattern: Vec<Vec<Vec<usize>>>,
}

impl GroupMatches {
    /// Molecule-level indicator: pattern `g` matched at least once.
    pub fn presence(&self) -> Vec<f64> {
        self.per_pattern
            .iter()
            .map(|m| if m.is_empty() { 0.0 } else { 1.0 })
            .collect()
    }

    /// Whether `atom` takes part in any embedding of pattern `g`.
    pub fn participates(&self, g: usize, atom: usize) -> bool {
        self.per_pattern[g].iter().any(|m| m.contains(&atom))
    }
}

/// Binary vector with bit `g` set iff pattern `g` matches the molecule.
pub fn functional_group_vector(graph: &MolecularGraph, patterns: &PatternSet) -> Vec<f64> {
    patterns.match_all(graph).presence()
}
