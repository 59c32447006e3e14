use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub const ELECTRONEGATIVITY: &str = "electronegativity";
pub const ATOMIC_VOLUME: &str = "atomic_volume";
pub const ELECTRON_AFFINITY: &str = "electron_affinity";

/// The three normalized element properties, in feature order.
pub const PROPERTIES: [&str; 3] = [ELECTRONEGATIVITY, ATOMIC_VOLUME, ELECTRON_AFFINITY];

/// Which feature groups are computed. A disabled group keeps its dimension and
/// is filled with zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureGroups {
    pub atomic: bool,
    pub edge: bool,
    pub fingerprint: bool,
}

impl Default for FeatureGroups {
    fn default() -> Self {
        FeatureGroups {
            atomic: true,
            edge: true,
            fingerprint: true,
        }
    }
}

/// Where functional-group indicators enter the node features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupLevel {
    /// Bit `g` is set when the atom lies in an embedding of pattern `g`.
    #[default]
    Atom,
    /// Every atom carries the molecule-level presence vector.
    Molecule,
    /// Both blocks, atom-level first.
    Both,
}

impl GroupLevel {
    /// Number of per-pattern blocks in each node row.
    pub fn blocks(self) -> usize {
        match self {
            GroupLevel::Atom | GroupLevel::Molecule => 1,
            GroupLevel::Both => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// `(min, max)` per property name.
    pub normalization_bounds: BTreeMap<String, (f64, f64)>,
    pub morgan_radius: u32,
    pub morgan_bits: usize,
    pub maccs_bits: usize,
    pub topo_bits: usize,
    pub enabled_groups: FeatureGroups,
    pub functional_groups: GroupLevel,
    /// Replacement element table; the shipped one when absent.
    pub element_file: Option<PathBuf>,
    /// Replacement functional-group patterns.
    pub pattern_file: Option<PathBuf>,
    /// Replacement MACCS key definitions.
    pub maccs_file: Option<PathBuf>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        let normalization_bounds = [
            (ELECTRONEGATIVITY, (0.8, 4.0)),
            (ATOMIC_VOLUME, (4.0, 46.0)),
            (ELECTRON_AFFINITY, (-70.0, 350.0)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        FeatureConfig {
            normalization_bounds,
            morgan_radius: 2,
            morgan_bits: 2048,
            maccs_bits: 166,
            topo_bits: 2048,
            enabled_groups: FeatureGroups::default(),
            functional_groups: GroupLevel::default(),
            element_file: None,
            pattern_file: None,
            maccs_file: None,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), Error> {
        for name in self.normalization_bounds.keys() {
            if !PROPERTIES.contains(&name.as_str()) {
                return Err(Error::Config(format!("unknown normalized property `{name}`")));
            }
        }
        for name in PROPERTIES {
            let Some(&(lo, hi)) = self.normalization_bounds.get(name) else {
                return Err(Error::Config(format!("missing bounds for `{name}`")));
            };
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!("bounds for `{name}` need min < max")));
            }
        }
        for (name, bits) in [("morgan_bits", self.morgan_bits), ("topo_bits", self.topo_bits)] {
            if bits < 64 || !bits.is_power_of_two() {
                return Err(Error::Config(format!(
                    "{name} must be a power of two of at least 64, got {bits}"
                )));
            }
        }
        if self.maccs_bits != 166 {
            return Err(Error::Config(format!(
                "maccs_bits must be 166, got {}",
                self.maccs_bits
            )));
        }
        Ok(())
    }

    /// `(value - min) / (max - min)` clamped to `[0, 1]`.
    pub fn normalize_property(&self, value: f64, property: &str) -> Result<f64, Error> {
        let &(lo, hi) = self
            .normalization_bounds
            .get(property)
            .ok_or_else(|| Error::Config(format!("no bounds for property `{property}`")))?;
        Ok(((value - lo) / (hi - lo)).clamp(0.0, 1.0))
    }

    /// Length of the concatenated global fingerprint.
    pub fn global_dim(&self) -> usize {
        self.morgan_bits + self.maccs_bits + self.topo_bits
    }
}

/// [`FeatureConfig::normalize_property`] as a free function.
pub fn normalize_property(value: f64, property: &str, config: &FeatureConfig) -> Result<f64, Error> {
    config.normalize_property(value, property)
}
