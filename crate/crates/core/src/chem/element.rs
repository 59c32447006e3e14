//! Supported elements and the per-element property table.

use std::fmt;
use std::path::Path;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::DataError;

const BUILTIN_TABLE: &str = include_str!("../../data/elements.tsv");

static BUILTIN: LazyLock<ElementTable> =
    LazyLock::new(|| ElementTable::parse(BUILTIN_TABLE).expect("shipped element table is valid"));

/// The elements understood by the parsers, in one-hot order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    H,
    B,
    C,
    N,
    O,
    F,
    P,
    S,
    Cl,
    Br,
    I,
}

impl Element {
    pub const ALL: [Element; 11] = [
        Element::H,
        Element::B,
        Element::C,
        Element::N,
        Element::O,
        Element::F,
        Element::P,
        Element::S,
        Element::Cl,
        Element::Br,
        Element::I,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Element::H => "H",
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    pub fn atomic_number(self) -> u8 {
        match self {
            Element::H => 1,
            Element::B => 5,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::P => 15,
            Element::S => 16,
            Element::Cl => 17,
            Element::Br => 35,
            Element::I => 53,
        }
    }

    /// Position of this element in [`Element::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_symbol(symbol: &str) -> Option<Element> {
        Element::ALL.iter().copied().find(|e| e.symbol() == symbol)
    }

    pub fn from_atomic_number(z: u8) -> Option<Element> {
        Element::ALL.iter().copied().find(|e| e.atomic_number() == z)
    }

    /// Elements that may be written in lowercase (aromatic) form.
    pub fn can_be_aromatic(self) -> bool {
        matches!(
            self,
            Element::B | Element::C | Element::N | Element::O | Element::P | Element::S
        )
    }

    /// Valence permitted for a given formal charge.
    ///
    /// Group 15-17 elements gain one bond per positive charge (ammonium, oxonium) and
    /// lose one per negative charge; boron does the opposite; carbon and hydrogen lose
    /// one bond per unit of charge in either direction.
    pub fn charge_adjusted(self, valence: u32, charge: i32) -> Option<u32> {
        let v = valence as i32;
        let adjusted = match self {
            Element::B => v - charge,
            Element::C | Element::H => v - charge.abs(),
            _ => v + charge,
        };
        u32::try_from(adjusted).ok()
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// One line of the element property table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementRecord {
    pub element: Element,
    pub electronegativity: f64,
    pub atomic_volume: f64,
    pub electron_affinity: f64,
    pub default_valences: Vec<u32>,
}

/// Property records for every supported element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementTable {
    records: Vec<ElementRecord>,
    source: String,
}

impl ElementTable {
    /// The table shipped with the crate.
    pub fn builtin() -> &'static ElementTable {
        &BUILTIN
    }

    pub fn from_path(path: &Path) -> Result<ElementTable, DataError> {
        let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        ElementTable::parse(&text)
    }

    /// Parses the whitespace separated table format:
    /// `symbol atomic_number electronegativity volume electron_affinity valences`.
    pub fn parse(text: &str) -> Result<ElementTable, DataError> {
        let mut slots: Vec<Option<ElementRecord>> = vec![None; Element::ALL.len()];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| DataError::Format {
                what: "element table".into(),
                line: lineno + 1,
                message: msg.to_string(),
            };
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 6 {
                return Err(bad("expected 6 columns"));
            }
            let element = Element::from_symbol(cols[0]).ok_or_else(|| bad("unsupported element symbol"))?;
            let z: u8 = cols[1].parse().map_err(|_| bad("bad atomic number"))?;
            if z != element.atomic_number() {
                return Err(bad("atomic number does not match symbol"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad numeric column"));
            let default_valences = cols[5]
                .split(',')
                .map(|v| v.parse::<u32>().map_err(|_| bad("bad valence list")))
                .collect::<Result<Vec<_>, _>>()?;
            if default_valences.is_empty() || default_valences.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad("valences must be strictly increasing"));
            }
            let slot = &mut slots[element.index()];
            if slot.is_some() {
                return Err(bad("duplicate element record"));
            }
            *slot = Some(ElementRecord {
                element,
                electronegativity: num(cols[2])?,
                atomic_volume: num(cols[3])?,
                electron_affinity: num(cols[4])?,
                default_valences,
            });
        }
        let mut records = Vec::with_capacity(slots.len());
        for (slot, element) in slots.into_iter().zip(Element::ALL) {
            records.push(slot.ok_or_else(|| DataError::Format {
                what: "element table".into(),
                line: 0,
                message: format!("missing record for {element}"),
            })?);
        }
        Ok(ElementTable {
            records,
            source: text.to_string(),
        })
    }

    pub fn get(&self, element: Element) -> &ElementRecord {
        &self.records[element.index()]
    }

    pub fn records(&self) -> &[ElementRecord] {
        &self.records
    }

    /// The text the table was parsed from, for embedding in checkpoints.
    pub fn source(&self) -> &str {
        &self.source
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_covers_every_element_within_bounds() {
        let table = ElementTable::builtin();
        for e in Element::ALL {
            let r = table.get(e);
            assert_eq!(r.element, e);
            assert!((0.8..=4.0).contains(&r.electronegativity), "{e}");
            assert!((4.0..=46.0).contains(&r.atomic_volume), "{e}");
            assert!((-70.0..=350.0).contains(&r.electron_affinity), "{e}");
        }
        assert_eq!(table.get(Element::O).electronegativity, 3.44);
    }

    #[test]
    fn rejects_duplicates_and_missing() {
        let mut text = BUILTIN_TABLE.to_string();
        text.push_str("C 6 2.55 5.3 121.8 4\n");
        assert!(ElementTable::parse(&text).is_err());
        let missing: String = BUILTIN_TABLE
            .lines()
            .filter(|l| !l.starts_with("Br"))
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(ElementTable::parse(&missing).is_err());
    }

    #[test]
    fn charge_adjustment() {
        assert_eq!(Element::N.charge_adjusted(3, 1), Some(4));
        assert_eq!(Element::O.charge_adjusted(2, -1), Some(1));
        assert_eq!(Element::C.charge_adjusted(4, -1), Some(3));
        assert_eq!(Element::B.charge_adjusted(3, -1), Some(4));
        assert_eq!(Element::Cl.charge_adjusted(1, -1), Some(0));
        assert_eq!(Element::H.charge_adjusted(1, 1), Some(0));
    }
}
