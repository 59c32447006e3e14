//! SMILES reader.
//!
//! Supported: organic-subset atoms (B C N O P S F Cl Br I), lowercase aromatic
//! atoms (b c n o p s), bracket atoms with explicit hydrogens and charge, ring
//! closures `0-9` and `%nn`, branches, `.` fragments and the bond symbols
//! `- = # :`. Isotopes, chirality (`@`, `@@`), atom classes and directional
//! bonds (`/`, `\`) are accepted and ignored with a warning.

use std::collections::BTreeMap;

use log::warn;

use super::aromatic;
use super::element::{Element, ElementTable};
use super::graph::{AtomNode, BondEdge, BondOrder, MolecularGraph};
use crate::error::ChemError;

/// Parses with the shipped element table.
pub fn parse_smiles(text: &str) -> Result<MolecularGraph, ChemError> {
    parse_smiles_with(text, ElementTable::builtin())
}

pub fn parse_smiles_with(text: &str, table: &ElementTable) -> Result<MolecularGraph, ChemError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(ChemError::EmptyInput);
    }
    let mut reader = Reader::new(text);
    reader.run()?;
    if reader.atoms.is_empty() {
        return Err(ChemError::EmptyInput);
    }
    build_graph(reader.atoms, reader.bonds, table)
}

#[derive(Debug, Clone)]
pub(crate) struct RawAtom {
    pub element: Element,
    pub charge: i32,
    /// `Some` for bracket atoms, whose hydrogen count is explicit.
    pub bracket_h: Option<u32>,
    pub aromatic: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct RawBond {
    pub a: usize,
    pub b: usize,
    pub order: Option<BondOrder>,
}

struct Reader<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<RawAtom>,
    bonds: Vec<RawBond>,
    prev: Option<usize>,
    pending: Option<(BondOrder, usize)>,
    branches: Vec<(usize, usize)>,
    open_rings: BTreeMap<u32, (usize, Option<BondOrder>, usize)>,
    warned_stereo: bool,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            text,
            bytes: text.as_bytes(),
            pos: 0,
            atoms: Vec::new(),
            bonds: Vec::new(),
            prev: None,
            pending: None,
            branches: Vec::new(),
            open_rings: BTreeMap::new(),
            warned_stereo: false,
        }
    }

    fn syntax(&self, offset: usize, message: &str) -> ChemError {
        ChemError::Syntax {
            offset,
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn warn_stereo(&mut self) {
        if !self.warned_stereo {
            warn!("ignoring stereo/isotope markers in `{}`", self.text);
            self.warned_stereo = true;
        }
    }

    fn run(&mut self) -> Result<(), ChemError> {
        while let Some(c) = self.peek() {
            let offset = self.pos;
            match c {
                b'(' => {
                    let Some(prev) = self.prev else {
                        return Err(self.syntax(offset, "branch without a preceding atom"));
                    };
                    if self.pending.is_some() {
                        return Err(self.syntax(offset, "bond symbol before branch"));
                    }
                    self.branches.push((prev, offset));
                    self.pos += 1;
                }
                b')' => {
                    if self.pending.is_some() {
                        return Err(self.syntax(offset, "dangling bond symbol"));
                    }
                    let Some((atom, _)) = self.branches.pop() else {
                        return Err(ChemError::UnbalancedParentheses { offset });
                    };
                    self.prev = Some(atom);
                    self.pos += 1;
                }
                b'.' => {
                    if self.pending.is_some() {
                        return Err(self.syntax(offset, "dangling bond symbol"));
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.pending.is_some() {
                        return Err(self.syntax(offset, "consecutive bond symbols"));
                    }
                    let order = match c {
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        b':' => BondOrder::Aromatic,
                        b'/' | b'\\' => {
                            self.warn_stereo();
                            BondOrder::Single
                        }
                        _ => BondOrder::Single,
                    };
                    self.pending = Some((order, offset));
                    self.pos += 1;
                }
                b'$' => return Err(self.syntax(offset, "quadruple bonds are not supported")),
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.push_atom(atom)?;
                }
                b'*' => {
                    return Err(ChemError::UnknownElement {
                        symbol: "*".into(),
                        offset,
                    })
                }
                c if c.is_ascii_alphabetic() => {
                    let atom = self.organic_atom()?;
                    self.push_atom(atom)?;
                }
                _ => return Err(self.syntax(offset, "unexpected character")),
            }
        }
        if let Some((_, offset)) = self.pending {
            return Err(self.syntax(offset, "dangling bond symbol"));
        }
        if let Some(&(_, offset)) = self.branches.last() {
            return Err(ChemError::UnbalancedParentheses { offset });
        }
        if let Some((&label, &(_, _, offset))) = self.open_rings.iter().next() {
            return Err(ChemError::UnbalancedRingClosure { label, offset });
        }
        Ok(())
    }

    fn push_atom(&mut self, atom: RawAtom) -> Result<(), ChemError> {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        if let Some(prev) = self.prev {
            let order = self.pending.take().map(|(o, _)| o);
            self.add_bond(prev, idx, order, self.pos)?;
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn add_bond(
        &mut self,
        a: usize,
        b: usize,
        order: Option<BondOrder>,
        offset: usize,
    ) -> Result<(), ChemError> {
        if a == b {
            return Err(self.syntax(offset, "atom bonded to itself"));
        }
        if self
            .bonds
            .iter()
            .any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a))
        {
            return Err(self.syntax(offset, "duplicate bond between the same atoms"));
        }
        self.bonds.push(RawBond { a, b, order });
        Ok(())
    }

    fn ring_closure(&mut self) -> Result<(), ChemError> {
        let offset = self.pos;
        let label = if self.bytes[self.pos] == b'%' {
            let digits = self.bytes.get(self.pos + 1..self.pos + 3);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 3;
                    ((d[0] - b'0') * 10 + (d[1] - b'0')) as u32
                }
                _ => return Err(self.syntax(offset, "`%` must be followed by two digits")),
            }
        } else {
            self.pos += 1;
            (self.bytes[offset] - b'0') as u32
        };
        let Some(cur) = self.prev else {
            return Err(self.syntax(offset, "ring closure without a preceding atom"));
        };
        let here = self.pending.take().map(|(o, _)| o);
        match self.open_rings.remove(&label) {
            Some((other, there, _)) => {
                let order = match (here, there) {
                    (Some(x), Some(y)) if x != y => {
                        return Err(self.syntax(offset, "conflicting ring-closure bond orders"))
                    }
                    (x, y) => x.or(y),
                };
                self.add_bond(other, cur, order, offset)?;
            }
            None => {
                self.open_rings.insert(label, (cur, here, offset));
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<RawAtom, ChemError> {
        let offset = self.pos;
        let rest = &self.text[self.pos..];
        let (element, aromatic, len) = if rest.starts_with("Cl") {
            (Element::Cl, false, 2)
        } else if rest.starts_with("Br") {
            (Element::Br, false, 2)
        } else {
            let c = rest.as_bytes()[0];
            let parsed = match c {
                b'B' => Some((Element::B, false)),
                b'C' => Some((Element::C, false)),
                b'N' => Some((Element::N, false)),
                b'O' => Some((Element::O, false)),
                b'P' => Some((Element::P, false)),
                b'S' => Some((Element::S, false)),
                b'F' => Some((Element::F, false)),
                b'I' => Some((Element::I, false)),
                b'b' => Some((Element::B, true)),
                b'c' => Some((Element::C, true)),
                b'n' => Some((Element::N, true)),
                b'o' => Some((Element::O, true)),
                b'p' => Some((Element::P, true)),
                b's' => Some((Element::S, true)),
                _ => None,
            };
            match parsed {
                Some((e, arom)) => (e, arom, 1),
                None => {
                    return Err(ChemError::UnknownElement {
                        symbol: symbol_at(rest),
                        offset,
                    })
                }
            }
        };
        self.pos += len;
        Ok(RawAtom {
            element,
            charge: 0,
            bracket_h: None,
            aromatic,
        })
    }

    fn bracket_atom(&mut self) -> Result<RawAtom, ChemError> {
        let open = self.pos;
        self.pos += 1;
        let close = self.text[open..]
            .find(']')
            .map(|i| open + i)
            .ok_or_else(|| self.syntax(open, "unterminated bracket atom"))?;

        if self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.warn_stereo();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
        }

        let sym_offset = self.pos;
        let rest = &self.text[self.pos..close];
        let (element, aromatic, len) = bracket_symbol(rest).ok_or_else(|| {
            if rest.is_empty() {
                self.syntax(sym_offset, "empty bracket atom")
            } else {
                ChemError::UnknownElement {
                    symbol: symbol_at(rest),
                    offset: sym_offset,
                }
            }
        })?;
        self.pos += len;

        if self.peek() == Some(b'@') {
            self.warn_stereo();
            while self.peek() == Some(b'@') {
                self.pos += 1;
            }
        }

        let mut h = 0;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            h = self.number().unwrap_or(1);
        }

        let mut charge = 0i32;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.number() {
                charge = unit * n as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    charge += unit;
                    self.pos += 1;
                }
            }
        }

        if self.peek() == Some(b':') {
            self.pos += 1;
            if self.number().is_none() {
                return Err(self.syntax(self.pos, "atom class needs a number"));
            }
        }

        if self.pos != close {
            return Err(self.syntax(self.pos, "unexpected text in bracket atom"));
        }
        self.pos = close + 1;
        Ok(RawAtom {
            element,
            charge,
            bracket_h: Some(h),
            aromatic,
        })
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.text[start..self.pos].parse().ok())?
    }
}

/// Element symbol at the start of a bracket body, with its byte length.
fn bracket_symbol(rest: &str) -> Option<(Element, bool, usize)> {
    let two = rest.get(..2).and_then(Element::from_symbol);
    if let Some(e) = two {
        return Some((e, false, 2));
    }
    let first = rest.get(..1)?;
    if let Some(e) = Element::from_symbol(first) {
        // `Xy` where `y` is lowercase would be a two-letter symbol we do not know.
        let next = rest.as_bytes().get(1).copied();
        if next.is_some_and(|c| c.is_ascii_lowercase()) {
            return None;
        }
        return Some((e, false, 1));
    }
    let upper = first.to_ascii_uppercase();
    let e = Element::from_symbol(&upper)?;
    if !e.can_be_aromatic() || !first.as_bytes()[0].is_ascii_lowercase() {
        return None;
    }
    if rest.as_bytes().get(1).is_some_and(|c| c.is_ascii_lowercase()) {
        return None;
    }
    Some((e, true, 1))
}

fn symbol_at(rest: &str) -> String {
    let mut chars = rest.chars();
    let mut s = String::new();
    if let Some(c) = chars.next() {
        s.push(c);
        if let Some(d) = chars.next().filter(|d| d.is_ascii_lowercase()) {
            s.push(d);
        }
    }
    s
}

fn build_graph(
    raw_atoms: Vec<RawAtom>,
    raw_bonds: Vec<RawBond>,
    table: &ElementTable,
) -> Result<MolecularGraph, ChemError> {
    let bonds: Vec<BondEdge> = raw_bonds
        .iter()
        .map(|b| BondEdge {
            endpoints: (b.a, b.b),
            order: b.order.unwrap_or(
                if raw_atoms[b.a].aromatic && raw_atoms[b.b].aromatic {
                    BondOrder::Aromatic
                } else {
                    BondOrder::Single
                },
            ),
            conjugated: false,
            in_ring: false,
        })
        .collect();
    let atoms: Vec<AtomNode> = raw_atoms
        .iter()
        .map(|a| AtomNode {
            element: a.element,
            formal_charge: a.charge,
            implicit_h_count: a.bracket_h.unwrap_or(0),
            aromatic: a.aromatic,
            radical_electrons: 0,
            in_ring: false,
        })
        .collect();

    // Ring membership does not depend on bond orders; settle it first.
    let topology = MolecularGraph::assemble(atoms, bonds);
    let mut atoms = topology.atoms().to_vec();
    let mut bonds = topology.bonds().to_vec();

    for bond in bonds.iter_mut() {
        if bond.order == BondOrder::Aromatic && !bond.in_ring {
            bond.order = BondOrder::Single;
        }
    }
    for bond in &bonds {
        if bond.order == BondOrder::Aromatic {
            atoms[bond.endpoints.0].aromatic = true;
            atoms[bond.endpoints.1].aromatic = true;
        }
    }
    for (i, atom) in atoms.iter().enumerate() {
        if atom.aromatic && !atom.in_ring {
            return Err(ChemError::Aromaticity {
                atom: i,
                message: "aromatic atom outside a ring".into(),
            });
        }
    }

    let needs_double = assign_hydrogens(&mut atoms, &bonds, &raw_atoms, topology.adjacency(), table)?;
    aromatic::check_kekulizable(&atoms, &bonds, topology.adjacency(), &needs_double)?;
    aromatic::perceive_kekule_rings(&mut atoms, &mut bonds, topology.adjacency(), topology.rings());
    aromatic::assign_conjugation(&atoms, &mut bonds, topology.adjacency());

    Ok(MolecularGraph::assemble(atoms, bonds))
}

/// Fills implicit hydrogens and checks valences. Returns, per atom, whether an
/// aromatic atom still needs a double bond in a Kekulé form.
fn assign_hydrogens(
    atoms: &mut [AtomNode],
    bonds: &[BondEdge],
    raw: &[RawAtom],
    adjacency: &[Vec<usize>],
    table: &ElementTable,
) -> Result<Vec<bool>, ChemError> {
    let mut needs = vec![false; atoms.len()];
    for i in 0..atoms.len() {
        let atom = &atoms[i];
        let bond_sum: u32 = adjacency[i]
            .iter()
            .map(|&b| bonds[b].order.valence_contribution())
            .sum();
        let mut valences: Vec<u32> = table
            .get(atom.element)
            .default_valences
            .iter()
            .filter_map(|&v| atom.element.charge_adjusted(v, atom.formal_charge))
            .collect();
        valences.sort_unstable();
        valences.dedup();

        let violation = |message: String| ChemError::Valence {
            atom: i,
            element: atom.element.symbol().to_string(),
            message,
        };
        let used = bond_sum + raw[i].bracket_h.unwrap_or(0);
        let Some(&target) = valences.iter().find(|&&v| v >= used) else {
            return Err(violation(format!(
                "{used} bonds exceed permitted valences {valences:?}"
            )));
        };
        let double = atom.aromatic && used + 1 <= target;
        let spare = target - used - u32::from(double);
        let atom = &mut atoms[i];
        if raw[i].bracket_h.is_some() {
            atom.radical_electrons = spare;
        } else {
            atom.implicit_h_count = spare;
        }
        needs[i] = double;
    }
    Ok(needs)
}
