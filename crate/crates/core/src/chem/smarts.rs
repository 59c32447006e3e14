//! A small SMARTS dialect and a backtracking substructure matcher.
//!
//! Atom primitives: element symbols (uppercase aliphatic, lowercase aromatic),
//! `#n`, `*`, `a`, `A`, `Dn`, `Hn`, `Xn`, `R`/`Rn`, charges `+ - +n -n ++ --`,
//! combined with `&` or `;` (AND) or by juxtaposition, each optionally negated
//! with `!`. Bond primitives: `- = # : ~`; an unwritten bond means single or
//! aromatic. Recursion (`$(...)`), OR (`,`), chirality and disconnected patterns
//! are rejected.

use serde::{Deserialize, Serialize};

use super::element::Element;
use super::graph::{BondOrder, MolecularGraph};
use crate::error::ChemError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomPrimitive {
    Any,
    /// An element with an optional aromaticity requirement.
    Element {
        element: Element,
        aromatic: Option<bool>,
    },
    /// Atomic number; numbers outside the supported elements never match.
    AtomicNumber(u8),
    Aromatic,
    Aliphatic,
    /// Explicit connections.
    Degree(u32),
    TotalH(u32),
    /// Connections including implicit hydrogens.
    Connectivity(u32),
    Charge(i32),
    /// `None`: in any ring; `Some(n)`: member of exactly `n` basis rings.
    Ring(Option<u32>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomTerm {
    pub negated: bool,
    pub primitive: AtomPrimitive,
}

/// Conjunction of terms.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AtomPredicate {
    pub terms: Vec<AtomTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BondPredicate {
    Single,
    Double,
    Triple,
    Aromatic,
    Any,
    SingleOrAromatic,
}

impl BondPredicate {
    pub fn matches(self, order: BondOrder) -> bool {
        match self {
            BondPredicate::Single => order == BondOrder::Single,
            BondPredicate::Double => order == BondOrder::Double,
            BondPredicate::Triple => order == BondOrder::Triple,
            BondPredicate::Aromatic => order == BondOrder::Aromatic,
            BondPredicate::Any => true,
            BondPredicate::SingleOrAromatic => {
                matches!(order, BondOrder::Single | BondOrder::Aromatic)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternBond {
    pub endpoints: (usize, usize),
    pub predicate: BondPredicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmartsPattern {
    pub name: String,
    pub atoms: Vec<AtomPredicate>,
    pub bonds: Vec<PatternBond>,
}

impl SmartsPattern {
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

impl AtomPredicate {
    pub fn matches(&self, graph: &MolecularGraph, atom: usize) -> bool {
        self.terms
            .iter()
            .all(|t| primitive_matches(t.primitive, graph, atom) != t.negated)
    }
}

fn primitive_matches(p: AtomPrimitive, graph: &MolecularGraph, atom: usize) -> bool {
    let a = graph.atom(atom);
    match p {
        AtomPrimitive::Any => true,
        AtomPrimitive::Element { element, aromatic } => {
            a.element == element && aromatic.is_none_or(|ar| ar == a.aromatic)
        }
        AtomPrimitive::AtomicNumber(z) => a.element.atomic_number() == z,
        AtomPrimitive::Aromatic => a.aromatic,
        AtomPrimitive::Aliphatic => !a.aromatic,
        AtomPrimitive::Degree(d) => graph.degree(atom) as u32 == d,
        AtomPrimitive::TotalH(h) => graph.total_h(atom) == h,
        AtomPrimitive::Connectivity(x) => graph.degree(atom) as u32 + a.implicit_h_count == x,
        AtomPrimitive::Charge(c) => a.formal_charge == c,
        AtomPrimitive::Ring(None) => a.in_ring,
        AtomPrimitive::Ring(Some(0)) => !a.in_ring,
        AtomPrimitive::Ring(Some(n)) => graph.ring_membership_count(atom) as u32 == n,
    }
}

/// Parses a pattern in the supported dialect.
pub fn parse_smarts(text: &str) -> Result<SmartsPattern, ChemError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(ChemError::EmptyInput);
    }
    let mut p = SmartsReader {
        text,
        bytes: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        prev: None,
        pending: None,
        branches: Vec::new(),
        open_rings: Vec::new(),
    };
    p.run()?;
    Ok(SmartsPattern {
        name: String::new(),
        atoms: p.atoms,
        bonds: p.bonds,
    })
}

struct SmartsReader<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<AtomPredicate>,
    bonds: Vec<PatternBond>,
    prev: Option<usize>,
    pending: Option<(BondPredicate, usize)>,
    branches: Vec<(usize, usize)>,
    open_rings: Vec<(u32, usize, Option<BondPredicate>, usize)>,
}

fn unsupported(primitive: &str, offset: usize) -> ChemError {
    ChemError::UnsupportedSmarts {
        primitive: primitive.to_string(),
        offset,
    }
}

impl SmartsReader<'_> {
    fn syntax(&self, offset: usize, message: &str) -> ChemError {
        ChemError::Syntax {
            offset,
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), ChemError> {
        while let Some(c) = self.peek() {
            let offset = self.pos;
            match c {
                b'(' => {
                    let prev = self
                        .prev
                        .ok_or_else(|| self.syntax(offset, "branch without a preceding atom"))?;
                    self.branches.push((prev, offset));
                    self.pos += 1;
                }
                b')' => {
                    let (atom, _) = self
                        .branches
                        .pop()
                        .ok_or(ChemError::UnbalancedParentheses { offset })?;
                    if self.pending.is_some() {
                        return Err(self.syntax(offset, "dangling bond"));
                    }
                    self.prev = Some(atom);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'~' => {
                    if self.pending.is_some() {
                        return Err(self.syntax(offset, "consecutive bond primitives"));
                    }
                    let pred = match c {
                        b'-' => BondPredicate::Single,
                        b'=' => BondPredicate::Double,
                        b'#' => BondPredicate::Triple,
                        b':' => BondPredicate::Aromatic,
                        _ => BondPredicate::Any,
                    };
                    self.pending = Some((pred, offset));
                    self.pos += 1;
                }
                b'!' => return Err(unsupported("! (bond negation)", offset)),
                b'@' => return Err(unsupported("@ (ring bond)", offset)),
                b'/' | b'\\' => return Err(unsupported("directional bond", offset)),
                b'.' => return Err(unsupported(". (disconnected pattern)", offset)),
                b',' => return Err(unsupported(", (OR)", offset)),
                b'$' => return Err(unsupported("$( (recursive SMARTS)", offset)),
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => {
                    let atom = self.bracket()?;
                    self.push_atom(atom);
                }
                _ => {
                    let atom = self.bare_atom()?;
                    self.push_atom(atom);
                }
            }
        }
        if let Some((_, offset)) = self.pending {
            return Err(self.syntax(offset, "dangling bond"));
        }
        if let Some(&(_, offset)) = self.branches.last() {
            return Err(ChemError::UnbalancedParentheses { offset });
        }
        if let Some(&(label, _, _, offset)) = self.open_rings.first() {
            return Err(ChemError::UnbalancedRingClosure { label, offset });
        }
        if self.atoms.is_empty() {
            return Err(ChemError::EmptyInput);
        }
        Ok(())
    }

    fn push_atom(&mut self, atom: AtomPredicate) {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        if let Some(prev) = self.prev {
            let predicate = self
                .pending
                .take()
                .map_or(BondPredicate::SingleOrAromatic, |(p, _)| p);
            self.bonds.push(PatternBond {
                endpoints: (prev, idx),
                predicate,
            });
        }
        self.prev = Some(idx);
    }

    fn ring_closure(&mut self) -> Result<(), ChemError> {
        let offset = self.pos;
        let label = if self.bytes[offset] == b'%' {
            match self.bytes.get(offset + 1..offset + 3) {
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
        let cur = self
            .prev
            .ok_or_else(|| self.syntax(offset, "ring closure without a preceding atom"))?;
        let here = self.pending.take().map(|(p, _)| p);
        if let Some(i) = self.open_rings.iter().position(|r| r.0 == label) {
            let (_, other, there, _) = self.open_rings.remove(i);
            if other == cur {
                return Err(self.syntax(offset, "ring closure to the same atom"));
            }
            let predicate = match (here, there) {
                (Some(x), Some(y)) if x != y => {
                    return Err(self.syntax(offset, "conflicting ring-closure bonds"))
                }
                (x, y) => x.or(y).unwrap_or(BondPredicate::SingleOrAromatic),
            };
            self.bonds.push(PatternBond {
                endpoints: (other, cur),
                predicate,
            });
        } else {
            self.open_rings.push((label, cur, here, offset));
        }
        Ok(())
    }

    fn bare_atom(&mut self) -> Result<AtomPredicate, ChemError> {
        let offset = self.pos;
        let rest = &self.text[offset..];
        let term = |primitive| AtomTerm {
            negated: false,
            primitive,
        };
        let (primitive, len) = match rest.as_bytes()[0] {
            b'*' => (AtomPrimitive::Any, 1),
            b'a' => (AtomPrimitive::Aromatic, 1),
            b'A' => (AtomPrimitive::Aliphatic, 1),
            _ => match element_symbol(rest) {
                Some((element, aromatic, len)) => (
                    AtomPrimitive::Element {
                        element,
                        aromatic: Some(aromatic),
                    },
                    len,
                ),
                None if rest.as_bytes()[0].is_ascii_alphabetic() => {
                    return Err(ChemError::UnknownElement {
                        symbol: rest[..1].to_string(),
                        offset,
                    })
                }
                None => return Err(self.syntax(offset, "unexpected character")),
            },
        };
        self.pos += len;
        Ok(AtomPredicate {
            terms: vec![term(primitive)],
        })
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.text[start..self.pos].parse().ok())?
    }

    fn bracket(&mut self) -> Result<AtomPredicate, ChemError> {
        let open = self.pos;
        let close = self.text[open..]
            .find(']')
            .map(|i| open + i)
            .ok_or_else(|| self.syntax(open, "unterminated bracket"))?;
        self.pos += 1;
        let body = &self.text[self.pos..close];
        // `[H]`, `[H+]`: a hydrogen atom rather than a hydrogen count.
        if body == "H" || body.starts_with("H+") || body.starts_with("H-") {
            self.pos += 1;
            let mut terms = vec![AtomTerm {
                negated: false,
                primitive: AtomPrimitive::Element {
                    element: Element::H,
                    aromatic: None,
                },
            }];
            terms.extend(self.terms_until(close)?);
            self.pos = close + 1;
            return Ok(AtomPredicate { terms });
        }
        let terms = self.terms_until(close)?;
        if terms.is_empty() {
            return Err(self.syntax(open, "empty bracket atom"));
        }
        self.pos = close + 1;
        Ok(AtomPredicate { terms })
    }

    fn terms_until(&mut self, close: usize) -> Result<Vec<AtomTerm>, ChemError> {
        let mut terms = Vec::new();
        let mut negated = false;
        while self.pos < close {
            let offset = self.pos;
            let c = self.bytes[offset];
            let primitive = match c {
                b'&' | b';' => {
                    if negated {
                        return Err(self.syntax(offset, "`!` before a separator"));
                    }
                    self.pos += 1;
                    continue;
                }
                b'!' => {
                    negated = !negated;
                    self.pos += 1;
                    continue;
                }
                b',' => return Err(unsupported(", (OR)", offset)),
                b'$' => return Err(unsupported("$( (recursive SMARTS)", offset)),
                b'@' => return Err(unsupported("@ (chirality)", offset)),
                b'#' => {
                    self.pos += 1;
                    let z = self
                        .number()
                        .ok_or_else(|| self.syntax(offset, "`#` needs an atomic number"))?;
                    AtomPrimitive::AtomicNumber(z.min(255) as u8)
                }
                b'*' => {
                    self.pos += 1;
                    AtomPrimitive::Any
                }
                b'a' => {
                    self.pos += 1;
                    AtomPrimitive::Aromatic
                }
                b'A' => {
                    self.pos += 1;
                    AtomPrimitive::Aliphatic
                }
                b'D' | b'H' | b'X' => {
                    self.pos += 1;
                    let n = self.number().unwrap_or(1);
                    match c {
                        b'D' => AtomPrimitive::Degree(n),
                        b'H' => AtomPrimitive::TotalH(n),
                        _ => AtomPrimitive::Connectivity(n),
                    }
                }
                b'R' => {
                    self.pos += 1;
                    AtomPrimitive::Ring(self.number())
                }
                b'+' | b'-' => {
                    let unit = if c == b'+' { 1 } else { -1 };
                    self.pos += 1;
                    let charge = match self.number() {
                        Some(n) => unit * n as i32,
                        None => {
                            let mut charge = unit;
                            while self.pos < close && self.bytes[self.pos] == c {
                                charge += unit;
                                self.pos += 1;
                            }
                            charge
                        }
                    };
                    AtomPrimitive::Charge(charge)
                }
                _ => match element_symbol(&self.text[offset..close]) {
                    Some((element, aromatic, len)) => {
                        self.pos += len;
                        AtomPrimitive::Element {
                            element,
                            aromatic: Some(aromatic),
                        }
                    }
                    None if c.is_ascii_uppercase() => {
                        return Err(ChemError::UnknownElement {
                            symbol: (c as char).to_string(),
                            offset,
                        })
                    }
                    None => return Err(unsupported(&(c as char).to_string(), offset)),
                },
            };
            terms.push(AtomTerm { negated, primitive });
            negated = false;
        }
        if negated {
            return Err(self.syntax(close, "`!` without a primitive"));
        }
        Ok(terms)
    }
}

/// Element symbol at the start of `rest`: `(element, aromatic, byte length)`.
fn element_symbol(rest: &str) -> Option<(Element, bool, usize)> {
    if rest.starts_with("Cl") {
        return Some((Element::Cl, false, 2));
    }
    if rest.starts_with("Br") {
        return Some((Element::Br, false, 2));
    }
    let c = *rest.as_bytes().first()?;
    let e = match c.to_ascii_uppercase() {
        b'B' => Element::B,
        b'C' => Element::C,
        b'N' => Element::N,
        b'O' => Element::O,
        b'P' => Element::P,
        b'S' => Element::S,
        b'F' if c.is_ascii_uppercase() => Element::F,
        b'I' if c.is_ascii_uppercase() => Element::I,
        _ => return None,
    };
    Some((e, c.is_ascii_lowercase(), 1))
}

/// All injective embeddings of `pattern` into `graph`. Each result maps pattern
/// atom `k` to graph atom `result[k]`.
pub fn match_pattern(pattern: &SmartsPattern, graph: &MolecularGraph) -> Vec<Vec<usize>> {
    let np = pattern.atoms.len();
    if np == 0 || graph.atom_count() < np {
        return Vec::new();
    }
    let mut p_adj: Vec<Vec<(usize, BondPredicate)>> = vec![Vec::new(); np];
    for b in &pattern.bonds {
        let (u, v) = b.endpoints;
        p_adj[u].push((v, b.predicate));
        p_adj[v].push((u, b.predicate));
    }

    // Visit order: breadth first from atom 0; every later atom has an earlier
    // neighbor to extend from. The pattern grammar guarantees connectivity.
    let mut order = vec![0];
    let mut placed = vec![false; np];
    placed[0] = true;
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for &(v, _) in &p_adj[u] {
            if !placed[v] {
                placed[v] = true;
                order.push(v);
            }
        }
    }
    if order.len() != np {
        return Vec::new();
    }
    let position: Vec<usize> = {
        let mut pos = vec![0; np];
        for (i, &a) in order.iter().enumerate() {
            pos[a] = i;
        }
        pos
    };
    // For each step: the pattern atom, its anchor (earlier neighbor), and the
    // bonds back to already placed atoms.
    let steps: Vec<Step> = order
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let back: Vec<(usize, BondPredicate)> = p_adj[a]
                .iter()
                .copied()
                .filter(|&(v, _)| position[v] < i)
                .collect();
            Step {
                atom: a,
                anchor: back.first().map(|&(v, _)| v),
                back,
            }
        })
        .collect();

    let mut results = Vec::new();
    let mut mapping = vec![usize::MAX; np];
    let mut used = vec![false; graph.atom_count()];
    extend(pattern, graph, &steps, 0, &mut mapping, &mut used, &mut results);
    results
}

struct Step {
    atom: usize,
    anchor: Option<usize>,
    back: Vec<(usize, BondPredicate)>,
}

fn extend(
    pattern: &SmartsPattern,
    graph: &MolecularGraph,
    steps: &[Step],
    depth: usize,
    mapping: &mut [usize],
    used: &mut [bool],
    results: &mut Vec<Vec<usize>>,
) {
    if depth == steps.len() {
        results.push(mapping.to_vec());
        return;
    }
    let step = &steps[depth];
    let candidates: Vec<usize> = match step.anchor {
        Some(anchor) => graph.neighbors(mapping[anchor]).map(|(_, n)| n).collect(),
        None => (0..graph.atom_count()).collect(),
    };
    for g in candidates {
        if used[g] || !pattern.atoms[step.atom].matches(graph, g) {
            continue;
        }
        let bonds_ok = step.back.iter().all(|&(pv, pred)| {
            graph
                .bond_between(mapping[pv], g)
                .is_some_and(|b| pred.matches(graph.bond(b).order))
        });
        if !bonds_ok {
            continue;
        }
        mapping[step.atom] = g;
        used[g] = true;
        extend(pattern, graph, steps, depth + 1, mapping, used, results);
        used[g] = false;
        mapping[step.atom] = usize::MAX;
    }
}

/// Number of distinct matched atom sets.
pub fn unique_match_count(matches: &[Vec<usize>]) -> usize {
    let mut sets: Vec<Vec<usize>> = matches
        .iter()
        .map(|m| {
            let mut s = m.clone();
            s.sort_unstable();
            s
        })
        .collect();
    sets.sort();
    sets.dedup();
    sets.len()
}
