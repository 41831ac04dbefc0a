//! A SMILES subset parser producing heavy-atom skeleton graphs.
//!
//! Supported: organic-subset atoms (`B C N O P S F Cl Br I` and aromatic
//! `b c n o p s`), bracket atoms (isotope, element, chirality, hydrogen
//! count, charge, atom class), branches, ring closures (`1`-`9`, `%nn`),
//! bond symbols `- = # $ :` and the directional `/ \`, and `.`-separated
//! components. Bond orders and stereo are parsed and discarded; explicit
//! hydrogen atoms are dropped from the skeleton. When a string has several
//! components only the largest is kept.

use crate::graph::Graph;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SmilesErrorKind {
    Empty,
    UnknownToken(char),
    UnbalancedOpenParen,
    UnbalancedCloseParen,
    EmptyBranch,
    UnclosedRing(u32),
    RingBondToSelf(u32),
    DanglingBond,
    MissingAtom,
    UnclosedBracket,
    InvalidBracketAtom,
    NoHeavyAtoms,
}

impl fmt::Display for SmilesErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empty => write!(f, "empty SMILES"),
            Self::UnknownToken(c) => write!(f, "unknown token {c:?}"),
            Self::UnbalancedOpenParen => write!(f, "unclosed '('"),
            Self::UnbalancedCloseParen => write!(f, "unmatched ')'"),
            Self::EmptyBranch => write!(f, "empty branch"),
            Self::UnclosedRing(n) => write!(f, "ring bond {n} is never closed"),
            Self::RingBondToSelf(n) => write!(f, "ring bond {n} closes on its own atom"),
            Self::DanglingBond => write!(f, "bond symbol without an atom on both sides"),
            Self::MissingAtom => write!(f, "expected an atom before this token"),
            Self::UnclosedBracket => write!(f, "unclosed '['"),
            Self::InvalidBracketAtom => write!(f, "invalid bracket atom"),
            Self::NoHeavyAtoms => write!(f, "no heavy atoms"),
        }
    }
}

/// A parse failure at a byte offset into the input.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at byte {offset}")]
pub struct SmilesError {
    pub offset: usize,
    pub kind: SmilesErrorKind,
}

fn err<T>(offset: usize, kind: SmilesErrorKind) -> Result<T, SmilesError> {
    Err(SmilesError { offset, kind })
}

const ELEMENTS: &[&str] = &[
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",
    "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce",
    "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir",
    "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc",
    "Lv", "Ts", "Og",
];

const AROMATIC_BRACKET: &[&str] = &["b", "c", "n", "o", "p", "s", "se", "as", "te", "si"];

fn is_element(s: &str) -> bool {
    ELEMENTS.contains(&s)
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(first) => first.to_ascii_uppercase().to_string() + c.as_str(),
        None => String::new(),
    }
}

struct Atom {
    label: String,
    hydrogen: bool,
}

struct Parser<'a> {
    src: &'a [u8],
    base: usize,
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<(usize, usize)>,
    prev: Option<usize>,
    pending_bond: Option<usize>,
    // (atom before the branch, offset of '(', atom count at open)
    branches: Vec<(Option<usize>, usize, usize)>,
    rings: BTreeMap<u32, (usize, usize)>,
}

impl<'a> Parser<'a> {
    fn offset(&self, local: usize) -> usize {
        self.base + local
    }

    fn fail<T>(&self, local: usize, kind: SmilesErrorKind) -> Result<T, SmilesError> {
        err(self.offset(local), kind)
    }

    fn add_atom(&mut self, label: String, hydrogen: bool) -> Result<(), SmilesError> {
        let idx = self.atoms.len();
        self.atoms.push(Atom { label, hydrogen });
        if let Some(p) = self.prev {
            self.bonds.push((p, idx));
        } else if let Some(at) = self.pending_bond {
            return self.fail(at, SmilesErrorKind::DanglingBond);
        }
        self.pending_bond = None;
        self.prev = Some(idx);
        Ok(())
    }

    fn ring_bond(&mut self, number: u32, at: usize) -> Result<(), SmilesError> {
        let Some(current) = self.prev else {
            return self.fail(at, SmilesErrorKind::MissingAtom);
        };
        match self.rings.remove(&number) {
            Some((other, _)) => {
                if other == current {
                    return self.fail(at, SmilesErrorKind::RingBondToSelf(number));
                }
                self.bonds.push((other, current));
            }
            None => {
                self.rings.insert(number, (current, at));
            }
        }
        self.pending_bond = None;
        Ok(())
    }

    fn parse_bracket(&mut self, open: usize) -> Result<(), SmilesError> {
        let close = match self.src[open..].iter().position(|&b| b == b']') {
            Some(rel) => open + rel,
            None => return self.fail(open, SmilesErrorKind::UnclosedBracket),
        };
        let body = &self.src[open + 1..close];
        let bad = |at: usize| err(self.offset(open + 1 + at), SmilesErrorKind::InvalidBracketAtom);
        let mut i = 0;

        let iso_start = i;
        while i < body.len() && body[i].is_ascii_digit() {
            i += 1;
        }
        let isotope = std::str::from_utf8(&body[iso_start..i]).unwrap_or("");

        let sym_start = i;
        let symbol = match body.get(i) {
            Some(c) if c.is_ascii_uppercase() => {
                let two = body
                    .get(i + 1)
                    .filter(|c| c.is_ascii_lowercase())
                    .map(|&l| format!("{}{}", *c as char, l as char));
                match two {
                    Some(t) if is_element(&t) => {
                        i += 2;
                        t
                    }
                    _ => {
                        let one = (*c as char).to_string();
                        if !is_element(&one) {
                            return bad(sym_start);
                        }
                        i += 1;
                        one
                    }
                }
            }
            Some(c) if c.is_ascii_lowercase() => {
                let two = body
                    .get(i + 1)
                    .filter(|c| c.is_ascii_lowercase())
                    .map(|&l| format!("{}{}", *c as char, l as char));
                match two {
                    Some(t) if AROMATIC_BRACKET.contains(&t.as_str()) => {
                        i += 2;
                        capitalize(&t)
                    }
                    _ => {
                        let one = (*c as char).to_string();
                        if !AROMATIC_BRACKET.contains(&one.as_str()) {
                            return bad(sym_start);
                        }
                        i += 1;
                        capitalize(&one)
                    }
                }
            }
            _ => return bad(sym_start),
        };

        // Chirality: @, @@, @TH1, @AL2, @SP3, @TB12, @OH25.
        if body.get(i) == Some(&b'@') {
            i += 1;
            if body.get(i) == Some(&b'@') {
                i += 1;
            } else if body.len() >= i + 2 && body[i].is_ascii_uppercase() && body[i + 1].is_ascii_uppercase() {
                i += 2;
                while i < body.len() && body[i].is_ascii_digit() {
                    i += 1;
                }
            }
        }

        if body.get(i) == Some(&b'H') {
            i += 1;
            while i < body.len() && body[i].is_ascii_digit() {
                i += 1;
            }
        }

        let mut charge = String::new();
        if let Some(&sign) = body.get(i).filter(|&&c| c == b'+' || c == b'-') {
            i += 1;
            let mut magnitude = 1u32;
            if body.get(i) == Some(&sign) {
                while body.get(i) == Some(&sign) {
                    magnitude += 1;
                    i += 1;
                }
            } else {
                let d0 = i;
                while i < body.len() && body[i].is_ascii_digit() {
                    i += 1;
                }
                if i > d0 {
                    magnitude = std::str::from_utf8(&body[d0..i])
                        .ok()
                        .and_then(|s| s.parse().ok())
                        .unwrap_or(1);
                }
            }
            charge.push(sign as char);
            if magnitude != 1 {
                charge.push_str(&magnitude.to_string());
            }
        }

        if body.get(i) == Some(&b':') {
            i += 1;
            let d0 = i;
            while i < body.len() && body[i].is_ascii_digit() {
                i += 1;
            }
            if i == d0 {
                return bad(d0);
            }
        }

        if i != body.len() {
            return bad(i);
        }

        let hydrogen = symbol == "H";
        let label = format!("{isotope}{symbol}{charge}");
        self.pos = close + 1;
        self.add_atom(label, hydrogen)
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        while self.pos < self.src.len() {
            let at = self.pos;
            let c = self.src[at];
            match c {
                b'(' => {
                    if self.prev.is_none() {
                        return self.fail(at, SmilesErrorKind::MissingAtom);
                    }
                    if let Some(b) = self.pending_bond {
                        return self.fail(b, SmilesErrorKind::DanglingBond);
                    }
                    self.branches.push((self.prev, at, self.atoms.len()));
                    self.pos += 1;
                }
                b')' => {
                    let Some((prev, _, count)) = self.branches.pop() else {
                        return self.fail(at, SmilesErrorKind::UnbalancedCloseParen);
                    };
                    if let Some(b) = self.pending_bond {
                        return self.fail(b, SmilesErrorKind::DanglingBond);
                    }
                    if self.atoms.len() == count {
                        return self.fail(at, SmilesErrorKind::EmptyBranch);
                    }
                    self.prev = prev;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b'$' | b':' | b'/' | b'\\' => {
                    if self.prev.is_none() || self.pending_bond.is_some() {
                        return self.fail(at, SmilesErrorKind::DanglingBond);
                    }
                    self.pending_bond = Some(at);
                    self.pos += 1;
                }
                b'.' => {
                    if self.prev.is_none() {
                        return self.fail(at, SmilesErrorKind::MissingAtom);
                    }
                    if let Some(b) = self.pending_bond {
                        return self.fail(b, SmilesErrorKind::DanglingBond);
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'0'..=b'9' => {
                    self.ring_bond(u32::from(c - b'0'), at)?;
                    self.pos += 1;
                }
                b'%' => {
                    let digits = self.src.get(at + 1..at + 3);
                    match digits {
                        Some(d) if d.iter().all(u8::is_ascii_digit) => {
                            let n = u32::from(d[0] - b'0') * 10 + u32::from(d[1] - b'0');
                            self.ring_bond(n, at)?;
                            self.pos += 3;
                        }
                        _ => return self.fail(at, SmilesErrorKind::UnknownToken('%')),
                    }
                }
                b'[' => self.parse_bracket(at)?,
                b'B' | b'C' => {
                    let next = self.src.get(at + 1).copied();
                    let label = match (c, next) {
                        (b'B', Some(b'r')) => "Br",
                        (b'C', Some(b'l')) => "Cl",
                        (b'B', _) => "B",
                        _ => "C",
                    };
                    self.pos += label.len();
                    self.add_atom(label.to_string(), false)?;
                }
                b'N' | b'O' | b'P' | b'S' | b'F' | b'I' => {
                    self.pos += 1;
                    self.add_atom((c as char).to_string(), false)?;
                }
                b'b' | b'c' | b'n' | b'o' | b'p' | b's' => {
                    self.pos += 1;
                    self.add_atom((c.to_ascii_uppercase() as char).to_string(), false)?;
                }
                _ => {
                    let ch = std::str::from_utf8(&self.src[at..])
                        .ok()
                        .and_then(|s| s.chars().next())
                        .unwrap_or(char::REPLACEMENT_CHARACTER);
                    return self.fail(at, SmilesErrorKind::UnknownToken(ch));
                }
            }
        }
        if let Some(b) = self.pending_bond {
            return self.fail(b, SmilesErrorKind::DanglingBond);
        }
        if let Some(&(_, at, _)) = self.branches.last() {
            return self.fail(at, SmilesErrorKind::UnbalancedOpenParen);
        }
        if let Some((&n, &(_, at))) = self.rings.iter().min_by_key(|(_, (_, at))| *at) {
            return self.fail(at, SmilesErrorKind::UnclosedRing(n));
        }
        Ok(())
    }
}

/// Parses `s` into its heavy-atom skeleton. Node labels are element
/// symbols, prefixed by an isotope and suffixed by a charge when the atom
/// was written in brackets (e.g. `"13C"`, `"N+"`, `"O-"`).
pub fn parse_smiles(s: &str) -> Result<Graph, SmilesError> {
    let trimmed_start = s.len() - s.trim_start().len();
    let body = s.trim();
    if body.is_empty() {
        return err(0, SmilesErrorKind::Empty);
    }
    let mut p = Parser {
        src: body.as_bytes(),
        base: trimmed_start,
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        prev: None,
        pending_bond: None,
        branches: Vec::new(),
        rings: BTreeMap::new(),
    };
    p.run()?;

    let mut remap = vec![usize::MAX; p.atoms.len()];
    let mut labels = Vec::new();
    for (i, a) in p.atoms.iter().enumerate() {
        if !a.hydrogen {
            remap[i] = labels.len();
            labels.push(a.label.clone());
        }
    }
    if labels.is_empty() {
        return err(trimmed_start, SmilesErrorKind::NoHeavyAtoms);
    }
    let edges: Vec<(usize, usize)> = p
        .bonds
        .iter()
        .filter(|(a, b)| remap[*a] != usize::MAX && remap[*b] != usize::MAX)
        .map(|&(a, b)| (remap[a], remap[b]))
        .collect();
    let graph = Graph::new(labels, edges).expect("parser only emits valid, distinct-endpoint bonds");

    let components = graph.components();
    if components.len() == 1 {
        return Ok(graph);
    }
    let largest = components
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.len().cmp(&b.len()).then(j.cmp(i)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    log::warn!(
        "SMILES {s:?} has {} components; keeping the largest ({} atoms)",
        components.len(),
        components[largest].len()
    );
    Ok(graph.induced_subgraph(&components[largest]))
}
