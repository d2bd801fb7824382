//! Labeled molecules: graphs of 3-atoms with marks `r`, `eps` on edges and
//! `n` on families of saddle atoms.
//!
//! Every atom has numbered boundary slots (`1..=valence`); an edge glues one
//! slot to another. The edge direction is significant: its gluing matrix maps
//! the basis on the `from` torus to the basis on the `to` torus.

mod parse;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use parse::{parse_molecule, parse_unchecked};
pub use validate::{validate, Diagnostic, DiagnosticKind};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SaddleAtom {
    pub name: String,
    pub genus: u32,
    pub valence: u32,
    pub stars: u32,
}

/// A 3-atom: the elliptic atom `A` (solid torus) or a saddle atom described
/// by the genus, valence and star count of its base surface.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AtomKind {
    A,
    Saddle(SaddleAtom),
}

pub const GENERIC_SADDLE: &str = "saddle";

impl AtomKind {
    pub fn b() -> Self {
        Self::named("B", 0, 3, 0)
    }

    pub fn c2() -> Self {
        Self::named("C2", 0, 4, 0)
    }

    pub fn astar() -> Self {
        Self::named("Astar", 0, 2, 1)
    }

    pub fn saddle(genus: u32, valence: u32, stars: u32) -> Self {
        Self::named(GENERIC_SADDLE, genus, valence, stars)
    }

    fn named(name: &str, genus: u32, valence: u32, stars: u32) -> Self {
        AtomKind::Saddle(SaddleAtom {
            name: name.to_string(),
            genus,
            valence,
            stars,
        })
    }

    /// Built-in saddle names with their `(genus, valence, stars)`.
    pub fn builtin(name: &str) -> Option<AtomKind> {
        match name {
            "A" => Some(AtomKind::A),
            "B" => Some(Self::b()),
            "C2" => Some(Self::c2()),
            "Astar" => Some(Self::astar()),
            _ => None,
        }
    }

    pub fn valence(&self) -> u32 {
        match self {
            AtomKind::A => 1,
            AtomKind::Saddle(s) => s.valence,
        }
    }

    pub fn is_saddle(&self) -> bool {
        matches!(self, AtomKind::Saddle(_))
    }

    pub fn stars(&self) -> u32 {
        match self {
            AtomKind::A => 0,
            AtomKind::Saddle(s) => s.stars,
        }
    }

    pub fn genus(&self) -> u32 {
        match self {
            AtomKind::A => 0,
            AtomKind::Saddle(s) => s.genus,
        }
    }

    /// Planar, star-free saddle with the given number of boundary tori.
    pub fn is_planar_saddle(&self, valence: u32) -> bool {
        matches!(self, AtomKind::Saddle(s) if s.genus == 0 && s.stars == 0 && s.valence == valence)
    }
}

impl fmt::Display for AtomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomKind::A => f.write_str("A"),
            AtomKind::Saddle(s) => match AtomKind::builtin(&s.name) {
                Some(b) if &b == self => f.write_str(&s.name),
                _ => write!(f, "saddle({},{},{})", s.genus, s.valence, s.stars),
            },
        }
    }
}

/// The `r` mark: a rational in `[0, 1)` or infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RMark {
    Finite { p: i64, q: i64 },
    Infinite,
}

impl RMark {
    pub const ZERO: RMark = RMark::Finite { p: 0, q: 1 };

    /// Reduces `p/q` into `[0, 1)` in lowest terms.
    pub fn finite(p: i64, q: i64) -> Option<RMark> {
        if q == 0 {
            return None;
        }
        let (p, q) = if q < 0 { (-p, -q) } else { (p, q) };
        let p = p.rem_euclid(q);
        let g = p.gcd(&q);
        Some(RMark::Finite { p: p / g, q: q / g })
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, RMark::Infinite)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, RMark::Finite { p: 0, .. })
    }
}

impl fmt::Display for RMark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RMark::Infinite => f.write_str("inf"),
            RMark::Finite { p: 0, .. } => f.write_str("0"),
            RMark::Finite { p, q } => write!(f, "{p}/{q}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeMarks {
    pub r: RMark,
    pub eps: i8,
}

impl EdgeMarks {
    pub fn new(r: RMark, eps: i8) -> Self {
        EdgeMarks { r, eps }
    }

    pub fn zero() -> Self {
        EdgeMarks::new(RMark::ZERO, 1)
    }

    pub fn infinite(eps: i8) -> Self {
        EdgeMarks::new(RMark::Infinite, eps)
    }

    pub fn finite(p: i64, q: i64, eps: i8) -> Self {
        EdgeMarks::new(RMark::finite(p, q).expect("nonzero denominator"), eps)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Endpoint {
    pub atom: String,
    pub slot: u32,
}

impl Endpoint {
    pub fn new(atom: impl Into<String>, slot: u32) -> Self {
        Endpoint {
            atom: atom.into(),
            slot,
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.atom, self.slot)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: Endpoint,
    pub to: Endpoint,
    pub marks: EdgeMarks,
}

impl Edge {
    pub fn new(from: Endpoint, to: Endpoint, marks: EdgeMarks) -> Self {
        Edge { from, to, marks }
    }

    pub fn key(&self) -> (&Endpoint, &Endpoint) {
        (&self.from, &self.to)
    }

    pub fn touches(&self, atom: &str) -> bool {
        self.from.atom == atom || self.to.atom == atom
    }

    /// The endpoint on the other side of `atom`, if the edge touches it.
    pub fn other(&self, atom: &str) -> Option<&Endpoint> {
        if self.from.atom == atom {
            Some(&self.to)
        } else if self.to.atom == atom {
            Some(&self.from)
        } else {
            None
        }
    }

    pub fn label(&self) -> String {
        format!("{} {}", self.from, self.to)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let eps = if self.marks.eps >= 0 { "+1" } else { "-1" };
        write!(f, "edge {} {} r={} eps={};", self.from, self.to, self.marks.r, eps)
    }
}

/// An `n` mark attached to a family of saddle atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FamilyMark {
    pub atoms: BTreeSet<String>,
    pub n: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Molecule {
    pub atoms: BTreeMap<String, AtomKind>,
    pub edges: Vec<Edge>,
    pub families: Vec<FamilyMark>,
    /// Free-form `meta key=value;` header entries.
    pub meta: BTreeMap<String, String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MoleculeError {
    #[error("syntax error at {line}:{col} near `{token}`: {message}")]
    Syntax {
        line: usize,
        col: usize,
        token: String,
        message: String,
    },
    #[error("invalid molecule: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Diagnostic>),
}

impl Molecule {
    pub fn new() -> Self {
        Molecule::default()
    }

    pub fn add_atom(&mut self, id: impl Into<String>, kind: AtomKind) -> &mut Self {
        self.atoms.insert(id.into(), kind);
        self
    }

    pub fn add_edge(&mut self, from: (&str, u32), to: (&str, u32), marks: EdgeMarks) -> &mut Self {
        self.edges.push(Edge::new(
            Endpoint::new(from.0, from.1),
            Endpoint::new(to.0, to.1),
            marks,
        ));
        self
    }

    pub fn set_family_mark<I, S>(&mut self, atoms: I, n: i64) -> &mut Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let atoms: BTreeSet<String> = atoms.into_iter().map(Into::into).collect();
        self.families.retain(|f| f.atoms != atoms);
        self.families.push(FamilyMark { atoms, n });
        self.families.sort();
        self
    }

    pub fn atom(&self, id: &str) -> Option<&AtomKind> {
        self.atoms.get(id)
    }

    pub fn is_saddle(&self, id: &str) -> bool {
        self.atoms.get(id).is_some_and(AtomKind::is_saddle)
    }

    /// Sorts edges and families into canonical order.
    pub fn canonicalize(&mut self) {
        self.edges.sort_by(|a, b| a.key().cmp(&b.key()));
        self.families.sort();
    }

    /// Connected components of the subgraph on saddle atoms spanned by
    /// edges with `r = inf`.
    pub fn families(&self) -> Vec<BTreeSet<String>> {
        let saddles: Vec<&String> = self
            .atoms
            .iter()
            .filter(|(_, k)| k.is_saddle())
            .map(|(id, _)| id)
            .collect();
        let index: BTreeMap<&str, usize> =
            saddles.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut parent: Vec<usize> = (0..saddles.len()).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for e in &self.edges {
            if !e.marks.r.is_infinite() {
                continue;
            }
            if let (Some(&a), Some(&b)) = (index.get(e.from.atom.as_str()), index.get(e.to.atom.as_str())) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let mut groups: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
        for (i, s) in saddles.iter().enumerate() {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().insert((*s).clone());
        }
        let mut out: Vec<BTreeSet<String>> = groups.into_values().collect();
        out.sort();
        out
    }

    /// Stored `n` of the family, 0 when no mark is attached.
    pub fn family_n(&self, family: &BTreeSet<String>) -> i64 {
        self.families
            .iter()
            .find(|f| &f.atoms == family)
            .map_or(0, |f| f.n)
    }

    /// Replaces stored family marks by one mark per computed family.
    pub fn set_family_marks(&mut self, marks: impl IntoIterator<Item = (BTreeSet<String>, i64)>) {
        self.families = marks
            .into_iter()
            .map(|(atoms, n)| FamilyMark { atoms, n })
            .collect();
        self.families.sort();
    }

    /// Atom ids grouped by connected component of the underlying graph.
    pub fn component_atoms(&self) -> Vec<BTreeSet<String>> {
        let mut adj: BTreeMap<&str, Vec<&str>> = self.atoms.keys().map(|k| (k.as_str(), vec![])).collect();
        for e in &self.edges {
            if let Some(v) = adj.get_mut(e.from.atom.as_str()) {
                v.push(e.to.atom.as_str());
            }
            if let Some(v) = adj.get_mut(e.to.atom.as_str()) {
                v.push(e.from.atom.as_str());
            }
        }
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut out = Vec::new();
        for start in self.atoms.keys() {
            if seen.contains(start.as_str()) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut stack = vec![start.as_str()];
            seen.insert(start.as_str());
            while let Some(a) = stack.pop() {
                comp.insert(a.to_string());
                for &b in &adj[a] {
                    if seen.insert(b) {
                        stack.push(b);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// Sub-molecule on the given atoms (edges and family marks restricted).
    pub fn restrict(&self, atoms: &BTreeSet<String>) -> Molecule {
        Molecule {
            atoms: self
                .atoms
                .iter()
                .filter(|(id, _)| atoms.contains(*id))
                .map(|(id, k)| (id.clone(), k.clone()))
                .collect(),
            edges: self
                .edges
                .iter()
                .filter(|e| atoms.contains(&e.from.atom) && atoms.contains(&e.to.atom))
                .cloned()
                .collect(),
            families: self
                .families
                .iter()
                .filter(|f| f.atoms.is_subset(atoms))
                .cloned()
                .collect(),
            meta: BTreeMap::new(),
        }
    }

    pub fn components(&self) -> Vec<Molecule> {
        self.component_atoms().iter().map(|c| self.restrict(c)).collect()
    }

    pub fn is_connected(&self) -> bool {
        self.component_atoms().len() <= 1
    }

    /// Disjoint union; atoms of `other` are prefixed when ids collide.
    pub fn disjoint_union(&self, other: &Molecule) -> Molecule {
        let mut out = self.clone();
        let rename: BTreeMap<String, String> = other
            .atoms
            .keys()
            .map(|id| {
                let mut new = id.clone();
                let mut k = 1;
                while out.atoms.contains_key(&new) || (new != *id && other.atoms.contains_key(&new)) {
                    new = format!("{id}_{k}");
                    k += 1;
                }
                (id.clone(), new)
            })
            .collect();
        let other = other.relabel(&rename);
        out.atoms.extend(other.atoms);
        out.edges.extend(other.edges);
        out.families.extend(other.families);
        out.canonicalize();
        out
    }

    /// Renames atoms; ids missing from the map are kept.
    pub fn relabel(&self, map: &BTreeMap<String, String>) -> Molecule {
        let r = |id: &String| map.get(id).cloned().unwrap_or_else(|| id.clone());
        let mut out = Molecule {
            atoms: self.atoms.iter().map(|(id, k)| (r(id), k.clone())).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    from: Endpoint::new(r(&e.from.atom), e.from.slot),
                    to: Endpoint::new(r(&e.to.atom), e.to.slot),
                    marks: e.marks,
                })
                .collect(),
            families: self
                .families
                .iter()
                .map(|f| FamilyMark {
                    atoms: f.atoms.iter().map(r).collect(),
                    n: f.n,
                })
                .collect(),
            meta: self.meta.clone(),
        };
        out.canonicalize();
        out
    }

    /// A fresh atom id starting with `stem`.
    pub fn fresh_id(&self, stem: &str) -> String {
        if !self.atoms.contains_key(stem) {
            return stem.to_string();
        }
        (1..)
            .map(|k| format!("{stem}_{k}"))
            .find(|id| !self.atoms.contains_key(id))
            .unwrap()
    }

    /// Byte-stable text form: meta, atoms by id, edges sorted, families.
    pub fn serialize(&self) -> String {
        let mut m = self.clone();
        m.canonicalize();
        let mut out = String::new();
        for (k, v) in &m.meta {
            out.push_str(&format!("meta {k}={v};\n"));
        }
        for (id, kind) in &m.atoms {
            out.push_str(&format!("atom {id} {kind};\n"));
        }
        for e in &m.edges {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        for f in &m.families {
            let ids: Vec<&str> = f.atoms.iter().map(String::as_str).collect();
            out.push_str(&format!("family [{}] n={};\n", ids.join(","), f.n));
        }
        out
    }

    /// Structural hash of the molecule, ignoring `meta` entries.
    pub fn hash(&self) -> String {
        let mut m = self.clone();
        m.meta.clear();
        let digest = Sha256::digest(m.serialize().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Number of independent cycles of the underlying graph.
    pub fn graph_cycle_rank(&self) -> usize {
        self.edges.len() + self.component_atoms().len() - self.atoms.len()
    }
}

impl fmt::Display for Molecule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}
