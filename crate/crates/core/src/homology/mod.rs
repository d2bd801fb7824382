//! First homology of the 3-manifold encoded by a molecule.
//!
//! Every saddle atom is a product `P x S^1` of its base surface with the
//! fiber, every `A` atom is a solid torus, and edges glue boundary tori by
//! integer matrices. `H1` is the cokernel of the resulting relation matrix,
//! plus one free class per independent cycle of the molecule graph.

mod gluing;
mod snf;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::molecule::{validate, AtomKind, Diagnostic, Molecule};

pub use gluing::{canonical, edge_matrix, GluingMatrix};
pub use snf::{smith_normal_form, IntMatrix, SmithForm};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomologyError {
    #[error("atom {atom} ({kind}) has star vertices; only the base-case dictionary handles it")]
    UnsupportedAtom { atom: String, kind: String },
    #[error("invalid molecule: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("expected {expected} gluing matrices, got {got}")]
    MatrixCount { expected: usize, got: usize },
}

/// Finitely generated abelian group `Z^rank (+) Z_{d1} (+) ... `.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AbelianGroup {
    pub rank: usize,
    /// Invariant factors, each at least 2, with `d_i | d_{i+1}`.
    pub torsion: Vec<u64>,
}

impl AbelianGroup {
    pub fn trivial() -> Self {
        AbelianGroup::default()
    }

    pub fn free(rank: usize) -> Self {
        AbelianGroup { rank, torsion: vec![] }
    }

    /// `Z_n`, with `Z_0 = Z` and `Z_1 = 0`.
    pub fn cyclic(n: u64) -> Self {
        Self::from_cyclic_orders([n])
    }

    /// Direct sum of cyclic groups of the given orders (0 meaning `Z`).
    pub fn from_cyclic_orders(orders: impl IntoIterator<Item = u64>) -> Self {
        let orders: Vec<u64> = orders.into_iter().collect();
        let rank = orders.iter().filter(|&&n| n == 0).count();
        let finite: Vec<i64> = orders.iter().filter(|&&n| n > 1).map(|&n| n as i64).collect();
        let mut diag = IntMatrix::zeros(finite.len(), finite.len());
        for (i, &n) in finite.iter().enumerate() {
            diag[(i, i)] = n as i128;
        }
        let torsion = smith_normal_form(&diag)
            .invariant_factors()
            .into_iter()
            .filter(|&d| d > 1)
            .map(|d| d as u64)
            .collect();
        AbelianGroup { rank, torsion }
    }

    pub fn direct_sum(&self, other: &AbelianGroup) -> AbelianGroup {
        let orders = std::iter::repeat_n(0, self.rank + other.rank)
            .chain(self.torsion.iter().copied())
            .chain(other.torsion.iter().copied());
        Self::from_cyclic_orders(orders)
    }

    pub fn is_trivial(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }

    /// Cokernel of an integer relation matrix (rows are relations).
    pub fn cokernel(relations: &IntMatrix) -> AbelianGroup {
        let factors = smith_normal_form(relations).invariant_factors();
        AbelianGroup {
            rank: relations.cols() - factors.len(),
            torsion: factors.into_iter().filter(|&d| d > 1).map(|d| d as u64).collect(),
        }
    }
}

impl fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return f.write_str("0");
        }
        let mut parts = Vec::new();
        if self.rank > 0 {
            parts.push(format!("Z^{}", self.rank));
        }
        parts.extend(self.torsion.iter().map(|d| format!("Z_{d}")));
        f.write_str(&parts.join(" (+) "))
    }
}

/// Relation matrix with named generator columns.
#[derive(Clone, Debug)]
pub struct Presentation {
    pub relations: IntMatrix,
    pub generators: Vec<String>,
}

impl Presentation {
    pub fn group(&self) -> AbelianGroup {
        AbelianGroup::cokernel(&self.relations)
    }
}

/// Gluing matrices of all edges (parallel to `m.edges`) with the family
/// `n` marks applied.
///
/// The twist of a family sits on one designated edge: the smallest
/// `r = inf` edge inside the family, otherwise the smallest finite edge
/// touching it, otherwise the smallest edge touching it. When the family
/// lies at the `to` end of that edge the matrix becomes `T_n * C`,
/// otherwise `C * T_{-n}`; both send the neighbour's canonical `mu` to
/// `mu - n * fiber` on the family side.
pub fn gluing_matrices(m: &Molecule) -> Vec<GluingMatrix> {
    let mut mats: Vec<GluingMatrix> = m.edges.iter().map(|e| canonical(e.marks)).collect();
    for family in m.families() {
        let n = m.family_n(&family);
        if n == 0 {
            continue;
        }
        let inside = |a: &String| family.contains(a);
        let touching = || m.edges.iter().enumerate().filter(|(_, e)| inside(&e.from.atom) || inside(&e.to.atom));
        let smallest = |it: &mut dyn Iterator<Item = (usize, &crate::molecule::Edge)>| {
            it.min_by(|(_, a), (_, b)| a.key().cmp(&b.key())).map(|(i, _)| i)
        };
        let designated = smallest(
            &mut touching().filter(|(_, e)| e.marks.r.is_infinite() && inside(&e.from.atom) && inside(&e.to.atom)),
        )
        .or_else(|| smallest(&mut touching().filter(|(_, e)| !e.marks.r.is_infinite())))
        .or_else(|| smallest(&mut touching()));
        let Some(i) = designated else { continue };
        mats[i] = if inside(&m.edges[i].to.atom) {
            GluingMatrix::twist(n) * mats[i]
        } else {
            mats[i] * GluingMatrix::twist(-n)
        };
    }
    mats
}

fn check_supported(m: &Molecule) -> Result<(), HomologyError> {
    for (id, kind) in &m.atoms {
        if kind.stars() > 0 {
            return Err(HomologyError::UnsupportedAtom { atom: id.clone(), kind: kind.to_string() });
        }
    }
    Ok(())
}

/// Relation matrix of `m` using its own marks.
pub fn presentation(m: &Molecule) -> Result<Presentation, HomologyError> {
    let diags = validate(m);
    if !diags.is_empty() {
        return Err(HomologyError::Invalid(diags));
    }
    presentation_with(m, &gluing_matrices(m))
}

/// Relation matrix of `m` with explicit gluing matrices, one per edge of
/// `m.edges` in order. Only the graph and atom shapes of `m` are used.
pub fn presentation_with(m: &Molecule, matrices: &[GluingMatrix]) -> Result<Presentation, HomologyError> {
    check_supported(m)?;
    if matrices.len() != m.edges.len() {
        return Err(HomologyError::MatrixCount { expected: m.edges.len(), got: matrices.len() });
    }
    let mut generators = Vec::new();
    // (lambda, mu) generator indices of each boundary slot
    let mut slot_basis: BTreeMap<(&str, u32), (usize, usize)> = BTreeMap::new();
    let mut atom_relations: Vec<Vec<usize>> = Vec::new();
    for (id, kind) in &m.atoms {
        match kind {
            AtomKind::A => {
                let mer = generators.len();
                generators.push(format!("{id}.meridian"));
                generators.push(format!("{id}.core"));
                slot_basis.insert((id, 1), (mer, mer + 1));
                atom_relations.push(vec![mer]);
            }
            AtomKind::Saddle(s) => {
                let fiber = generators.len();
                generators.push(format!("{id}.fiber"));
                let mut boundary = Vec::new();
                for slot in 1..=s.valence {
                    boundary.push(generators.len());
                    slot_basis.insert((id, slot), (fiber, generators.len()));
                    generators.push(format!("{id}.d{slot}"));
                }
                for k in 1..=2 * s.genus {
                    generators.push(format!("{id}.h{k}"));
                }
                atom_relations.push(boundary);
            }
        }
    }
    let cycles = m.graph_cycle_rank();
    for k in 1..=cycles {
        generators.push(format!("graph.cycle{k}"));
    }
    let width = generators.len();
    let mut relations = IntMatrix::zeros(0, width);
    for gens in atom_relations {
        let mut row = vec![0i128; width];
        for g in gens {
            row[g] += 1;
        }
        relations.push_row(&row);
    }
    for (e, k) in m.edges.iter().zip(matrices) {
        let (lf, mf) = slot_basis[&(e.from.atom.as_str(), e.from.slot)];
        let (lt, mt) = slot_basis[&(e.to.atom.as_str(), e.to.slot)];
        for (target, (a, b)) in [(lt, (k.alpha, k.beta)), (mt, (k.gamma, k.delta))] {
            let mut row = vec![0i128; width];
            row[target] += 1;
            row[lf] -= a as i128;
            row[mf] -= b as i128;
            relations.push_row(&row);
        }
    }
    Ok(Presentation { relations, generators })
}

/// `H1` of the manifold glued from a valid, star-free molecule.
pub fn first_homology(m: &Molecule) -> Result<AbelianGroup, HomologyError> {
    Ok(presentation(m)?.group())
}

/// Atoms of `m` that the homology engine cannot handle.
pub fn unsupported_atoms(m: &Molecule) -> BTreeSet<String> {
    m.atoms.iter().filter(|(_, k)| k.stars() > 0).map(|(id, _)| id.clone()).collect()
}
