//! Manifold classification of molecules: a base-case dictionary, rewrite
//! moves searched depth-first, and propagation of types along
//! identification arrows between corpus molecules.

mod base;
mod class;
mod moves;
mod propagate;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::homology::{first_homology, AbelianGroup};
use crate::molecule::Molecule;

pub use base::base_case;
pub use class::{ClassParseError, Component, ManifoldClass, Summand};
pub use moves::{absorb_a, applicable, fuse_bb_to_c2, has_infinite_cycle, split_connected_sum, MoveError, MoveKind};
pub use propagate::{propagate, Arrow, CorpusEntry, PropagateError, Propagation, Seed, Typed};

/// One applied move: piece `piece` of the current list (identified by its
/// hash) was replaced by the molecules with hashes `outputs`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub piece: usize,
    pub op: MoveKind,
    pub edge: usize,
    pub edge_label: String,
    pub input: String,
    pub outputs: Vec<String>,
}

/// Dictionary match that closed a piece.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseMatch {
    pub piece: usize,
    pub hash: String,
    pub class: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivationTrace {
    pub input: String,
    pub steps: Vec<TraceStep>,
    pub base: Vec<BaseMatch>,
    /// Hash of the disjoint union of the final pieces.
    pub final_hash: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Known(ManifoldClass),
    /// No derivation found; `h1` is kept whenever the homology engine applies.
    Unknown { h1: Option<AbelianGroup>, reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub outcome: Outcome,
    pub trace: DerivationTrace,
}

impl Classification {
    pub fn class(&self) -> Option<&ManifoldClass> {
        match &self.outcome {
            Outcome::Known(c) => Some(c),
            Outcome::Unknown { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_depth: usize,
    pub max_nodes: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { max_depth: 32, max_nodes: 10_000 }
    }
}

#[derive(Clone, Debug)]
struct Piece {
    group: usize,
    molecule: Molecule,
}

struct Search {
    limits: SearchLimits,
    visited: HashSet<String>,
    nodes: usize,
    steps: Vec<TraceStep>,
    exhausted: bool,
}

fn state_key(pieces: &[Piece]) -> String {
    let mut keys: Vec<String> = pieces.iter().map(|p| format!("{}:{}", p.group, p.molecule.hash())).collect();
    keys.sort();
    keys.join(",")
}

impl Search {
    fn run(&mut self, pieces: Vec<Piece>, depth: usize) -> Option<Vec<Piece>> {
        self.nodes += 1;
        if self.nodes > self.limits.max_nodes {
            self.exhausted = true;
            return None;
        }
        if !self.visited.insert(state_key(&pieces)) {
            return None;
        }
        let Some(i) = pieces.iter().position(|p| base_case(&p.molecule).is_none()) else {
            return Some(pieces);
        };
        if depth >= self.limits.max_depth {
            self.exhausted = true;
            return None;
        }
        let m = &pieces[i].molecule;
        for (kind, e) in applicable(m) {
            let Ok(results) = kind.apply(m, e) else { continue };
            let mut next = pieces.clone();
            let group = pieces[i].group;
            self.steps.push(TraceStep {
                piece: i,
                op: kind,
                edge: e,
                edge_label: m.edges[e].label(),
                input: m.hash(),
                outputs: results.iter().map(Molecule::hash).collect(),
            });
            next.splice(i..=i, results.into_iter().map(|molecule| Piece { group, molecule }));
            if let Some(done) = self.run(next, depth + 1) {
                return Some(done);
            }
            self.steps.pop();
        }
        None
    }
}

fn union_hash(pieces: &[Molecule]) -> String {
    pieces
        .iter()
        .fold(Molecule::new(), |acc, p| acc.disjoint_union(p))
        .hash()
}

/// Classifies with the default search limits.
pub fn classify(m: &Molecule) -> Classification {
    classify_with(m, SearchLimits::default())
}

/// Depth-first search over moves (absorb, then fuse, then split, edges in
/// canonical order) until every piece matches the base-case dictionary.
pub fn classify_with(m: &Molecule, limits: SearchLimits) -> Classification {
    let comps = m.components();
    let pieces: Vec<Piece> = comps
        .iter()
        .enumerate()
        .map(|(group, c)| Piece { group, molecule: c.clone() })
        .collect();
    let mut search = Search { limits, visited: HashSet::new(), nodes: 0, steps: Vec::new(), exhausted: false };
    let input = m.hash();
    let unknown = |reason: String, trace: DerivationTrace| Classification {
        outcome: Outcome::Unknown { h1: first_homology(m).ok(), reason },
        trace,
    };
    if comps.is_empty() {
        return unknown("empty molecule".into(), DerivationTrace { input, ..Default::default() });
    }
    let Some(done) = search.run(pieces, 0) else {
        let reason = if search.exhausted {
            format!("search limits reached ({} nodes, depth {})", search.nodes, limits.max_depth)
        } else {
            "no move sequence reaches the base-case dictionary".to_string()
        };
        return unknown(reason, DerivationTrace { input, ..Default::default() });
    };

    let mut base = Vec::new();
    let mut per_group: Vec<Option<ManifoldClass>> = vec![None; comps.len()];
    for (i, p) in done.iter().enumerate() {
        let c = base_case(&p.molecule).expect("search stops only at dictionary matches");
        base.push(BaseMatch { piece: i, hash: p.molecule.hash(), class: c.to_string() });
        let slot = &mut per_group[p.group];
        *slot = Some(match slot.take() {
            None => c,
            Some(acc) => acc.connected_sum(&c).expect("pieces are connected"),
        });
    }
    let class = per_group
        .into_iter()
        .flatten()
        .fold(ManifoldClass::default(), |acc, c| acc.disjoint_union(&c));
    let finals: Vec<Molecule> = done.into_iter().map(|p| p.molecule).collect();
    Classification {
        outcome: Outcome::Known(class),
        trace: DerivationTrace { input, steps: search.steps, base, final_hash: union_hash(&finals) },
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("trace was recorded for molecule {expected}, got {actual}")]
    InputMismatch { expected: String, actual: String },
    #[error("step {step}: no piece {piece}")]
    NoPiece { step: usize, piece: usize },
    #[error("step {step}: piece hash {actual} differs from recorded {expected}")]
    HashMismatch { step: usize, expected: String, actual: String },
    #[error("step {step}: {source}")]
    Move { step: usize, source: MoveError },
    #[error("final hash {actual} differs from recorded {expected}")]
    FinalMismatch { expected: String, actual: String },
}

/// Re-applies the trace to `m`, checking every recorded hash, and returns
/// the final pieces.
pub fn replay(m: &Molecule, trace: &DerivationTrace) -> Result<Vec<Molecule>, ReplayError> {
    if m.hash() != trace.input {
        return Err(ReplayError::InputMismatch { expected: trace.input.clone(), actual: m.hash() });
    }
    let mut pieces = m.components();
    for (step, s) in trace.steps.iter().enumerate() {
        let piece = pieces.get(s.piece).ok_or(ReplayError::NoPiece { step, piece: s.piece })?;
        if piece.hash() != s.input {
            return Err(ReplayError::HashMismatch { step, expected: s.input.clone(), actual: piece.hash() });
        }
        let out = s.op.apply(piece, s.edge).map_err(|source| ReplayError::Move { step, source })?;
        for (got, want) in out.iter().zip(&s.outputs) {
            if &got.hash() != want {
                return Err(ReplayError::HashMismatch { step, expected: want.clone(), actual: got.hash() });
            }
        }
        pieces.splice(s.piece..=s.piece, out);
    }
    let actual = union_hash(&pieces);
    if actual != trace.final_hash {
        return Err(ReplayError::FinalMismatch { expected: trace.final_hash.clone(), actual });
    }
    Ok(pieces)
}
