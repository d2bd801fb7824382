//! Rewrite moves on molecules.
//!
//! Moves work on full gluing matrices: the molecule is loaded with its
//! family twists applied, surgery is done on matrices and per-atom
//! "excess" (the saddle relation becomes `sum of boundary classes =
//! excess * fiber`), and the result is normalised back into marks
//! `(r, eps)` plus family `n` marks.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::homology::{gluing_matrices, GluingMatrix};
use crate::molecule::{validate, AtomKind, Edge, EdgeMarks, Endpoint, Molecule};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MoveError {
    #[error("move not applicable: {0}")]
    NotApplicable(String),
    #[error("edge index {0} out of range")]
    NoSuchEdge(usize),
}

fn not_applicable<T>(msg: impl Into<String>) -> Result<T, MoveError> {
    Err(MoveError::NotApplicable(msg.into()))
}

#[derive(Clone, Debug)]
struct WorkEdge {
    from: Endpoint,
    to: Endpoint,
    k: GluingMatrix,
}

/// Molecule with explicit gluing matrices and saddle excesses.
#[derive(Clone, Debug)]
struct Work {
    atoms: BTreeMap<String, AtomKind>,
    edges: Vec<WorkEdge>,
    excess: BTreeMap<String, i64>,
}

impl Work {
    fn load(m: &Molecule) -> Work {
        let mats = gluing_matrices(m);
        Work {
            atoms: m.atoms.clone(),
            edges: m
                .edges
                .iter()
                .zip(mats)
                .map(|(e, k)| WorkEdge { from: e.from.clone(), to: e.to.clone(), k })
                .collect(),
            excess: BTreeMap::new(),
        }
    }

    fn is_saddle(&self, id: &str) -> bool {
        self.atoms.get(id).is_some_and(AtomKind::is_saddle)
    }

    fn excess_mut(&mut self, id: &str) -> &mut i64 {
        self.excess.entry(id.to_string()).or_insert(0)
    }

    fn edge_at(&self, atom: &str, slot: u32) -> Option<usize> {
        self.edges.iter().position(|e| {
            (e.from.atom == atom && e.from.slot == slot) || (e.to.atom == atom && e.to.slot == slot)
        })
    }

    fn remove_atom(&mut self, id: &str) {
        self.atoms.remove(id);
        self.excess.remove(id);
    }

    /// Renumbers slots of `atom` through `map` (old slot -> new slot).
    fn renumber(&mut self, atom: &str, map: &BTreeMap<u32, u32>) {
        for e in &mut self.edges {
            for end in [&mut e.from, &mut e.to] {
                if end.atom == atom {
                    end.slot = map[&end.slot];
                }
            }
        }
    }

    /// Converts matrices back to marks, moving twists into saddle excesses
    /// (or dropping them on `A` atoms), then sums excesses into family `n`.
    fn finish(mut self) -> Result<Molecule, MoveError> {
        let mut m = Molecule::new();
        m.atoms = self.atoms.clone();
        let mut marks = Vec::new();
        let edges = std::mem::take(&mut self.edges);
        for e in &edges {
            let (mk, a, b) = e.k.decompose();
            let from_saddle = self.is_saddle(&e.from.atom);
            let to_saddle = self.is_saddle(&e.to.atom);
            if mk.r.is_infinite() {
                // the twist can sit on either side; A atoms absorb it for free
                if from_saddle && to_saddle {
                    *self.excess_mut(&e.to.atom) -= a;
                }
            } else {
                if to_saddle {
                    *self.excess_mut(&e.to.atom) -= a;
                }
                if from_saddle {
                    *self.excess_mut(&e.from.atom) += b;
                }
            }
            marks.push(mk);
        }
        for (e, mk) in edges.iter().zip(marks) {
            m.edges.push(Edge::new(e.from.clone(), e.to.clone(), mk));
        }
        m.canonicalize();
        if has_infinite_cycle(&m) {
            return not_applicable("result would contain a cycle of r=inf edges between saddle atoms");
        }
        let fams = m.families();
        m.set_family_marks(fams.into_iter().filter_map(|f| {
            let n = -f.iter().map(|a| self.excess.get(a).copied().unwrap_or(0)).sum::<i64>();
            (n != 0).then_some((f, n))
        }));
        debug_assert!(validate(&m).is_empty(), "{:?}\n{m}", validate(&m));
        Ok(m)
    }
}

/// Whether the saddle-saddle `r = inf` edges contain a cycle (including loops).
pub fn has_infinite_cycle(m: &Molecule) -> bool {
    let index: BTreeMap<&str, usize> = m.atoms.keys().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut parent: Vec<usize> = (0..index.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for e in &m.edges {
        if !e.marks.r.is_infinite() || !m.is_saddle(&e.from.atom) || !m.is_saddle(&e.to.atom) {
            continue;
        }
        let a = find(&mut parent, index[e.from.atom.as_str()]);
        let b = find(&mut parent, index[e.to.atom.as_str()]);
        if a == b {
            return true;
        }
        parent[a] = b;
    }
    false
}

fn edge(m: &Molecule, i: usize) -> Result<&Edge, MoveError> {
    m.edges.get(i).ok_or(MoveError::NoSuchEdge(i))
}

/// Matrix taking the basis on the far side of `e` to the basis of `atom`'s slot.
fn into_atom(e: &WorkEdge, atom: &str) -> GluingMatrix {
    if e.to.atom == atom {
        e.k
    } else {
        e.k.inverse()
    }
}

/// Absorbs an `A` atom glued to a saddle `V` by `r = 0`: the solid torus
/// caps one boundary circle of `V`'s base. A resulting annulus atom is
/// eliminated by fusing its two edges; a resulting disk atom becomes `A`.
pub fn absorb_a(m: &Molecule, edge_index: usize) -> Result<Molecule, MoveError> {
    let e = edge(m, edge_index)?;
    let (a_end, v_end) = match (m.atom(&e.from.atom), m.atom(&e.to.atom)) {
        (Some(AtomKind::A), Some(AtomKind::Saddle(_))) => (&e.from, &e.to),
        (Some(AtomKind::Saddle(_)), Some(AtomKind::A)) => (&e.to, &e.from),
        _ => return not_applicable("edge does not join an A atom to a saddle atom"),
    };
    if !e.marks.r.is_zero() {
        return not_applicable(format!("edge has r={}, absorption needs r=0", e.marks.r));
    }
    let v = v_end.atom.clone();
    let kind = m.atoms[&v].clone();
    if kind.stars() > 0 {
        return not_applicable("saddle atom has star vertices");
    }
    if kind.valence() < 2 {
        return not_applicable("saddle atom has a single boundary torus");
    }
    if m.edges.iter().any(|e| e.from.atom == v && e.to.atom == v) {
        return not_applicable("saddle atom has a loop edge");
    }

    let mut w = Work::load(m);
    let k = w.edges[edge_index].k;
    // D maps V's slot basis (f, d_j) to the A basis (meridian, core)
    let d = if a_end == &e.to { k } else { k.inverse() };
    *w.excess_mut(&v) += d.alpha * d.beta;
    let slot = v_end.slot;
    let a_id = a_end.atom.clone();
    w.edges.remove(edge_index);
    w.remove_atom(&a_id);

    let valence = kind.valence() - 1;
    let genus = kind.genus();
    let map: BTreeMap<u32, u32> = (1..=kind.valence())
        .filter(|&s| s != slot)
        .enumerate()
        .map(|(i, s)| (s, i as u32 + 1))
        .collect();
    w.renumber(&v, &map);
    w.atoms.insert(v.clone(), AtomKind::saddle(genus, valence, 0));

    if genus == 0 && valence == 2 {
        // T^2 x I: slot-1 basis (f, d1) maps to slot-2 basis (f, c f - d1)
        let c = w.excess.get(&v).copied().unwrap_or(0);
        let pass = GluingMatrix::new(1, 0, c, -1);
        let i1 = w.edge_at(&v, 1).expect("slot 1 glued");
        let i2 = w.edge_at(&v, 2).expect("slot 2 glued");
        let (e1, e2) = (w.edges[i1].clone(), w.edges[i2].clone());
        let x1 = e1.other(&v);
        let x2 = e2.other(&v);
        let a1 = into_atom(&e1, &v);
        let a2 = into_atom(&e2, &v).inverse();
        let fused = WorkEdge { from: x1, to: x2, k: a2 * pass * a1 };
        w.edges.retain(|e| !(e.from.atom == v || e.to.atom == v));
        w.edges.push(fused);
        w.remove_atom(&v);
    } else if genus == 0 && valence == 1 {
        // D^2 x S^1 is a solid torus with meridian d1 - c f and core f
        let c = w.excess.get(&v).copied().unwrap_or(0);
        let basis = GluingMatrix::new(-c, 1, 1, 0);
        let i1 = w.edge_at(&v, 1).expect("slot 1 glued");
        let e1 = &mut w.edges[i1];
        e1.k = if e1.to.atom == v { basis * e1.k } else { e1.k * basis.inverse() };
        w.excess.remove(&v);
        w.atoms.insert(v.clone(), AtomKind::A);
    }
    w.finish()
}

impl WorkEdge {
    fn other(&self, atom: &str) -> Endpoint {
        if self.from.atom == atom {
            self.to.clone()
        } else {
            self.from.clone()
        }
    }
}

/// Replaces two pants saddles joined by an `r = inf, eps = -1` edge with a
/// single `C2` atom carrying their four outer edges.
pub fn fuse_bb_to_c2(m: &Molecule, edge_index: usize) -> Result<Molecule, MoveError> {
    let e = edge(m, edge_index)?;
    let (u, v) = (e.from.atom.clone(), e.to.atom.clone());
    if u == v {
        return not_applicable("edge is a loop");
    }
    for id in [&u, &v] {
        if !m.atoms[id].is_planar_saddle(3) {
            return not_applicable(format!("atom {id} is not a B-type saddle (genus 0, three boundary tori)"));
        }
    }
    if e.marks != EdgeMarks::infinite(-1) {
        return not_applicable(format!("edge has r={} eps={}, fusion needs r=inf eps=-1", e.marks.r, e.marks.eps));
    }
    let (su, sv) = (e.from.slot, e.to.slot);

    let mut w = Work::load(m);
    let k = w.edges[edge_index].k;
    // f_v = e f_u and d_v = gamma f_u - e d_u
    let sign = k.alpha;
    let cu = w.excess.get(&u).copied().unwrap_or(0);
    let cv = w.excess.get(&v).copied().unwrap_or(0);
    w.edges.remove(edge_index);

    let fused = m.fresh_id(&format!("{u}{v}"));
    let mut next = 1;
    let mut slot_map: BTreeMap<(String, u32), u32> = BTreeMap::new();
    for (atom, skip) in [(&u, su), (&v, sv)] {
        for s in 1..=3 {
            if s != skip {
                slot_map.insert((atom.clone(), s), next);
                next += 1;
            }
        }
    }
    for we in &mut w.edges {
        // v's basis is sign times the fused atom's basis
        let at_v = (we.from.atom == v) as u32 + (we.to.atom == v) as u32;
        if sign < 0 && at_v % 2 == 1 {
            we.k = we.k.neg();
        }
        for end in [&mut we.from, &mut we.to] {
            if end.atom == u || end.atom == v {
                end.slot = slot_map[&(end.atom.clone(), end.slot)];
                end.atom = fused.clone();
            }
        }
    }
    w.remove_atom(&u);
    w.remove_atom(&v);
    w.atoms.insert(fused.clone(), AtomKind::c2());
    w.excess.insert(fused, cu + cv - sign * k.gamma);
    w.finish()
}

/// Cuts along the sphere over an `r = inf` edge from an `A` atom to a pants
/// saddle `B`, capping the two remaining boundary tori of `B` with solid
/// tori whose meridian is the fiber.
///
/// If the cut separates the molecule the two sides are returned; otherwise
/// the capped molecule is returned together with `A -inf- A` (the
/// `S^1 x S^2` summand produced by a non-separating sphere).
pub fn split_connected_sum(m: &Molecule, edge_index: usize) -> Result<(Molecule, Molecule), MoveError> {
    let e = edge(m, edge_index)?;
    let (a_end, b_end) = match (m.atom(&e.from.atom), m.atom(&e.to.atom)) {
        (Some(AtomKind::A), Some(b)) if b.is_planar_saddle(3) => (&e.from, &e.to),
        (Some(b), Some(AtomKind::A)) if b.is_planar_saddle(3) => (&e.to, &e.from),
        _ => return not_applicable("edge does not join an A atom to a B-type saddle"),
    };
    if !e.marks.r.is_infinite() {
        return not_applicable(format!("edge has r={}, splitting needs r=inf", e.marks.r));
    }
    let b = b_end.atom.clone();
    if m.edges.iter().any(|e| e.from.atom == b && e.to.atom == b) {
        return not_applicable("saddle atom has a loop edge");
    }

    let mut w = Work::load(m);
    w.edges.remove(edge_index);
    w.remove_atom(&a_end.atom);
    w.remove_atom(&b);
    let mut caps = Vec::new();
    for slot in (1..=3).filter(|&s| s != b_end.slot) {
        let id = {
            let stem = format!("{b}_cap{slot}");
            let mut id = stem.clone();
            let mut k = 1;
            while w.atoms.contains_key(&id) || m.atoms.contains_key(&id) {
                id = format!("{stem}_{k}");
                k += 1;
            }
            id
        };
        let i = w.edge_at(&b, slot).expect("slot glued");
        let we = &mut w.edges[i];
        // cap basis (meridian, core) = (f, d_slot): the matrix is unchanged
        for end in [&mut we.from, &mut we.to] {
            if end.atom == b {
                *end = Endpoint::new(id.clone(), 1);
            }
        }
        w.atoms.insert(id.clone(), AtomKind::A);
        caps.push(id);
    }
    let capped = w.finish()?;
    let comps = capped.component_atoms();
    if comps.len() == 1 {
        let mut handle = Molecule::new();
        let (x, y) = (capped.fresh_id("h1"), capped.fresh_id("h2"));
        handle.add_atom(x.clone(), AtomKind::A).add_atom(y.clone(), AtomKind::A);
        handle.add_edge((&x, 1), (&y, 1), EdgeMarks::infinite(1));
        return Ok((capped, handle));
    }
    let side = |cap: &String| {
        comps
            .iter()
            .find(|c| c.contains(cap))
            .map(|c| capped.restrict(c))
            .expect("cap lies in some component")
    };
    Ok((side(&caps[0]), side(&caps[1])))
}

/// Edge indices where each move's precondition holds.
pub fn applicable(m: &Molecule) -> Vec<(MoveKind, usize)> {
    let mut out = Vec::new();
    for kind in [MoveKind::AbsorbA, MoveKind::FuseBB, MoveKind::Split] {
        for i in 0..m.edges.len() {
            if kind.precheck(m, i) {
                out.push((kind, i));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum MoveKind {
    AbsorbA,
    FuseBB,
    Split,
}

impl MoveKind {
    pub fn name(&self) -> &'static str {
        match self {
            MoveKind::AbsorbA => "absorb_A",
            MoveKind::FuseBB => "fuse_BB_to_C2",
            MoveKind::Split => "split_connected_sum",
        }
    }

    /// Cheap structural filter; the move itself may still refuse.
    fn precheck(&self, m: &Molecule, i: usize) -> bool {
        let e = &m.edges[i];
        let (from, to) = (&m.atoms[&e.from.atom], &m.atoms[&e.to.atom]);
        let a_saddle = |x: &AtomKind, y: &AtomKind| matches!(x, AtomKind::A) && y.is_saddle();
        match self {
            MoveKind::AbsorbA => e.marks.r.is_zero() && (a_saddle(from, to) || a_saddle(to, from)),
            MoveKind::FuseBB => {
                e.marks == EdgeMarks::infinite(-1)
                    && e.from.atom != e.to.atom
                    && from.is_planar_saddle(3)
                    && to.is_planar_saddle(3)
            }
            MoveKind::Split => {
                e.marks.r.is_infinite()
                    && ((matches!(from, AtomKind::A) && to.is_planar_saddle(3))
                        || (matches!(to, AtomKind::A) && from.is_planar_saddle(3)))
            }
        }
    }

    /// Applies the move; the result is one or two molecules.
    pub fn apply(&self, m: &Molecule, edge_index: usize) -> Result<Vec<Molecule>, MoveError> {
        match self {
            MoveKind::AbsorbA => absorb_a(m, edge_index).map(|x| vec![x]),
            MoveKind::FuseBB => fuse_bb_to_c2(m, edge_index).map(|x| vec![x]),
            MoveKind::Split => split_connected_sum(m, edge_index).map(|(x, y)| vec![x, y]),
        }
    }
}
