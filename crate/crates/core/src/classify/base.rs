use crate::molecule::{AtomKind, Molecule, RMark};

use super::class::ManifoldClass;

/// Dictionary of molecules with a known manifold type.
///
/// - `A -r- A`: `S^3` for `r = 0`, `S^1 x S^2` for `r = inf`, `L(q, p)` for `r = p/q`;
/// - `A -0- A* -0- A` (either `eps`) with family mark `n = -1`: `S^3`;
/// - a planar star-free saddle with `v` boundary tori, each capped by an
///   `A` atom through `r = inf`: the fiber bounds a disk and the result is
///   `#(v-1) (S^1 x S^2)` (for `C2` this is the three-fold sum);
/// - disjoint unions, componentwise.
pub fn base_case(m: &Molecule) -> Option<ManifoldClass> {
    let comps = m.components();
    if comps.is_empty() {
        return None;
    }
    let mut out = ManifoldClass::default();
    for c in &comps {
        out = out.disjoint_union(&base_component(c)?);
    }
    Some(out)
}

fn base_component(m: &Molecule) -> Option<ManifoldClass> {
    let saddles: Vec<(&String, &AtomKind)> = m.atoms.iter().filter(|(_, k)| k.is_saddle()).collect();
    match saddles.as_slice() {
        [] => {
            let [e] = m.edges.as_slice() else { return None };
            Some(match e.marks.r {
                RMark::Infinite => ManifoldClass::s1xs2(),
                RMark::Finite { p, q } => ManifoldClass::lens(q as u64, p),
            })
        }
        [(id, kind)] => {
            let legs_are_caps = m.edges.len() as u32 == kind.valence()
                && m.edges.iter().all(|e| {
                    let other = e.other(id).expect("edge touches the only saddle");
                    other.atom != **id && m.atoms[&other.atom] == AtomKind::A
                });
            if !legs_are_caps {
                return None;
            }
            if **kind == AtomKind::astar() {
                let family: std::collections::BTreeSet<String> = [(*id).clone()].into();
                let ok = m.edges.iter().all(|e| e.marks.r.is_zero())
                    && m.family_n(&family) == -1;
                return ok.then(ManifoldClass::s3);
            }
            if kind.genus() == 0 && kind.stars() == 0 && m.edges.iter().all(|e| e.marks.r.is_infinite()) {
                return Some(ManifoldClass::sum_of_s1xs2(kind.valence() as usize - 1));
            }
            None
        }
        _ => None,
    }
}
