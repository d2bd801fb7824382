use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::molecule::Molecule;

use super::{classify, ManifoldClass};

/// A corpus slot: either a concrete molecule or a placeholder whose type
/// can only come from seeds and arrows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CorpusEntry {
    Molecule(Box<Molecule>),
    Placeholder,
}

/// Identification `from -> to` with an opaque label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arrow {
    pub from: u32,
    pub to: u32,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seed {
    pub class: ManifoldClass,
    pub source: String,
}

/// Type assigned to an id, with where it came from: `classify`,
/// `seed:<label>` or `arrow` (reached through identifications).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Typed {
    pub class: ManifoldClass,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Propagation {
    pub types: BTreeMap<u32, Typed>,
    pub unreached: BTreeSet<u32>,
    /// Arrow-connected components of the corpus ids.
    pub components: Vec<BTreeSet<u32>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PropagateError {
    #[error("type conflict in component {{{}}}: {}", fmt_ids(.component), .types.iter().map(|(id, c)| format!("{id} is {c}")).collect::<Vec<_>>().join(", "))]
    TypeConflict { component: BTreeSet<u32>, types: Vec<(u32, String)> },
    #[error("{context} refers to id {id}, which is not in the corpus")]
    UnknownId { id: u32, context: String },
}

fn fmt_ids(ids: &BTreeSet<u32>) -> String {
    ids.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

/// Spreads known types over arrow-connected components.
///
/// Concrete corpus molecules that `classify` resolves act as extra seeds.
/// A component whose seeds disagree is a [`PropagateError::TypeConflict`];
/// ids in components without any seed are reported as unreached.
pub fn propagate(
    corpus: &BTreeMap<u32, CorpusEntry>,
    seeds: &BTreeMap<u32, Seed>,
    arrows: &[Arrow],
) -> Result<Propagation, PropagateError> {
    for id in seeds.keys() {
        if !corpus.contains_key(id) {
            return Err(PropagateError::UnknownId { id: *id, context: "seed".into() });
        }
    }
    let ids: Vec<u32> = corpus.keys().copied().collect();
    let index: BTreeMap<u32, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for a in arrows {
        let context = format!("arrow {} -> {} ({})", a.from, a.to, a.label);
        let f = *index.get(&a.from).ok_or(PropagateError::UnknownId { id: a.from, context: context.clone() })?;
        let t = *index.get(&a.to).ok_or(PropagateError::UnknownId { id: a.to, context })?;
        let (rf, rt) = (find(&mut parent, f), find(&mut parent, t));
        if rf != rt {
            parent[rf.max(rt)] = rf.min(rt);
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<u32>> = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        groups.entry(find(&mut parent, i)).or_default().insert(*id);
    }

    let mut known: BTreeMap<u32, Typed> = BTreeMap::new();
    for (id, entry) in corpus {
        if let CorpusEntry::Molecule(m) = entry {
            if let Some(c) = classify(m).class() {
                known.insert(*id, Typed { class: c.clone(), source: "classify".into() });
            }
        }
    }
    let mut seeded: Vec<(u32, Typed)> = known.into_iter().collect();
    seeded.extend(
        seeds
            .iter()
            .map(|(id, s)| (*id, Typed { class: s.class.clone(), source: format!("seed:{}", s.source) })),
    );

    let mut types = BTreeMap::new();
    let mut unreached = BTreeSet::new();
    let components: Vec<BTreeSet<u32>> = groups.into_values().collect();
    for comp in &components {
        let here: Vec<&(u32, Typed)> = seeded.iter().filter(|(id, _)| comp.contains(id)).collect();
        let Some((_, first)) = here.first() else {
            unreached.extend(comp.iter().copied());
            continue;
        };
        if here.iter().any(|(_, t)| t.class != first.class) {
            return Err(PropagateError::TypeConflict {
                component: comp.clone(),
                types: here.iter().map(|(id, t)| (*id, t.class.to_string())).collect(),
            });
        }
        for id in comp {
            let typed = here
                .iter()
                .find(|(sid, _)| sid == id)
                .map(|(_, t)| t.clone())
                .unwrap_or_else(|| Typed { class: first.class.clone(), source: "arrow".into() });
            types.insert(*id, typed);
        }
    }
    Ok(Propagation { types, unreached, components })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn placeholders(ids: impl IntoIterator<Item = u32>) -> BTreeMap<u32, CorpusEntry> {
        ids.into_iter().map(|i| (i, CorpusEntry::Placeholder)).collect()
    }

    fn arrow(from: u32, to: u32) -> Arrow {
        Arrow { from, to, label: "x".into() }
    }

    fn seed(class: ManifoldClass) -> Seed {
        Seed { class, source: "test".into() }
    }

    #[test]
    fn chain_is_typed() {
        let seeds = BTreeMap::from([(1, seed(ManifoldClass::s3()))]);
        let p = propagate(&placeholders(1..=3), &seeds, &[arrow(1, 2), arrow(2, 3)]).unwrap();
        assert!(p.unreached.is_empty());
        assert!(p.types.values().all(|t| t.class == ManifoldClass::s3()));
    }

    #[test]
    fn seed_at_chain_end() {
        let two = ManifoldClass::s3().disjoint_union(&ManifoldClass::s3());
        let seeds = BTreeMap::from([(7, seed(two.clone()))]);
        let p = propagate(&placeholders([6, 7, 22, 5]), &seeds, &[arrow(22, 6), arrow(6, 7)]).unwrap();
        assert_eq!(p.types[&22].class, two);
        assert_eq!(p.types[&6].class, two);
        assert_eq!(p.unreached, BTreeSet::from([5]));
    }

    #[test]
    fn conflicting_seeds() {
        let seeds = BTreeMap::from([(1, seed(ManifoldClass::s3())), (3, seed(ManifoldClass::s1xs2()))]);
        let err = propagate(&placeholders(1..=3), &seeds, &[arrow(1, 2), arrow(2, 3)]).unwrap_err();
        match err {
            PropagateError::TypeConflict { component, .. } => assert_eq!(component, BTreeSet::from([1, 2, 3])),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_ids() {
        let err = propagate(&placeholders(1..=2), &BTreeMap::new(), &[arrow(1, 9)]).unwrap_err();
        assert!(matches!(err, PropagateError::UnknownId { id: 9, .. }));
    }
}
