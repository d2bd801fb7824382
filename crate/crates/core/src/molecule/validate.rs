use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::{AtomKind, Molecule, RMark};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosticKind {
    UnknownAtom,
    AtomShape,
    SlotRange,
    SlotUsage,
    Eps,
    RMark,
    Family,
    Convention,
}

/// One violated molecule invariant and where it was found.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub location: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {}: {}", self.kind, self.location, self.message)
    }
}

/// The only gluing convention understood by the homology engine.
pub const CANONICAL_CONVENTION: &str = "canonical";

/// Checks every structural invariant; an empty list means the molecule is valid.
pub fn validate(m: &Molecule) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut diag = |kind, location: String, message: String| {
        out.push(Diagnostic { kind, location, message })
    };

    if let Some(c) = m.meta.get("convention") {
        if c != CANONICAL_CONVENTION {
            diag(
                DiagnosticKind::Convention,
                "meta convention".into(),
                format!("unsupported gluing convention `{c}`"),
            );
        }
    }

    for (id, kind) in &m.atoms {
        if let AtomKind::Saddle(s) = kind {
            if s.valence == 0 {
                diag(DiagnosticKind::AtomShape, format!("atom {id}"), "saddle atom with no boundary tori".into());
            }
            if let Some(b) = AtomKind::builtin(&s.name) {
                if &b != kind {
                    diag(
                        DiagnosticKind::AtomShape,
                        format!("atom {id}"),
                        format!("built-in atom {} must have (genus, valence, stars) = {}", s.name, b),
                    );
                }
            }
        }
    }

    let mut usage: BTreeMap<(&str, u32), usize> = BTreeMap::new();
    for e in &m.edges {
        let loc = e.label();
        for end in [&e.from, &e.to] {
            match m.atoms.get(&end.atom) {
                None => diag(DiagnosticKind::UnknownAtom, format!("edge {loc}"), format!("unknown atom `{}`", end.atom)),
                Some(k) if end.slot == 0 || end.slot > k.valence() => diag(
                    DiagnosticKind::SlotRange,
                    format!("edge {loc}"),
                    format!("slot {} out of range 1..={} for atom {}", end.slot, k.valence(), end.atom),
                ),
                Some(_) => *usage.entry((end.atom.as_str(), end.slot)).or_default() += 1,
            }
        }
        if e.marks.eps != 1 && e.marks.eps != -1 {
            diag(DiagnosticKind::Eps, format!("edge {loc}"), format!("eps must be +1 or -1, got {}", e.marks.eps));
        }
        if let RMark::Finite { p, q } = e.marks.r {
            if q <= 0 || p < 0 || p >= q {
                diag(DiagnosticKind::RMark, format!("edge {loc}"), format!("r = {p}/{q} is not reduced into [0, 1)"));
            } else if p.gcd(&q) != 1 {
                diag(DiagnosticKind::RMark, format!("edge {loc}"), format!("r = {p}/{q} is not in lowest terms"));
            }
        }
    }
    for (id, kind) in &m.atoms {
        for slot in 1..=kind.valence() {
            match usage.get(&(id.as_str(), slot)).copied().unwrap_or(0) {
                1 => {}
                0 => diag(DiagnosticKind::SlotUsage, format!("{id}.{slot}"), "boundary slot is not glued".into()),
                k => diag(DiagnosticKind::SlotUsage, format!("{id}.{slot}"), format!("boundary slot used by {k} edges")),
            }
        }
    }

    let families: BTreeSet<BTreeSet<String>> = m.families().into_iter().collect();
    let mut seen = BTreeSet::new();
    for f in &m.families {
        let ids: Vec<&str> = f.atoms.iter().map(String::as_str).collect();
        let loc = format!("family [{}]", ids.join(","));
        if !families.contains(&f.atoms) {
            diag(
                DiagnosticKind::Family,
                loc.clone(),
                "n mark is not attached to a family (component of saddle atoms joined by r = inf edges)".into(),
            );
        }
        if !seen.insert(&f.atoms) {
            diag(DiagnosticKind::Family, loc, "family carries more than one n mark".into());
        }
    }
    out
}
