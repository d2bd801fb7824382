mod common;

use proptest::prelude::*;

use isoenergy::corpus::Corpus;
use isoenergy::molecule::{parse_unchecked, validate, DiagnosticKind, MoleculeError};
use isoenergy::parse_molecule;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn serialize_parses_back(seed in any::<u64>()) {
        let m = common::random_molecule(seed);
        let text = m.serialize();
        let back = parse_molecule(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(back.serialize(), text);
        prop_assert_eq!(back.hash(), m.hash());
    }

    #[test]
    fn dropping_an_edge_leaves_open_slots(seed in any::<u64>(), pick in any::<usize>()) {
        let mut m = common::random_molecule(seed);
        let i = pick % m.edges.len();
        m.edges.remove(i);
        let d = validate(&m);
        prop_assert!(d.iter().any(|d| d.kind == DiagnosticKind::SlotUsage), "{:?}", d);
    }

    #[test]
    fn families_partition_the_saddles(seed in any::<u64>()) {
        let m = common::random_molecule(seed);
        let fams = m.families();
        let mut seen: Vec<&String> = fams.iter().flatten().collect();
        seen.sort();
        let saddles: Vec<&String> = m.atoms.iter().filter(|(_, k)| k.is_saddle()).map(|(id, _)| id).collect();
        prop_assert_eq!(seen, saddles);
    }
}

#[test]
fn shipped_corpus_roundtrips() {
    for (id, (file, text)) in Corpus::shipped().sources {
        let m = parse_molecule(&text).unwrap();
        assert_eq!(m.serialize(), text, "{file} (id {id})");
    }
}

#[test]
fn syntax_and_validation_errors_are_distinct() {
    assert!(matches!(parse_molecule("atom a A; edge a.1"), Err(MoleculeError::Syntax { .. })));
    assert!(matches!(parse_molecule("atom a A;"), Err(MoleculeError::Validation(_))));
    let m = parse_unchecked("atom a A; atom b A; edge a.1 b.1 r=2/4 eps=+1;").unwrap();
    assert!(validate(&m).iter().any(|d| d.kind == DiagnosticKind::RMark));
}
