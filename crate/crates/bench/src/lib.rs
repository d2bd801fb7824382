//! Shared inputs for the criterion benchmarks.

use isoenergy::homology::IntMatrix;
use isoenergy::molecule::{AtomKind, EdgeMarks, Molecule};

/// Deterministic dense integer matrix with entries in `-9..=9`.
pub fn lcg_matrix(rows: usize, cols: usize, seed: u64) -> IntMatrix {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let data: Vec<Vec<i64>> = (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((state >> 33) % 19) as i64 - 9
                })
                .collect()
        })
        .collect();
    IntMatrix::from_rows(&data)
}

/// Chain of `len` B atoms joined by `r = 0` edges, each with one `A` leg
/// and the two ends closed by extra `A` atoms.
pub fn b_chain(len: usize) -> Molecule {
    let mut m = Molecule::new();
    for i in 0..len {
        m.add_atom(format!("b{i:03}"), AtomKind::b());
        m.add_atom(format!("leg{i:03}"), AtomKind::A);
        m.add_edge((&format!("leg{i:03}"), 1), (&format!("b{i:03}"), 3), EdgeMarks::infinite(1));
    }
    for i in 1..len {
        m.add_edge((&format!("b{:03}", i - 1), 2), (&format!("b{i:03}"), 1), EdgeMarks::finite(1, 2, 1));
    }
    m.add_atom("start", AtomKind::A).add_atom("end", AtomKind::A);
    m.add_edge(("start", 1), ("b000", 1), EdgeMarks::zero());
    m.add_edge((&format!("b{:03}", len - 1), 2), ("end", 1), EdgeMarks::zero());
    m.canonicalize();
    m
}
