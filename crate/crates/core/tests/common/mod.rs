//! Helpers shared by the integration tests: a random molecule generator and
//! an independent determinantal-divisor oracle for Smith normal forms.
#![allow(dead_code)]

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use isoenergy::molecule::{validate, AtomKind, EdgeMarks, Molecule};

/// Random edge marks: `r = 0`, `r = inf` or a reduced `p/q` with `q <= 5`.
pub fn random_marks(rng: &mut impl Rng, allow_infinite: bool) -> EdgeMarks {
    let eps = if rng.random_bool(0.5) { 1 } else { -1 };
    let roll = rng.random_range(0..10);
    if roll < 3 {
        EdgeMarks::new(EdgeMarks::zero().r, eps)
    } else if roll < 6 && allow_infinite {
        EdgeMarks::infinite(eps)
    } else {
        loop {
            let q = rng.random_range(2..=5i64);
            let p = rng.random_range(1..q);
            if p.gcd(&q) == 1 {
                return EdgeMarks::finite(p, q, eps);
            }
        }
    }
}

/// A valid connected molecule on 1 to 4 saddle atoms drawn from `{B, C2}`,
/// with every free boundary torus capped by an `A` atom.
///
/// Saddle atoms form a random tree, plus up to two extra saddle-saddle
/// edges with finite `r` (so no cycle of `r = inf` saddle edges arises).
/// Each family gets a random `n` in `-2..=2`.
pub fn random_molecule(seed: u64) -> Molecule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(1..=4usize);
    let mut m = Molecule::new();
    let mut free: Vec<Vec<u32>> = Vec::new();
    let ids: Vec<String> = (0..count).map(|i| format!("s{i}")).collect();
    for id in &ids {
        let kind = if rng.random_bool(0.6) { AtomKind::b() } else { AtomKind::c2() };
        free.push((1..=kind.valence()).collect());
        m.add_atom(id.clone(), kind);
    }
    let take = |free: &mut Vec<Vec<u32>>, i: usize, rng: &mut ChaCha8Rng| -> u32 {
        let k = rng.random_range(0..free[i].len());
        free[i].remove(k)
    };
    for i in 1..count {
        let j = rng.random_range(0..i);
        let (si, sj) = (take(&mut free, i, &mut rng), take(&mut free, j, &mut rng));
        let marks = random_marks(&mut rng, true);
        m.add_edge((&ids[j], sj), (&ids[i], si), marks);
    }
    for _ in 0..rng.random_range(0..=2) {
        let open: Vec<usize> = (0..count).filter(|&i| !free[i].is_empty()).collect();
        if open.len() < 2 {
            break;
        }
        let i = open[rng.random_range(0..open.len())];
        let j = open[rng.random_range(0..open.len())];
        if i == j {
            continue;
        }
        let (si, sj) = (take(&mut free, i, &mut rng), take(&mut free, j, &mut rng));
        let marks = random_marks(&mut rng, false);
        m.add_edge((&ids[i], si), (&ids[j], sj), marks);
    }
    let mut caps = 0;
    for (i, id) in ids.iter().enumerate() {
        for slot in free[i].clone() {
            let cap = format!("a{caps}");
            caps += 1;
            m.add_atom(cap.clone(), AtomKind::A);
            let marks = random_marks(&mut rng, true);
            if rng.random_bool(0.5) {
                m.add_edge((&cap, 1), (id, slot), marks);
            } else {
                m.add_edge((id, slot), (&cap, 1), marks);
            }
        }
    }
    let fams: Vec<_> = m.families().into_iter().map(|f| (f, rng.random_range(-2..=2i64))).collect();
    m.set_family_marks(fams.into_iter().filter(|(_, n)| *n != 0));
    m.canonicalize();
    assert!(validate(&m).is_empty(), "generator produced an invalid molecule: {:?}\n{m}", validate(&m));
    m
}

/// Random integer matrix with entries in `-bound..=bound`.
pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, bound: i64) -> Vec<Vec<i64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_range(-bound..=bound)).collect())
        .collect()
}

fn det(m: &[Vec<i128>]) -> i128 {
    match m.len() {
        0 => 1,
        1 => m[0][0],
        n => (0..n)
            .map(|c| {
                let minor: Vec<Vec<i128>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, v)| *v).collect())
                    .collect();
                let sign = if c % 2 == 0 { 1 } else { -1 };
                sign * m[0][c] * det(&minor)
            })
            .sum(),
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Invariant factors from determinantal divisors: `d_k` is the gcd of all
/// `k x k` minors and the `k`-th factor is `d_k / d_{k-1}`.
pub fn invariant_factors_by_minors(m: &[Vec<i64>]) -> Vec<i128> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut out = Vec::new();
    let mut prev = 1i128;
    for k in 1..=rows.min(cols) {
        let mut g = 0i128;
        for rs in subsets(rows, k) {
            for cs in subsets(cols, k) {
                let sub: Vec<Vec<i128>> =
                    rs.iter().map(|&r| cs.iter().map(|&c| m[r][c] as i128).collect()).collect();
                g = g.gcd(&det(&sub));
            }
        }
        if g == 0 {
            break;
        }
        out.push(g / prev);
        prev = g;
    }
    out
}
