//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_integer::Integer;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use isoenergy::algebra::jacobi_defect;
use isoenergy::classify::{applicable, replay, MoveKind};
use isoenergy::corpus::Corpus;
use isoenergy::homology::{smith_normal_form, IntMatrix};
use isoenergy::molecule::{AtomKind, EdgeMarks};
use isoenergy::scanner::{component_count, default_radius, sample_isoenergy};
use isoenergy::system::{casimirs, first_integral, hamiltonian, sgrad, NumericSystem};
use isoenergy::{
    classify, first_homology, parse_molecule, poisson_bracket, AbelianGroup, ManifoldClass, Molecule, OrbitParams,
    Poly, Var,
};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn symbolic_suite() -> Check {
    let (f1, f2) = casimirs();
    let (h, k) = (hamiltonian(), first_integral());
    let coords: Vec<Poly> = Var::PHASE.iter().map(|v| Poly::var(*v)).collect();
    for (name, f) in [("f1", &f1), ("f2", &f2)] {
        for (v, z) in Var::PHASE.iter().zip(&coords) {
            let b = poisson_bracket(f, z);
            ensure(b.is_zero(), || format!("{{{name}, {}}} = {b}", v.name()))?;
        }
    }
    let hk = poisson_bracket(&h, &k);
    ensure(hk.is_zero(), || format!("{{H, K}} = {hk}"))?;
    let mut triples = 0;
    for i in 0..6 {
        for j in i..6 {
            for l in j..6 {
                let d = jacobi_defect(&coords[i], &coords[j], &coords[l]);
                ensure(d.is_zero(), || format!("Jacobi defect on ({i},{j},{l}) = {d}"))?;
                triples += 1;
            }
        }
    }
    Ok(format!("12 Casimir brackets, {{H,K}} = 0, {triples} Jacobi triples"))
}

fn lens_family() -> Check {
    let two_a = |marks: EdgeMarks| {
        let mut m = Molecule::new();
        m.add_atom("u", AtomKind::A).add_atom("v", AtomKind::A);
        m.add_edge(("u", 1), ("v", 1), marks);
        m
    };
    let mut cases = 0;
    for eps in [1, -1] {
        for q in 1..=12i64 {
            for p in (0..q).filter(|p| p.gcd(&q) == 1) {
                let h1 = first_homology(&two_a(EdgeMarks::finite(p, q, eps))).map_err(|e| e.to_string())?;
                ensure(h1 == AbelianGroup::cyclic(q as u64), || format!("r={p}/{q} eps={eps}: H1 = {h1}"))?;
                cases += 1;
            }
        }
        let h1 = first_homology(&two_a(EdgeMarks::infinite(eps))).map_err(|e| e.to_string())?;
        ensure(h1 == AbelianGroup::free(1), || format!("r=inf eps={eps}: H1 = {h1}"))?;
        let h1 = first_homology(&two_a(EdgeMarks::zero())).map_err(|e| e.to_string())?;
        ensure(h1.is_trivial(), || format!("r=0: H1 = {h1}"))?;
        cases += 2;
    }
    let rp3 = classify(&two_a(EdgeMarks::finite(1, 2, 1)));
    ensure(rp3.class() == Some(&ManifoldClass::rp3()), || format!("r=1/2 classifies as {:?}", rp3.outcome))?;
    Ok(format!("{cases} gluings, r=1/2 classifies as RP^3"))
}

fn union_h1(pieces: &[Molecule]) -> Result<AbelianGroup, String> {
    pieces.iter().try_fold(AbelianGroup::trivial(), |acc, p| {
        first_homology(p).map(|h| acc.direct_sum(&h)).map_err(|e| e.to_string())
    })
}

fn molecule_25() -> Check {
    let m = Corpus::shipped().molecules[&25].clone();
    let c = classify(&m);
    let want = ManifoldClass::sum_of_s1xs2(3);
    ensure(c.class() == Some(&want), || format!("classified as {:?}", c.outcome))?;
    let steps = &c.trace.steps;
    ensure(steps.len() <= 4, || format!("{} moves", steps.len()))?;
    let ops: Vec<MoveKind> = steps.iter().map(|s| s.op).collect();
    ensure(ops == [MoveKind::AbsorbA, MoveKind::FuseBB], || format!("move sequence {ops:?}"))?;
    let z3 = AbelianGroup::free(3);
    let mut pieces = m.components();
    ensure(union_h1(&pieces)? == z3, || "input H1 is not Z^3".into())?;
    for (i, s) in steps.iter().enumerate() {
        let out = s.op.apply(&pieces[s.piece], s.edge).map_err(|e| e.to_string())?;
        pieces.splice(s.piece..=s.piece, out);
        let h = union_h1(&pieces)?;
        ensure(h == z3, || format!("H1 = {h} after step {i} ({})", s.op.name()))?;
    }
    replay(&m, &c.trace).map_err(|e| e.to_string())?;
    Ok(format!("{} moves: {}; H1 = Z^3 throughout", steps.len(), ops.iter().map(MoveKind::name).collect::<Vec<_>>().join(" -> ")))
}

fn table_1() -> BTreeMap<u32, ManifoldClass> {
    let rows: [(&str, &[u32]); 7] = [
        ("S^3", &[1, 2, 3, 8, 9, 10, 11, 16, 17, 18, 21, 23]),
        ("2S^3", &[6, 7, 22]),
        ("S^1xS^2", &[5, 12, 13, 14, 15, 20, 29, 32]),
        ("2(S^1xS^2)", &[27, 31]),
        ("RP^3", &[4, 19, 24]),
        ("(S^1xS^2)#(S^1xS^2)", &[26, 28, 30]),
        ("(S^1xS^2)#(S^1xS^2)#(S^1xS^2)", &[25]),
    ];
    rows.iter()
        .flat_map(|(class, ids)| ids.iter().map(move |id| (*id, class.parse().expect("table class parses"))))
        .collect()
}

fn propagation() -> Check {
    let table = table_1();
    ensure(table.len() == 32, || "table must list 32 ids".into())?;
    let p = Corpus::shipped().propagate().map_err(|e| e.to_string())?;
    for (id, t) in &p.types {
        ensure(table[id] == t.class, || format!("id {id}: propagated {} but Table 1 says {}", t.class, table[id]))?;
    }
    let expected: BTreeSet<u32> = [5, 26, 30].into();
    ensure(p.unreached == expected, || format!("unreached ids {:?}", p.unreached))?;
    Ok(format!("{} ids typed consistently, unreached {:?}, no conflicts", p.types.len(), p.unreached))
}

fn property_suites() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for t in 0..500 {
        let (r, c) = (1 + t % 5, 1 + (t / 5) % 5);
        let rows = common::random_matrix(&mut rng, r, c, 6);
        let snf = smith_normal_form(&IntMatrix::from_rows(&rows));
        let want = common::invariant_factors_by_minors(&rows);
        ensure(snf.invariant_factors() == want, || {
            format!("matrix {rows:?}: SNF {:?}, minors {want:?}", snf.invariant_factors())
        })?;
    }

    let mut applied = 0;
    for seed in 0..200 {
        let m = common::random_molecule(seed);
        let h = first_homology(&m).map_err(|e| format!("seed {seed}: {e}"))?;
        for (kind, e) in applicable(&m) {
            let Ok(out) = kind.apply(&m, e) else { continue };
            applied += 1;
            let after = union_h1(&out)?;
            ensure(after == h, || format!("seed {seed}: {} on edge {e} changed H1 {h} -> {after}\n{m}", kind.name()))?;
        }
    }

    let corpus = Corpus::shipped();
    for (id, (file, text)) in &corpus.sources {
        let m = parse_molecule(text).map_err(|e| format!("{file}: {e}"))?;
        let back = parse_molecule(&m.serialize()).map_err(|e| format!("{file}: {e}"))?;
        ensure(back == m && m.serialize() == *text, || format!("id {id} ({file}) does not roundtrip"))?;
    }
    Ok(format!(
        "500 SNF matrices, 200 molecules ({applied} moves applied), {} corpus files roundtrip",
        corpus.sources.len()
    ))
}

fn numerical_suite() -> Check {
    let tol = 1e-10;
    let levels = [-1.0, 0.5, 2.0, 3.5];
    let mut summary = Vec::new();
    for h in levels {
        let p = OrbitParams::new(1.0, 2.0, 0.5, h);
        let a = sample_isoenergy(&p, 20_000, 1, tol).map_err(|e| e.to_string())?;
        let b = sample_isoenergy(&p, 20_000, 2, tol).map_err(|e| e.to_string())?;
        let big = sample_isoenergy(&p, 40_000, 1, tol).map_err(|e| e.to_string())?;
        for c in [&a, &b, &big] {
            ensure(c.max_residual() <= 1e-9, || format!("h={h}: residual {:e}", c.max_residual()))?;
        }
        let counts: Vec<usize> = [&a, &b, &big].iter().map(|c| component_count(c, default_radius(c))).collect();
        ensure(counts.iter().all(|&n| n == counts[0]), || format!("h={h}: component counts {counts:?}"))?;

        let field = sgrad(&hamiltonian());
        let sys = NumericSystem::shared();
        let mut drift = 0.0f64;
        for pt in a.points.iter().step_by(200) {
            let end = field.flow(pt, p.c1, 1e-3, 500);
            let (v0, v1) = (sys.values(pt, p.c1), sys.values(&end, p.c1));
            for i in 0..4 {
                drift = drift.max((v0[i] - v1[i]).abs());
            }
        }
        ensure(drift <= 1e-6, || format!("h={h}: drift {drift:e} along sgrad(H)"))?;
        summary.push(format!("h={h}: {} component(s), drift {drift:.1e}", counts[0]));
    }
    Ok(summary.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 6] = [
        ("symbolic integrability suite", symbolic_suite),
        ("lens family oracle", lens_family),
        ("molecule-25 pipeline", molecule_25),
        ("corpus propagation", propagation),
        ("property suites", property_suites),
        ("numerical suite", numerical_suite),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {} ({name}) [{secs:.2}s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}) [{secs:.2}s]: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
