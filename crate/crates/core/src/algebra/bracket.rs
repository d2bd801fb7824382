use std::sync::OnceLock;

use super::poly::{Poly, Var};

/// Brackets `{z_i, z_j}` of the six phase coordinates for the pencil
/// so(4) / e(3) / so(3,1), with kappa kept symbolic.
#[derive(Clone, Debug)]
pub struct StructureTable {
    entries: [[Poly; 6]; 6],
}

/// Levi-Civita symbol on {0,1,2}.
fn levi_civita(i: usize, j: usize, k: usize) -> i64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

const J: [Var; 3] = [Var::J1, Var::J2, Var::J3];
const X: [Var; 3] = [Var::X1, Var::X2, Var::X3];

impl StructureTable {
    pub fn new() -> Self {
        let kappa = Poly::var(Var::Kappa);
        let entries = std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                let (i, j) = (a % 3, b % 3);
                let mut out = Poly::zero();
                for k in 0..3 {
                    let e = levi_civita(i, j, k);
                    if e == 0 {
                        continue;
                    }
                    let term = match (a < 3, b < 3) {
                        (true, true) => Poly::var(J[k]),
                        (true, false) | (false, true) => Poly::var(X[k]),
                        (false, false) => &kappa * &Poly::var(J[k]),
                    };
                    out = out + term * Poly::int(e);
                }
                out
            })
        });
        StructureTable { entries }
    }

    /// `{z_i, z_j}` for phase-coordinate indices in the order J1, J2, J3, x1, x2, x3.
    pub fn get(&self, i: usize, j: usize) -> &Poly {
        &self.entries[i][j]
    }

    pub fn shared() -> &'static StructureTable {
        static TABLE: OnceLock<StructureTable> = OnceLock::new();
        TABLE.get_or_init(StructureTable::new)
    }
}

impl Default for StructureTable {
    fn default() -> Self {
        Self::new()
    }
}

/// `{f, g} = sum_{i,j} (df/dz_i)(dg/dz_j){z_i, z_j}` over the six phase coordinates.
pub fn poisson_bracket(f: &Poly, g: &Poly) -> Poly {
    let table = StructureTable::shared();
    let df: Vec<Poly> = Var::PHASE.iter().map(|&v| f.diff(v)).collect();
    let dg: Vec<Poly> = Var::PHASE.iter().map(|&v| g.diff(v)).collect();
    let mut out = Poly::zero();
    for i in 0..6 {
        if df[i].is_zero() {
            continue;
        }
        // sum_j dg_j {z_i, z_j} first keeps the products small
        let mut inner = Poly::zero();
        for j in 0..6 {
            let s = table.get(i, j);
            if s.is_zero() || dg[j].is_zero() {
                continue;
            }
            inner = inner + &dg[j] * s;
        }
        if !inner.is_zero() {
            out = out + &df[i] * &inner;
        }
    }
    out
}

/// `{f,{g,h}} + {g,{h,f}} + {h,{f,g}}`.
pub fn jacobi_defect(f: &Poly, g: &Poly, h: &Poly) -> Poly {
    let a = poisson_bracket(f, &poisson_bracket(g, h));
    let b = poisson_bracket(g, &poisson_bracket(h, f));
    let c = poisson_bracket(h, &poisson_bracket(f, g));
    a + b + c
}
