use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::molecule::{EdgeMarks, RMark};

/// Integer 2x2 matrix `(alpha beta / gamma delta)` with
/// `(lambda', mu')^T = M (lambda, mu)^T`, taking the basis of the `from`
/// torus to the basis of the `to` torus of an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GluingMatrix {
    pub alpha: i64,
    pub beta: i64,
    pub gamma: i64,
    pub delta: i64,
}

impl GluingMatrix {
    pub const IDENTITY: GluingMatrix = GluingMatrix::new(1, 0, 0, 1);

    pub const fn new(alpha: i64, beta: i64, gamma: i64, delta: i64) -> Self {
        GluingMatrix { alpha, beta, gamma, delta }
    }

    /// Lower-triangular fiber twist `(1 0 / n 1)`.
    pub const fn twist(n: i64) -> Self {
        GluingMatrix::new(1, 0, n, 1)
    }

    pub fn det(&self) -> i64 {
        self.alpha * self.delta - self.beta * self.gamma
    }

    /// Inverse of a unimodular matrix.
    pub fn inverse(&self) -> GluingMatrix {
        let d = self.det();
        assert!(d == 1 || d == -1, "matrix {self} is not unimodular");
        GluingMatrix::new(d * self.delta, -d * self.beta, -d * self.gamma, d * self.alpha)
    }

    pub fn neg(&self) -> GluingMatrix {
        GluingMatrix::new(-self.alpha, -self.beta, -self.gamma, -self.delta)
    }

    /// The `(r, eps)` marks read off this matrix.
    pub fn marks(&self) -> EdgeMarks {
        if self.beta == 0 {
            EdgeMarks::infinite(if self.alpha > 0 { 1 } else { -1 })
        } else {
            let eps = if self.beta > 0 { 1 } else { -1 };
            EdgeMarks::new(RMark::finite(self.alpha, self.beta).expect("beta is nonzero"), eps)
        }
    }

    /// Factorises `self = T_a * canonical(marks) * T_b` with `T_k = twist(k)`.
    ///
    /// For `r = inf` the split between `a` and `b` is not unique; the whole
    /// twist is returned on the left (`b = 0`).
    pub fn decompose(&self) -> (EdgeMarks, i64, i64) {
        let marks = self.marks();
        if self.beta == 0 {
            let e = self.alpha.signum();
            return (marks, self.gamma * e, 0);
        }
        let s = self.beta.signum();
        let (alpha, q, delta) = (s * self.alpha, s * self.beta, s * self.delta);
        let p = alpha.rem_euclid(q);
        // right twist brings the first row to (p, q); the second row is then fixed up to a left twist
        let b = (alpha - p) / q;
        let d0 = canonical(EdgeMarks::new(marks.r, 1)).delta;
        debug_assert_eq!((delta - d0) % q, 0);
        let a = (delta - d0) / q;
        (marks, a, b)
    }
}

impl Mul for GluingMatrix {
    type Output = GluingMatrix;
    fn mul(self, o: GluingMatrix) -> GluingMatrix {
        GluingMatrix::new(
            self.alpha * o.alpha + self.beta * o.gamma,
            self.alpha * o.beta + self.beta * o.delta,
            self.gamma * o.alpha + self.delta * o.gamma,
            self.gamma * o.beta + self.delta * o.delta,
        )
    }
}

impl fmt::Display for GluingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {} / {} {})", self.alpha, self.beta, self.gamma, self.delta)
    }
}

fn mod_inverse(a: i64, m: i64) -> i64 {
    let (mut r0, mut r1) = (a.rem_euclid(m), m);
    let (mut s0, mut s1) = (1i64, 0i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    debug_assert_eq!(r0, 1, "{a} is not invertible mod {m}");
    s0.rem_euclid(m)
}

/// Canonical matrix of the marks without any family twist.
///
/// Finite `r = p/q`: `(p q / gamma delta)` with `delta` in `(-q, 0]`,
/// `p * delta = -1 (mod q)` and `gamma = (p * delta + 1) / q`; `eps = -1`
/// negates the matrix. `r = inf`: `(eps 0 / 0 -eps)`.
pub fn canonical(marks: EdgeMarks) -> GluingMatrix {
    let e = if marks.eps < 0 { -1 } else { 1 };
    match marks.r {
        RMark::Infinite => GluingMatrix::new(e, 0, 0, -e),
        RMark::Finite { p, q } => {
            let delta = if q == 1 {
                0
            } else {
                let r = (-mod_inverse(p, q)).rem_euclid(q);
                if r == 0 {
                    0
                } else {
                    r - q
                }
            };
            let gamma = (p * delta + 1) / q;
            let m = GluingMatrix::new(p, q, gamma, delta);
            if e < 0 {
                m.neg()
            } else {
                m
            }
        }
    }
}

/// Gluing matrix of an edge: the canonical matrix with the family twist
/// added to the second row, `T_twist * canonical(marks)`.
pub fn edge_matrix(marks: EdgeMarks, twist: i64) -> GluingMatrix {
    GluingMatrix::twist(twist) * canonical(marks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_examples() {
        assert_eq!(edge_matrix(EdgeMarks::zero(), 0), GluingMatrix::new(0, 1, 1, 0));
        assert_eq!(edge_matrix(EdgeMarks::infinite(1), 5), GluingMatrix::new(1, 0, 5, -1));
        assert_eq!(edge_matrix(EdgeMarks::finite(1, 2, 1), 0), GluingMatrix::new(1, 2, 0, -1));
    }

    #[test]
    fn canonical_invariants() {
        for q in 1..=12 {
            for p in 0..q {
                if num_integer::gcd(p, q) != 1 {
                    continue;
                }
                for eps in [1, -1] {
                    let marks = EdgeMarks::finite(p, q, eps);
                    let m = canonical(marks);
                    assert_eq!(m.det(), -1, "{m}");
                    assert_eq!(m.marks(), marks);
                    assert!(-q < eps as i64 * m.delta && eps as i64 * m.delta <= 0);
                    assert_eq!(m.decompose(), (marks, 0, 0));
                }
            }
        }
        for eps in [1, -1] {
            let m = canonical(EdgeMarks::infinite(eps));
            assert_eq!(m.det(), -1);
            assert_eq!(m.marks(), EdgeMarks::infinite(eps));
        }
    }

    #[test]
    fn decompose_recovers_twists() {
        for (p, q) in [(0, 1), (1, 2), (1, 3), (2, 3), (3, 7), (5, 12)] {
            for eps in [1, -1] {
                for a in -3..=3 {
                    for b in -3..=3 {
                        let marks = EdgeMarks::finite(p, q, eps);
                        let k = GluingMatrix::twist(a) * canonical(marks) * GluingMatrix::twist(b);
                        assert_eq!(k.decompose(), (marks, a, b), "{k}");
                    }
                }
            }
        }
        let k = GluingMatrix::new(-1, 0, 4, 1);
        let (marks, a, b) = k.decompose();
        assert_eq!(GluingMatrix::twist(a) * canonical(marks) * GluingMatrix::twist(b), k);
    }

    #[test]
    fn inverse_roundtrip() {
        let m = GluingMatrix::new(2, 3, -1, -2);
        assert_eq!(m * m.inverse(), GluingMatrix::IDENTITY);
        assert_eq!(m.inverse() * m, GluingMatrix::IDENTITY);
    }
}
