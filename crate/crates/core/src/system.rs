//! The Kovalevskaya integrable case on the pencil so(4) / e(3) / so(3,1):
//! Casimirs, Hamiltonian and additional integral as exact polynomials, plus
//! float evaluators, Hamiltonian vector fields and Newton projection onto the
//! isoenergy surface `Q = {f1 = a, f2 = b, H = h}`.

use std::sync::OnceLock;

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{poisson_bracket, CompiledPoly, Poly, Var, NVARS};

pub type Vec6 = SVector<f64, 6>;
pub type Jacobian3 = SMatrix<f64, 3, 6>;
pub type Jacobian4 = SMatrix<f64, 4, 6>;

fn v(var: Var) -> Poly {
    Poly::var(var)
}

/// `(f1, f2)`: `f1 = |x|^2 + kappa |J|^2`, `f2 = <x, J>`.
pub fn casimirs() -> (Poly, Poly) {
    let x2 = v(Var::X1).pow(2) + v(Var::X2).pow(2) + v(Var::X3).pow(2);
    let j2 = v(Var::J1).pow(2) + v(Var::J2).pow(2) + v(Var::J3).pow(2);
    let f1 = x2 + v(Var::Kappa) * j2;
    let f2 = v(Var::X1) * v(Var::J1) + v(Var::X2) * v(Var::J2) + v(Var::X3) * v(Var::J3);
    (f1, f2)
}

/// `H = J1^2 + J2^2 + 2 J3^2 + 2 c1 x1`.
pub fn hamiltonian() -> Poly {
    v(Var::J1).pow(2) + v(Var::J2).pow(2) + Poly::int(2) * v(Var::J3).pow(2)
        + Poly::int(2) * v(Var::C1) * v(Var::X1)
}

/// `K = (J1^2 - J2^2 - 2 c1 x1 + kappa c1^2)^2 + (2 J1 J2 - 2 c1 x2)^2`.
pub fn first_integral() -> Poly {
    let c1 = v(Var::C1);
    let first = v(Var::J1).pow(2) - v(Var::J2).pow(2) - Poly::int(2) * &c1 * v(Var::X1)
        + v(Var::Kappa) * c1.pow(2);
    let second = Poly::int(2) * v(Var::J1) * v(Var::J2) - Poly::int(2) * &c1 * v(Var::X2);
    first.pow(2) + second.pow(2)
}

/// A point `(J, x)` of the dual Lie algebra together with the pencil parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub j: [f64; 3],
    pub x: [f64; 3],
    pub kappa: f64,
}

impl PhasePoint {
    pub fn new(j: [f64; 3], x: [f64; 3], kappa: f64) -> Self {
        PhasePoint { j, x, kappa }
    }

    pub fn from_vec6(z: &Vec6, kappa: f64) -> Self {
        PhasePoint {
            j: [z[0], z[1], z[2]],
            x: [z[3], z[4], z[5]],
            kappa,
        }
    }

    pub fn as_vec6(&self) -> Vec6 {
        Vec6::new(self.j[0], self.j[1], self.j[2], self.x[0], self.x[1], self.x[2])
    }

    /// Evaluation point for the ring variables, in `Var` order.
    pub fn coords(&self, c1: f64) -> [f64; NVARS] {
        [
            self.j[0], self.j[1], self.j[2], self.x[0], self.x[1], self.x[2], self.kappa, c1,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.j.iter().chain(self.x.iter()).all(|c| c.is_finite()) && self.kappa.is_finite()
    }
}

/// Values `(kappa, a, b, h, c1)` selecting `M = {f1 = a, f2 = b}` and `Q = M ∩ {H = h}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitParams {
    pub kappa: f64,
    pub a: f64,
    pub b: f64,
    pub h: f64,
    pub c1: f64,
}

impl OrbitParams {
    pub fn new(kappa: f64, a: f64, b: f64, h: f64) -> Self {
        OrbitParams { kappa, a, b, h, c1: 1.0 }
    }

    pub fn with_h(self, h: f64) -> Self {
        OrbitParams { h, ..self }
    }
}

/// Whether `{f1 = a, f2 = b}` is a regular 4-dimensional level.
///
/// For `kappa > 0` the level is `S^2(r+) x S^2(r-)` in the coordinates
/// `x ± sqrt(kappa) J`, with `r±^2 = a ± 2 sqrt(kappa) b`; it is regular iff
/// `a > 2 sqrt(kappa) |b|`. For `kappa = 0` it needs `a > 0`, for `kappa < 0`
/// only `(a, b) != (0, 0)`.
pub fn is_regular_orbit(p: &OrbitParams) -> bool {
    if p.kappa > 0.0 {
        p.a > 2.0 * p.kappa.sqrt() * p.b.abs()
    } else if p.kappa == 0.0 {
        p.a > 0.0
    } else {
        p.a != 0.0 || p.b != 0.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("Newton projection did not converge after {iterations} iterations (residual {residual:.3e}): {reason}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        reason: &'static str,
    },
}

/// Float evaluators for `f1, f2, H, K`, their gradients in `(J, x)` and Hessians.
///
/// Built once from the exact polynomials, so numeric and symbolic routes
/// share a single source of truth.
pub struct NumericSystem {
    funcs: [CompiledPoly; 4],
    grads: [[CompiledPoly; 6]; 4],
    hessians: [[[CompiledPoly; 6]; 6]; 4],
}

impl NumericSystem {
    pub fn new() -> Self {
        let (f1, f2) = casimirs();
        let polys = [f1, f2, hamiltonian(), first_integral()];
        let grad_polys: Vec<Vec<Poly>> = polys
            .iter()
            .map(|f| Var::PHASE.iter().map(|&v| f.diff(v)).collect())
            .collect();
        NumericSystem {
            funcs: std::array::from_fn(|i| polys[i].compile()),
            grads: std::array::from_fn(|i| std::array::from_fn(|a| grad_polys[i][a].compile())),
            hessians: std::array::from_fn(|i| {
                std::array::from_fn(|a| {
                    std::array::from_fn(|b| grad_polys[i][a].diff(Var::PHASE[b]).compile())
                })
            }),
        }
    }

    pub fn shared() -> &'static NumericSystem {
        static SYS: OnceLock<NumericSystem> = OnceLock::new();
        SYS.get_or_init(NumericSystem::new)
    }

    /// `[f1, f2, H, K]` at the point.
    pub fn values(&self, pt: &PhasePoint, c1: f64) -> [f64; 4] {
        let z = pt.coords(c1);
        std::array::from_fn(|i| self.funcs[i].eval(&z))
    }

    pub fn gradient(&self, which: usize, pt: &PhasePoint, c1: f64) -> Vec6 {
        let z = pt.coords(c1);
        Vec6::from_fn(|a, _| self.grads[which][a].eval(&z))
    }

    pub fn hessian(&self, which: usize, pt: &PhasePoint, c1: f64) -> SMatrix<f64, 6, 6> {
        let z = pt.coords(c1);
        SMatrix::<f64, 6, 6>::from_fn(|a, b| self.hessians[which][a][b].eval(&z))
    }

    /// Rows: gradients of `f1, f2, H`.
    pub fn constraint_jacobian(&self, pt: &PhasePoint, c1: f64) -> Jacobian3 {
        let z = pt.coords(c1);
        Jacobian3::from_fn(|i, a| self.grads[i][a].eval(&z))
    }

    /// Rows: gradients of `f1, f2, H, K`.
    pub fn momentum_jacobian(&self, pt: &PhasePoint, c1: f64) -> Jacobian4 {
        let z = pt.coords(c1);
        Jacobian4::from_fn(|i, a| self.grads[i][a].eval(&z))
    }
}

impl Default for NumericSystem {
    fn default() -> Self {
        Self::new()
    }
}

/// `(f1 - a, f2 - b, H - h)` at the point.
pub fn eval_constraints(pt: &PhasePoint, p: &OrbitParams) -> [f64; 3] {
    let vals = NumericSystem::shared().values(pt, p.c1);
    [vals[0] - p.a, vals[1] - p.b, vals[2] - p.h]
}

/// Hamiltonian vector field `z_i' = {z_i, f}`, compiled for float evaluation.
pub struct VectorField {
    components: [CompiledPoly; 6],
}

impl VectorField {
    pub fn eval(&self, pt: &PhasePoint, c1: f64) -> Vec6 {
        let z = pt.coords(c1);
        Vec6::from_fn(|i, _| self.components[i].eval(&z))
    }

    pub fn rk4_step(&self, pt: &PhasePoint, c1: f64, dt: f64) -> PhasePoint {
        let z0 = pt.as_vec6();
        let at = |z: Vec6| PhasePoint::from_vec6(&z, pt.kappa);
        let k1 = self.eval(pt, c1);
        let k2 = self.eval(&at(z0 + k1 * (dt / 2.0)), c1);
        let k3 = self.eval(&at(z0 + k2 * (dt / 2.0)), c1);
        let k4 = self.eval(&at(z0 + k3 * dt), c1);
        at(z0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
    }

    pub fn euler_step(&self, pt: &PhasePoint, c1: f64, dt: f64) -> PhasePoint {
        PhasePoint::from_vec6(&(pt.as_vec6() + self.eval(pt, c1) * dt), pt.kappa)
    }

    pub fn flow(&self, pt: &PhasePoint, c1: f64, dt: f64, steps: usize) -> PhasePoint {
        (0..steps).fold(*pt, |q, _| self.rk4_step(&q, c1, dt))
    }
}

/// Symplectic gradient of `f` with respect to the pencil bracket; component
/// `i` is `{f, z_i}`.
pub fn sgrad(f: &Poly) -> VectorField {
    VectorField {
        components: std::array::from_fn(|i| poisson_bracket(f, &Poly::var(Var::PHASE[i])).compile()),
    }
}

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 50;

/// Relative threshold on singular values below which the constraint Jacobian
/// counts as rank-deficient.
pub const RANK_TOL: f64 = 1e-9;

/// Singular values of a 3x6 Jacobian, descending.
pub fn singular_values3(g: &Jacobian3) -> Vector3<f64> {
    let gram: Matrix3<f64> = g * g.transpose();
    let eig = gram.symmetric_eigen();
    let mut s: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Vector3::new(s[0], s[1], s[2])
}

pub fn is_rank_deficient(g: &Jacobian3) -> bool {
    let s = singular_values3(g);
    s[0] == 0.0 || s[2] <= RANK_TOL * s[0].max(1.0)
}

/// Projects `pt` onto `Q` by Gauss-Newton with minimum-norm steps
/// `dz = -G^T (G G^T)^{-1} r`. Returns the point and the iteration count.
pub fn newton_project(
    pt: &PhasePoint,
    p: &OrbitParams,
    tol: f64,
    max_iter: usize,
) -> Result<(PhasePoint, usize), SystemError> {
    assert!(tol > 0.0, "projection tolerance must be positive");
    let sys = NumericSystem::shared();
    let mut cur = PhasePoint { kappa: p.kappa, ..*pt };
    for it in 0..=max_iter {
        let r = eval_constraints(&cur, p);
        let res = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !res.is_finite() || !cur.is_finite() {
            return Err(SystemError::NoConvergence {
                iterations: it,
                residual: res,
                reason: "iterate diverged",
            });
        }
        if res <= tol {
            return Ok((cur, it));
        }
        if it == max_iter {
            return Err(SystemError::NoConvergence {
                iterations: it,
                residual: res,
                reason: "iteration limit reached",
            });
        }
        let g = sys.constraint_jacobian(&cur, p.c1);
        if is_rank_deficient(&g) {
            return Err(SystemError::NoConvergence {
                iterations: it,
                residual: res,
                reason: "constraint Jacobian is rank-deficient",
            });
        }
        let gram = g * g.transpose();
        let Some(inv) = gram.try_inverse() else {
            return Err(SystemError::NoConvergence {
                iterations: it,
                residual: res,
                reason: "constraint Jacobian is rank-deficient",
            });
        };
        let step = -(g.transpose() * (inv * Vector3::from(r)));
        cur = PhasePoint::from_vec6(&(cur.as_vec6() + step), cur.kappa);
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::poisson_bracket;

    fn p(s: &str) -> Poly {
        s.parse().unwrap()
    }

    #[test]
    fn casimirs_commute_with_coordinates() {
        let (f1, f2) = casimirs();
        for v in Var::PHASE {
            assert!(poisson_bracket(&f1, &Poly::var(v)).is_zero(), "f1 vs {v}");
            assert!(poisson_bracket(&f2, &Poly::var(v)).is_zero(), "f2 vs {v}");
        }
    }

    #[test]
    fn hamiltonian_commutes_with_integral() {
        assert!(poisson_bracket(&hamiltonian(), &first_integral()).is_zero());
    }

    #[test]
    fn bracket_of_h_with_x3() {
        // hand expansion: 2J1{J1,x3} + 2J2{J2,x3} + 2c1{x1,x3}
        let expected = p("-2*J1*x2 + 2*J2*x1 - 2*kappa*c1*J2");
        assert_eq!(poisson_bracket(&hamiltonian(), &p("x3")), expected);
    }

    #[test]
    fn substitutions() {
        let (_, f2) = casimirs();
        let sys = NumericSystem::shared();
        let pt = PhasePoint::new([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], 1.0);
        assert_eq!(f2.eval_f64(&pt.coords(1.0)), 1.0);
        let pt = PhasePoint::new([0.0; 3], [1.0, 0.0, 0.0], 1.0);
        assert_eq!(sys.values(&pt, 1.0)[2], 2.0);
        let pt = PhasePoint::new([0.0; 3], [0.0; 3], 1.0);
        assert_eq!(sys.values(&pt, 1.0)[3], 1.0);
    }

    #[test]
    fn regularity_predicate() {
        assert!(is_regular_orbit(&OrbitParams::new(1.0, 2.0, 0.5, 0.0)));
        assert!(is_regular_orbit(&OrbitParams::new(1.0, 2.0, 0.99, 0.0)));
        // a = 2 sqrt(kappa) |b|: one of the two spheres collapses
        assert!(!is_regular_orbit(&OrbitParams::new(1.0, 2.0, 1.0, 0.0)));
        assert!(!is_regular_orbit(&OrbitParams::new(-1.0, 0.0, 0.0, 0.0)));
        assert!(is_regular_orbit(&OrbitParams::new(-1.0, 0.0, 0.3, 0.0)));
        assert!(!is_regular_orbit(&OrbitParams::new(0.0, -1.0, 0.0, 0.0)));
        assert!(is_regular_orbit(&OrbitParams::new(0.0, 1.0, 5.0, 0.0)));
    }

    #[test]
    fn casimir_gradients_degenerate_on_the_boundary_level() {
        // kappa = 1, a = 2, b = 1 forces x = J (the sphere of x - J collapses);
        // there grad f1 = 2 grad f2 everywhere on the level.
        let sys = NumericSystem::shared();
        for j in [[0.3, -0.5, 0.8], [1.0, 0.0, 0.0], [0.1, 0.7, -0.7]] {
            let n = (j[0] * j[0] + j[1] * j[1] + j[2] * j[2] as f64).sqrt();
            let j = j.map(|c| c / n);
            let pt = PhasePoint::new(j, j, 1.0);
            let vals = sys.values(&pt, 1.0);
            assert!((vals[0] - 2.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
            let d = sys.gradient(0, &pt, 1.0) - sys.gradient(1, &pt, 1.0) * 2.0;
            assert!(d.norm() < 1e-12);
        }
    }

    #[test]
    fn monotone_in_a() {
        for b in [-0.7, 0.0, 0.3] {
            let mut was = false;
            for k in 0..40 {
                let a = -1.0 + 0.1 * k as f64;
                let now = is_regular_orbit(&OrbitParams::new(1.0, a, b, 0.0));
                assert!(!was || now);
                was = now;
            }
        }
    }

    #[test]
    fn constraint_residuals() {
        let pt = PhasePoint::new([0.0; 3], [1.0, 0.0, 0.0], 1.0);
        let par = OrbitParams::new(1.0, 1.0, 0.0, 2.0);
        assert_eq!(eval_constraints(&pt, &par), [0.0, 0.0, 0.0]);
        assert_eq!(eval_constraints(&pt, &par.with_h(0.0)), [0.0, 0.0, 2.0]);
    }

    #[test]
    fn residuals_match_closed_forms() {
        let par = OrbitParams { kappa: -1.0, a: 0.4, b: -0.2, h: 1.5, c1: 1.0 };
        let pt = PhasePoint::new([0.3, -1.2, 0.45], [0.9, 0.1, -0.6], -1.0);
        let (j, x, k) = (pt.j, pt.x, pt.kappa);
        let f1 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + k * (j[0] * j[0] + j[1] * j[1] + j[2] * j[2]);
        let f2 = x[0] * j[0] + x[1] * j[1] + x[2] * j[2];
        let h = j[0] * j[0] + j[1] * j[1] + 2.0 * j[2] * j[2] + 2.0 * x[0];
        let r = eval_constraints(&pt, &par);
        assert!((r[0] - (f1 - 0.4)).abs() < 1e-14);
        assert!((r[1] - (f2 + 0.2)).abs() < 1e-14);
        assert!((r[2] - (h - 1.5)).abs() < 1e-14);
    }

    #[test]
    fn casimir_field_vanishes() {
        let (f1, f2) = casimirs();
        for f in [f1, f2] {
            let field = sgrad(&f);
            for pt in [
                PhasePoint::new([0.3, -1.2, 0.45], [0.9, 0.1, -0.6], 1.0),
                PhasePoint::new([2.0, 0.5, -0.1], [-0.3, 0.4, 1.6], -1.0),
            ] {
                assert!(field.eval(&pt, 1.0).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn hamiltonian_field_component() {
        let field = sgrad(&hamiltonian());
        let pt = PhasePoint::new([1.0, 1.0, 0.0], [0.0, 1.0, 0.0], 0.0);
        assert!((field.eval(&pt, 1.0)[5] - (-2.0)).abs() < 1e-14);
    }

    #[test]
    fn integral_conserved_along_flow() {
        let field = sgrad(&hamiltonian());
        let sys = NumericSystem::shared();
        let pt = PhasePoint::new([0.3, -0.7, 0.45], [0.9, 0.1, -0.6], 1.0);
        let k0 = sys.values(&pt, 1.0)[3];
        // dK/dt = grad K . sgrad H
        let rate = sys.gradient(3, &pt, 1.0).dot(&field.eval(&pt, 1.0));
        assert!(rate.abs() < 1e-12);
        let end = field.flow(&pt, 1.0, 1e-3, 100);
        assert!((sys.values(&end, 1.0)[3] - k0).abs() < 1e-8);
    }

    #[test]
    fn euler_drift_is_second_order_per_step() {
        let field = sgrad(&hamiltonian());
        let sys = NumericSystem::shared();
        let pt = PhasePoint::new([0.3, -0.7, 0.45], [0.9, 0.1, -0.6], 1.0);
        let v0 = sys.values(&pt, 1.0);
        let drift = |dt: f64| {
            let q = field.euler_step(&pt, 1.0, dt);
            let v = sys.values(&q, 1.0);
            (0..4).map(|i| (v[i] - v0[i]).abs()).fold(0.0, f64::max)
        };
        let ratio = drift(1e-3) / drift(5e-4);
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn newton_fixed_point_and_convergence() {
        let par = OrbitParams::new(1.0, 1.0, 0.0, 2.0);
        let on = PhasePoint::new([0.0; 3], [1.0, 0.0, 0.0], 1.0);
        let (q, iters) = newton_project(&on, &par, 1e-10, 50).unwrap();
        assert_eq!(iters, 0);
        assert_eq!(q, on);

        let par = OrbitParams::new(1.0, 2.0, 0.5, 1.0);
        let seed = PhasePoint::new([0.4, 0.3, -0.2], [1.1, -0.3, 0.6], 1.0);
        let (base, _) = newton_project(&seed, &par, 1e-13, 50).unwrap();
        let perturbed = PhasePoint::new(
            base.j.map(|c| c + 1e-3),
            [base.x[0] - 1e-3, base.x[1], base.x[2] + 1e-3],
            1.0,
        );
        let (q, iters) = newton_project(&perturbed, &par, 1e-12, 50).unwrap();
        assert!(iters > 0);
        assert!(eval_constraints(&q, &par).iter().all(|r| r.abs() <= 1e-12));
    }

    #[test]
    fn newton_fails_at_rank_deficient_seed() {
        let par = OrbitParams::new(1.0, 2.0, 0.5, 1.0);
        let origin = PhasePoint::new([0.0; 3], [0.0; 3], 1.0);
        assert!(matches!(
            newton_project(&origin, &par, 1e-10, 50),
            Err(SystemError::NoConvergence { .. })
        ));
    }
}
