use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use isoenergy::algebra::{jacobi_defect, Monomial, NVARS};
use isoenergy::system::{casimirs, first_integral, hamiltonian};
use isoenergy::{poisson_bracket, Poly, Var};

/// Sparse polynomial with small integer-over-small-denominator coefficients
/// and exponents up to 2 in each of the eight variables.
fn poly(max_terms: usize) -> impl Strategy<Value = Poly> {
    let term = (-5i64..=5, 1i64..=3, prop::array::uniform8(0u32..=2));
    prop::collection::vec(term, 0..=max_terms).prop_map(|terms| {
        terms.into_iter().fold(Poly::zero(), |acc, (n, d, exps)| {
            let c = BigRational::new(BigInt::from(n), BigInt::from(d));
            &acc + &Poly::monomial(c, Monomial(exps))
        })
    })
}

/// Polynomials in the phase variables only, kept small so brackets stay cheap.
fn phase_poly() -> impl Strategy<Value = Poly> {
    let term = (-3i64..=3, prop::array::uniform6(0u32..=2));
    prop::collection::vec(term, 0..=3).prop_map(|terms| {
        terms.into_iter().fold(Poly::zero(), |acc, (n, exps)| {
            let mut all = [0u32; NVARS];
            for (v, e) in Var::PHASE.iter().zip(exps) {
                all[v.index()] = e;
            }
            &acc + &Poly::monomial(BigRational::from_integer(n.into()), Monomial(all))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(f in poly(4), g in poly(4), h in poly(4)) {
        prop_assert_eq!(&f + &g, &g + &f);
        prop_assert_eq!(&f * &g, &g * &f);
        prop_assert_eq!(&(&f + &g) + &h, &f + &(&g + &h));
        prop_assert_eq!(&(&f * &g) * &h, &f * &(&g * &h));
        prop_assert_eq!(&f * &(&g + &h), &(&f * &g) + &(&f * &h));
        prop_assert!((&f - &f).is_zero());
        prop_assert_eq!(&f * &Poly::one(), f.clone());
    }

    #[test]
    fn display_parses_back(f in poly(5)) {
        let back: Poly = f.to_string().parse().unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn bracket_is_antisymmetric_and_bilinear(f in phase_poly(), g in phase_poly(), h in phase_poly()) {
        prop_assert_eq!(poisson_bracket(&f, &g), -&poisson_bracket(&g, &f));
        prop_assert_eq!(
            poisson_bracket(&f, &(&g + &h)),
            &poisson_bracket(&f, &g) + &poisson_bracket(&f, &h)
        );
    }

    #[test]
    fn bracket_obeys_leibniz(f in phase_poly(), g in phase_poly(), h in phase_poly()) {
        let lhs = poisson_bracket(&f, &(&g * &h));
        let rhs = &(&poisson_bracket(&f, &g) * &h) + &(&g * &poisson_bracket(&f, &h));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn bracket_obeys_jacobi(f in phase_poly(), g in phase_poly(), h in phase_poly()) {
        prop_assert!(jacobi_defect(&f, &g, &h).is_zero());
    }

    #[test]
    fn casimirs_commute_with_everything(g in phase_poly()) {
        let (f1, f2) = casimirs();
        prop_assert!(poisson_bracket(&f1, &g).is_zero());
        prop_assert!(poisson_bracket(&f2, &g).is_zero());
    }
}

#[test]
fn hamiltonian_and_integral_commute() {
    assert!(poisson_bracket(&hamiltonian(), &first_integral()).is_zero());
}

#[test]
fn bracket_of_h_with_x3() {
    let want: Poly = "-2*J1*x2 + 2*J2*x1 - 2*kappa*c1*J2".parse().unwrap();
    assert_eq!(poisson_bracket(&hamiltonian(), &Poly::var(Var::X3)), want);
}
