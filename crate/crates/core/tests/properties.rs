mod common;

use proptest::prelude::*;

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_of_j_matches_finite_differences(s in setup()) {
        check_gradient(&s)?;
    }

    #[test]
    fn hessian_of_j_matches_finite_differences(s in setup()) {
        check_hessian(&s)?;
    }

    #[test]
    fn thomas_matches_dense_elimination((n, seed) in tridiagonal_system()) {
        check_thomas(n, &seed)?;
    }

    #[test]
    fn difference_operators_are_adjoint((cells, seed) in adjoint_fields()) {
        check_adjoint(cells, &seed)?;
    }

    #[test]
    fn constant_density_is_a_fixed_point((cells, c, m, case) in constant_data()) {
        check_fixed_point(cells, c, m, case)?;
    }
}
