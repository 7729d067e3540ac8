//! Closed-form manipulator terms for the 2-link chain.

use nalgebra::{DMatrix, DVector};

use super::{check_links, DynamicsError, LinkChainParams, ManipulatorTerms, State};

/// Manipulator terms of the 2-link chain.
///
/// `M` and `τ_g` come straight from the Lagrangian of two point masses on
/// massless links. The Coriolis matrix uses the per-torque-equation grouping,
/// which collects every velocity product of torque equation `i` into row `i`:
///
/// ```text
/// C = [ 0                    -m₂ l₁ l₂ (2q̇₁+q̇₂) s₂ ]
///     [ m₂ l₁ l₂ q̇₁ s₂       0                     ]
/// ```
///
/// This grouping differs entrywise from the Christoffel construction (see
/// [`super::christoffel_coriolis`]) but produces the same product `C q̇`, so
/// the equations of motion agree; the Christoffel form is the one with
/// `Ṁ − 2C` skew-symmetric.
pub fn manipulator_terms_2link(
    params: &LinkChainParams,
    state: &State,
) -> Result<ManipulatorTerms, DynamicsError> {
    check_links(params, state, 2)?;
    let (m1, m2) = (params.masses()[0], params.masses()[1]);
    let (l1, l2) = (params.lengths()[0], params.lengths()[1]);
    let g = params.gravity();
    let q = state.q();
    let qd = state.qdot();

    let c2 = q[1].cos();
    let s2 = q[1].sin();
    let s1 = q[0].sin();
    let s12 = (q[0] + q[1]).sin();

    let m12 = m2 * l2 * l2 + m2 * l1 * l2 * c2;
    let mass_matrix = DMatrix::from_row_slice(
        2,
        2,
        &[
            (m1 + m2) * l1 * l1 + m2 * l2 * l2 + 2.0 * m2 * l1 * l2 * c2,
            m12,
            m12,
            m2 * l2 * l2,
        ],
    );

    let a = m2 * l1 * l2;
    let coriolis = DMatrix::from_row_slice(
        2,
        2,
        &[0.0, -a * (2.0 * qd[0] + qd[1]) * s2, a * qd[0] * s2, 0.0],
    );

    let gravity_torques =
        DVector::from_row_slice(&[-g * ((m1 + m2) * l1 * s1 + m2 * l2 * s12), -g * m2 * l2 * s12]);

    Ok(ManipulatorTerms {
        mass_matrix,
        coriolis,
        gravity_torques,
        actuation: params.actuation_matrix(),
    })
}

/// Analytic partials `∂M/∂q_k` for the 2-link chain; `M` depends on `q₂` only.
pub(super) fn mass_matrix_partials_2link(
    params: &LinkChainParams,
    state: &State,
) -> Vec<DMatrix<f64>> {
    let m2 = params.masses()[1];
    let (l1, l2) = (params.lengths()[0], params.lengths()[1]);
    let s2 = state.q()[1].sin();
    let a = m2 * l1 * l2;
    let d_q2 = DMatrix::from_row_slice(2, 2, &[-2.0 * a * s2, -a * s2, -a * s2, 0.0]);
    vec![DMatrix::zeros(2, 2), d_q2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn unit_acrobot() -> LinkChainParams {
        LinkChainParams::acrobot(2).unwrap()
    }

    #[test]
    fn mass_matrix_at_hanging_rest() {
        let s = State::from_slices(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
        let t = manipulator_terms_2link(&unit_acrobot(), &s).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[5.0, 2.0, 2.0, 1.0]);
        assert_abs_diff_eq!(t.mass_matrix, expected, epsilon = 1e-15);
        assert_eq!(t.coriolis, DMatrix::zeros(2, 2));
        assert_abs_diff_eq!(t.gravity_torques, DVector::zeros(2), epsilon = 1e-15);
    }

    #[test]
    fn mass_matrix_with_elbow_at_right_angle() {
        let s = State::from_slices(&[0.0, FRAC_PI_2], &[0.0, 0.0]).unwrap();
        let t = manipulator_terms_2link(&unit_acrobot(), &s).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 1.0]);
        assert_abs_diff_eq!(t.mass_matrix, expected, epsilon = 1e-15);
    }

    #[test]
    fn coriolis_vanishes_at_rest() {
        let s = State::from_slices(&[1.1, -0.7], &[0.0, 0.0]).unwrap();
        let t = manipulator_terms_2link(&unit_acrobot(), &s).unwrap();
        assert_eq!(t.coriolis, DMatrix::zeros(2, 2));
    }

    #[test]
    fn gravity_vanishes_upright() {
        let s = State::from_slices(&[PI, 0.0], &[0.0, 0.0]).unwrap();
        let t = manipulator_terms_2link(&unit_acrobot(), &s).unwrap();
        assert_abs_diff_eq!(t.gravity_torques, DVector::zeros(2), epsilon = 1e-12);
    }

    #[test]
    fn actuation_map_is_elbow_only() {
        let s = State::from_slices(&[0.3, 0.4], &[0.0, 0.0]).unwrap();
        let t = manipulator_terms_2link(&unit_acrobot(), &s).unwrap();
        assert_eq!(t.actuation, DMatrix::from_row_slice(2, 1, &[0.0, 1.0]));
    }

    #[test]
    fn rejects_three_link_parameters() {
        let p3 = LinkChainParams::acrobot(3).unwrap();
        let s3 = State::from_slices(&[0.0; 3], &[0.0; 3]).unwrap();
        assert!(matches!(
            manipulator_terms_2link(&p3, &s3),
            Err(DynamicsError::ModelMismatch { expected: 2, got: 3 })
        ));
    }
}
