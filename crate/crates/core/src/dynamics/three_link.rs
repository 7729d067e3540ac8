//! Closed-form manipulator terms for the 3-link chain.

use nalgebra::{DMatrix, DVector};

use super::christoffel::christoffel_coriolis;
use super::{check_links, DynamicsError, LinkChainParams, ManipulatorTerms, State};

/// Manipulator terms of the 3-link chain.
///
/// `M` and `τ_g` are hand-derived from the Lagrangian of three point masses
/// on massless links. The Coriolis matrix is built from the Christoffel
/// symbols of `M` (see [`christoffel_coriolis`]) rather than hand-collected
/// velocity products; the Christoffel construction guarantees the
/// skew-symmetry of `Ṁ − 2C` that the energy balance relies on.
pub fn manipulator_terms_3link(
    params: &LinkChainParams,
    state: &State,
) -> Result<ManipulatorTerms, DynamicsError> {
    check_links(params, state, 3)?;
    let mass_matrix = mass_matrix_3link(params, state);
    let coriolis = christoffel_coriolis(state, &mass_matrix_partials_3link(params, state));
    let gravity_torques = gravity_torques_3link(params, state);
    Ok(ManipulatorTerms {
        mass_matrix,
        coriolis,
        gravity_torques,
        actuation: params.actuation_matrix(),
    })
}

pub(super) fn mass_matrix_3link(params: &LinkChainParams, state: &State) -> DMatrix<f64> {
    let (m1, m2, m3) = (params.masses()[0], params.masses()[1], params.masses()[2]);
    let (l1, l2, l3) = (params.lengths()[0], params.lengths()[1], params.lengths()[2]);
    let q = state.q();
    let c2 = q[1].cos();
    let c3 = q[2].cos();
    let c23 = (q[1] + q[2]).cos();

    let m11 = (m1 + m2 + m3) * l1 * l1
        + (m2 + m3) * l2 * l2
        + m3 * l3 * l3
        + 2.0 * (m2 + m3) * l1 * l2 * c2
        + 2.0 * m3 * l1 * l3 * c23
        + 2.0 * m3 * l2 * l3 * c3;
    let m12 = (m2 + m3) * l2 * l2
        + m3 * l3 * l3
        + (m2 + m3) * l1 * l2 * c2
        + m3 * l1 * l3 * c23
        + 2.0 * m3 * l2 * l3 * c3;
    let m13 = m3 * l3 * l3 + m3 * l1 * l3 * c23 + m3 * l2 * l3 * c3;
    let m22 = (m2 + m3) * l2 * l2 + m3 * l3 * l3 + 2.0 * m3 * l2 * l3 * c3;
    let m23 = m3 * l3 * l3 + m3 * l2 * l3 * c3;
    let m33 = m3 * l3 * l3;

    DMatrix::from_row_slice(3, 3, &[m11, m12, m13, m12, m22, m23, m13, m23, m33])
}

pub(super) fn gravity_torques_3link(params: &LinkChainParams, state: &State) -> DVector<f64> {
    let (m1, m2, m3) = (params.masses()[0], params.masses()[1], params.masses()[2]);
    let (l1, l2, l3) = (params.lengths()[0], params.lengths()[1], params.lengths()[2]);
    let g = params.gravity();
    let q = state.q();
    let s1 = q[0].sin();
    let s12 = (q[0] + q[1]).sin();
    let s123 = (q[0] + q[1] + q[2]).sin();

    DVector::from_row_slice(&[
        -g * ((m1 + m2 + m3) * l1 * s1 + (m2 + m3) * l2 * s12 + m3 * l3 * s123),
        -g * ((m2 + m3) * l2 * s12 + m3 * l3 * s123),
        -g * m3 * l3 * s123,
    ])
}

/// Analytic partials `∂M/∂q_k`; `M` depends on `q₂` and `q₃` only.
pub(super) fn mass_matrix_partials_3link(
    params: &LinkChainParams,
    state: &State,
) -> Vec<DMatrix<f64>> {
    let (m2, m3) = (params.masses()[1], params.masses()[2]);
    let (l1, l2, l3) = (params.lengths()[0], params.lengths()[1], params.lengths()[2]);
    let q = state.q();
    let s2 = q[1].sin();
    let s3 = q[2].sin();
    let s23 = (q[1] + q[2]).sin();

    let a = (m2 + m3) * l1 * l2 * s2;
    let b = m3 * l1 * l3 * s23;
    let c = m3 * l2 * l3 * s3;

    let d_q2 = DMatrix::from_row_slice(
        3,
        3,
        &[
            -2.0 * a - 2.0 * b,
            -a - b,
            -b,
            -a - b,
            0.0,
            0.0,
            -b,
            0.0,
            0.0,
        ],
    );
    let d_q3 = DMatrix::from_row_slice(
        3,
        3,
        &[
            -2.0 * b - 2.0 * c,
            -b - 2.0 * c,
            -b - c,
            -b - 2.0 * c,
            -2.0 * c,
            -c,
            -b - c,
            -c,
            0.0,
        ],
    );
    vec![DMatrix::zeros(3, 3), d_q2, d_q3]
}
