//! Kinetic and potential energy of the chain models.
//!
//! The kinetic energies are coded from the velocity-product expansion of the
//! Lagrangian, not as `½ q̇ᵀ M q̇`; the two routes agreeing is one of the
//! consistency checks on the hand-coded inertia matrices.

use super::{check_links, DynamicsError, LinkChainParams, State};

/// Kinetic energy `T(q, q̇)` in joules.
pub fn kinetic_energy(params: &LinkChainParams, state: &State) -> Result<f64, DynamicsError> {
    match params.n_links() {
        2 => {
            check_links(params, state, 2)?;
            let (m1, m2) = (params.masses()[0], params.masses()[1]);
            let (l1, l2) = (params.lengths()[0], params.lengths()[1]);
            let qd = state.qdot();
            let c2 = state.q()[1].cos();
            let w12 = qd[0] + qd[1];
            Ok(0.5 * (m1 + m2) * l1 * l1 * qd[0] * qd[0]
                + 0.5 * m2 * l2 * l2 * w12 * w12
                + m2 * l1 * l2 * qd[0] * w12 * c2)
        }
        3 => {
            check_links(params, state, 3)?;
            let (m1, m2, m3) = (params.masses()[0], params.masses()[1], params.masses()[2]);
            let (l1, l2, l3) = (params.lengths()[0], params.lengths()[1], params.lengths()[2]);
            let q = state.q();
            let qd = state.qdot();
            let c2 = q[1].cos();
            let c3 = q[2].cos();
            let c23 = (q[1] + q[2]).cos();
            let w12 = qd[0] + qd[1];
            let w123 = qd[0] + qd[1] + qd[2];
            Ok(0.5 * (m1 + m2 + m3) * l1 * l1 * qd[0] * qd[0]
                + 0.5 * (m2 + m3) * l2 * l2 * w12 * w12
                + 0.5 * m3 * l3 * l3 * w123 * w123
                + (m2 + m3) * l1 * l2 * qd[0] * w12 * c2
                + m3 * l1 * l3 * qd[0] * w123 * c23
                + m3 * l2 * l3 * w12 * w123 * c3)
        }
        n => Err(DynamicsError::ModelMismatch { expected: 2, got: n }),
    }
}

/// Potential energy `U(q)` in joules, zero at the pivot height.
pub fn potential_energy(params: &LinkChainParams, state: &State) -> Result<f64, DynamicsError> {
    let g = params.gravity();
    match params.n_links() {
        2 => {
            check_links(params, state, 2)?;
            let (m1, m2) = (params.masses()[0], params.masses()[1]);
            let (l1, l2) = (params.lengths()[0], params.lengths()[1]);
            let q = state.q();
            Ok(-(m1 + m2) * g * l1 * q[0].cos() - m2 * g * l2 * (q[0] + q[1]).cos())
        }
        3 => {
            check_links(params, state, 3)?;
            let (m1, m2, m3) = (params.masses()[0], params.masses()[1], params.masses()[2]);
            let (l1, l2, l3) = (params.lengths()[0], params.lengths()[1], params.lengths()[2]);
            let q = state.q();
            Ok(-(m1 + m2 + m3) * l1 * g * q[0].cos()
                - (m2 + m3) * l2 * g * (q[0] + q[1]).cos()
                - m3 * l3 * g * (q[0] + q[1] + q[2]).cos())
        }
        n => Err(DynamicsError::ModelMismatch { expected: 2, got: n }),
    }
}

/// Total mechanical energy `T + U`.
pub fn total_energy(params: &LinkChainParams, state: &State) -> Result<f64, DynamicsError> {
    Ok(kinetic_energy(params, state)? + potential_energy(params, state)?)
}
