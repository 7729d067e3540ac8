//! First-order mass-matrix form of the equations of motion.

use nalgebra::{DMatrix, DVector};

use super::{manipulator_terms, DynamicsError, LinkChainParams, State};
use crate::linalg::lu_solve;

/// An ODE in the implicit form `Mass(x, t) · ẋ = rhs(x, u, t)`.
///
/// Integrators solve a dense linear system per stage instead of forming the
/// inverse of the mass matrix.
pub trait MassMatrixOde {
    /// State-space dimension (length of `x`).
    fn dimension(&self) -> usize;
    /// Control dimension (length of `u`).
    fn control_dimension(&self) -> usize;
    fn mass_of(&self, x: &DVector<f64>, t: f64) -> DMatrix<f64>;
    fn rhs_of(&self, x: &DVector<f64>, u: &DVector<f64>, t: f64) -> DVector<f64>;
}

/// The chain dynamics as a mass-matrix ODE over `x = (q, q̇)`:
///
/// ```text
/// [ I  0    ] [ q̇ ]   [ q̇          ]
/// [ C  M(q) ] [ q̈ ] = [ τ_g(q) + B u ]
/// ```
#[derive(Debug, Clone)]
pub struct ChainOde {
    params: LinkChainParams,
}

impl ChainOde {
    pub fn new(params: LinkChainParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &LinkChainParams {
        &self.params
    }

    fn terms_at(&self, x: &DVector<f64>) -> Result<(State, super::ManipulatorTerms), DynamicsError> {
        let state = State::from_stacked(x)?;
        let terms = manipulator_terms(&self.params, &state)?;
        Ok((state, terms))
    }
}

impl MassMatrixOde for ChainOde {
    fn dimension(&self) -> usize {
        2 * self.params.n_links()
    }

    fn control_dimension(&self) -> usize {
        self.params.num_actuated()
    }

    fn mass_of(&self, x: &DVector<f64>, _t: f64) -> DMatrix<f64> {
        let n = self.params.n_links();
        let (_, terms) = self.terms_at(x).expect("state matches model");
        let mut mass = DMatrix::zeros(2 * n, 2 * n);
        mass.view_mut((0, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
        mass.view_mut((n, 0), (n, n)).copy_from(&terms.coriolis);
        mass.view_mut((n, n), (n, n)).copy_from(&terms.mass_matrix);
        mass
    }

    fn rhs_of(&self, x: &DVector<f64>, u: &DVector<f64>, _t: f64) -> DVector<f64> {
        let n = self.params.n_links();
        let (state, terms) = self.terms_at(x).expect("state matches model");
        let mut rhs = DVector::zeros(2 * n);
        rhs.rows_mut(0, n).copy_from(state.qdot());
        let torques = &terms.gravity_torques + &terms.actuation * u;
        rhs.rows_mut(n, n).copy_from(&torques);
        rhs
    }
}

/// Evaluates `ẋ = (q̇, q̈)` with `q̈ = M⁻¹(τ_g + B u − C q̇)`, solving the
/// n×n inertia system rather than inverting the full block form.
pub fn state_derivative(
    params: &LinkChainParams,
    state: &State,
    control: &DVector<f64>,
) -> Result<DVector<f64>, DynamicsError> {
    if control.len() != params.num_actuated() {
        return Err(DynamicsError::ControlMismatch {
            expected: params.num_actuated(),
            got: control.len(),
        });
    }
    let terms = manipulator_terms(params, state)?;
    let n = params.n_links();
    let rhs = &terms.gravity_torques + &terms.actuation * control - &terms.coriolis * state.qdot();
    let qddot = lu_solve(&terms.mass_matrix, &rhs)?;
    let mut xdot = DVector::zeros(2 * n);
    xdot.rows_mut(0, n).copy_from(state.qdot());
    xdot.rows_mut(n, n).copy_from(&qddot);
    Ok(xdot)
}
