//! Manipulator-equation terms for planar point-mass link chains.
//!
//! Joint angle `q[0]` is measured from the straight-down vertical; every
//! subsequent angle is relative to the previous link. With that convention
//! the potential energy is minimized at `q = 0` (hanging) and the upright
//! configuration is `q = (π, 0, …, 0)`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

mod christoffel;
mod energy;
mod ode;
mod three_link;
mod two_link;

pub use christoffel::{christoffel_coriolis, mass_matrix_partials, mass_matrix_partials_fd};
pub use energy::{kinetic_energy, potential_energy, total_energy};
pub use ode::{state_derivative, ChainOde, MassMatrixOde};
pub use three_link::manipulator_terms_3link;
pub use two_link::manipulator_terms_2link;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("model expects {expected} links, parameters describe {got}")]
    ModelMismatch { expected: usize, got: usize },
    #[error("invalid chain parameters: {0}")]
    InvalidParams(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("control vector has {got} entries, {expected} joints are actuated")]
    ControlMismatch { expected: usize, got: usize },
    #[error(transparent)]
    LinAlg(#[from] crate::linalg::LinAlgError),
}

/// Masses, lengths, gravity, and actuation pattern of an n-link chain.
///
/// Links are massless rods with a point mass at the far end of each link.
/// `actuated[i]` marks joint `i` as carrying a control torque; an acrobot
/// leaves the shoulder (joint 0) passive.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkChainParams {
    masses: Vec<f64>,
    lengths: Vec<f64>,
    gravity: f64,
    actuated: Vec<bool>,
}

impl LinkChainParams {
    pub fn new(
        masses: Vec<f64>,
        lengths: Vec<f64>,
        gravity: f64,
        actuated: Vec<bool>,
    ) -> Result<Self, DynamicsError> {
        let n = masses.len();
        if n == 0 {
            return Err(DynamicsError::InvalidParams("empty chain".into()));
        }
        if lengths.len() != n || actuated.len() != n {
            return Err(DynamicsError::InvalidParams(format!(
                "masses/lengths/actuated lengths disagree: {}/{}/{}",
                n,
                lengths.len(),
                actuated.len()
            )));
        }
        if masses.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(DynamicsError::InvalidParams(
                "all masses must be strictly positive and finite".into(),
            ));
        }
        if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(DynamicsError::InvalidParams(
                "all lengths must be strictly positive and finite".into(),
            ));
        }
        if !(gravity >= 0.0) || !gravity.is_finite() {
            return Err(DynamicsError::InvalidParams(
                "gravity must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            masses,
            lengths,
            gravity,
            actuated,
        })
    }

    /// Unit-mass, unit-length acrobot with only the shoulder unactuated.
    ///
    /// `n_links` must be 2 or 3; those are the models with closed-form terms.
    pub fn acrobot(n_links: usize) -> Result<Self, DynamicsError> {
        if n_links != 2 && n_links != 3 {
            return Err(DynamicsError::InvalidParams(format!(
                "acrobot models are 2- or 3-link, got {n_links}"
            )));
        }
        let mut actuated = vec![true; n_links];
        actuated[0] = false;
        Self::new(vec![1.0; n_links], vec![1.0; n_links], 9.81, actuated)
    }

    /// Replaces the actuation pattern, keeping an acrobot-style check: the
    /// shoulder must stay passive and at least one joint must be driven.
    pub fn with_acrobot_actuation(mut self, actuated: Vec<bool>) -> Result<Self, DynamicsError> {
        if actuated.len() != self.n_links() {
            return Err(DynamicsError::InvalidParams(
                "actuation pattern length must match link count".into(),
            ));
        }
        if actuated[0] {
            return Err(DynamicsError::InvalidParams(
                "acrobot shoulder (joint 0) must be unactuated".into(),
            ));
        }
        if !actuated.iter().any(|&a| a) {
            return Err(DynamicsError::InvalidParams(
                "at least one joint must be actuated".into(),
            ));
        }
        self.actuated = actuated;
        Ok(self)
    }

    pub fn n_links(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn actuated(&self) -> &[bool] {
        &self.actuated
    }

    /// Number of actuated joints (columns of the actuation map).
    pub fn num_actuated(&self) -> usize {
        self.actuated.iter().filter(|&&a| a).count()
    }

    /// The n×m actuation map `B`: one unit entry per actuated joint column.
    pub fn actuation_matrix(&self) -> DMatrix<f64> {
        let n = self.n_links();
        let m = self.num_actuated();
        let mut b = DMatrix::zeros(n, m);
        let mut col = 0;
        for (row, &on) in self.actuated.iter().enumerate() {
            if on {
                b[(row, col)] = 1.0;
                col += 1;
            }
        }
        b
    }
}

/// Joint angles and angular velocities of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    q: DVector<f64>,
    qdot: DVector<f64>,
}

impl State {
    pub fn new(q: DVector<f64>, qdot: DVector<f64>) -> Result<Self, DynamicsError> {
        if q.len() != qdot.len() {
            return Err(DynamicsError::InvalidState(format!(
                "q has {} entries, q̇ has {}",
                q.len(),
                qdot.len()
            )));
        }
        if q.iter().chain(qdot.iter()).any(|v| !v.is_finite()) {
            return Err(DynamicsError::InvalidState("non-finite entry".into()));
        }
        Ok(Self { q, qdot })
    }

    pub fn from_slices(q: &[f64], qdot: &[f64]) -> Result<Self, DynamicsError> {
        Self::new(DVector::from_row_slice(q), DVector::from_row_slice(qdot))
    }

    /// Splits a stacked state-space vector `x = (q, q̇)` of length `2 n`.
    pub fn from_stacked(x: &DVector<f64>) -> Result<Self, DynamicsError> {
        if x.len() % 2 != 0 {
            return Err(DynamicsError::InvalidState(format!(
                "stacked state length {} is odd",
                x.len()
            )));
        }
        let n = x.len() / 2;
        Self::new(x.rows(0, n).into_owned(), x.rows(n, n).into_owned())
    }

    /// Stacks into the state-space vector `x = (q, q̇)`.
    pub fn to_stacked(&self) -> DVector<f64> {
        let n = self.n_links();
        let mut x = DVector::zeros(2 * n);
        x.rows_mut(0, n).copy_from(&self.q);
        x.rows_mut(n, n).copy_from(&self.qdot);
        x
    }

    pub fn n_links(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn qdot(&self) -> &DVector<f64> {
        &self.qdot
    }
}

/// `M`, `C`, `τ_g`, and `B` evaluated at one state.
#[derive(Debug, Clone)]
pub struct ManipulatorTerms {
    /// Symmetric positive-definite inertia matrix `M(q)`.
    pub mass_matrix: DMatrix<f64>,
    /// Coriolis/centripetal matrix `C(q, q̇)`.
    pub coriolis: DMatrix<f64>,
    /// Gravity torque vector `τ_g(q)`.
    pub gravity_torques: DVector<f64>,
    /// Actuation map `B` (n×m).
    pub actuation: DMatrix<f64>,
}

/// Evaluates the manipulator terms for whichever closed-form model matches
/// `params.n_links()`.
pub fn manipulator_terms(
    params: &LinkChainParams,
    state: &State,
) -> Result<ManipulatorTerms, DynamicsError> {
    match params.n_links() {
        2 => manipulator_terms_2link(params, state),
        3 => manipulator_terms_3link(params, state),
        n => Err(DynamicsError::ModelMismatch { expected: 2, got: n }),
    }
}

pub(crate) fn check_links(
    params: &LinkChainParams,
    state: &State,
    expected: usize,
) -> Result<(), DynamicsError> {
    if params.n_links() != expected {
        return Err(DynamicsError::ModelMismatch {
            expected,
            got: params.n_links(),
        });
    }
    if state.n_links() != expected {
        return Err(DynamicsError::InvalidState(format!(
            "state has {} joints, model has {expected}",
            state.n_links()
        )));
    }
    Ok(())
}
