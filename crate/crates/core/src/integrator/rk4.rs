//! Classical 4th-order Runge–Kutta step for mass-matrix ODEs.

use nalgebra::DVector;

use super::IntegratorError;
use crate::dynamics::MassMatrixOde;
use crate::linalg::lu_solve;

/// One RK4 step of `Mass(x, t) ẋ = rhs(x, u, t)` with the control held at `u`
/// across the step. Every stage derivative comes from a dense LU solve against
/// that stage's mass matrix.
pub fn rk4_step(
    ode: &dyn MassMatrixOde,
    x: &DVector<f64>,
    u: &DVector<f64>,
    t: f64,
    dt: f64,
) -> Result<DVector<f64>, IntegratorError> {
    debug_assert!(dt > 0.0);
    let stage = |xs: &DVector<f64>, ts: f64| -> Result<DVector<f64>, IntegratorError> {
        let mass = ode.mass_of(xs, ts);
        let rhs = ode.rhs_of(xs, u, ts);
        Ok(lu_solve(&mass, &rhs)?)
    };

    let half = 0.5 * dt;
    let k1 = stage(x, t)?;
    let k2 = stage(&(x + &k1 * half), t + half)?;
    let k3 = stage(&(x + &k2 * half), t + half)?;
    let k4 = stage(&(x + &k3 * dt), t + dt)?;
    Ok(x + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (dt / 6.0))
}
