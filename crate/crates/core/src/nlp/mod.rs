//! Nonlinear programming: problem interface and augmented-Lagrangian solver.
//!
//! A problem is a smooth scalar cost over a boxed decision vector, subject to
//! ranged vector constraints `c_L ≤ c(y) ≤ c_U` (equality rows have
//! `c_L = c_U`).

use nalgebra::{DMatrix, DVector};

mod solver;

pub use solver::{
    augmented_objective, project_to_box, solve, OuterRecord, SolveReport, SolveStatus,
    SolverError, SolverOptions,
};

/// A boxed, constrained nonlinear program.
///
/// All evaluation methods must be pure: the solver assumes identical inputs
/// produce identical outputs.
pub trait NlpProblem {
    /// Length of the decision vector.
    fn dim(&self) -> usize;
    /// Number of constraint rows.
    fn num_constraints(&self) -> usize;

    fn cost(&self, y: &DVector<f64>) -> f64;
    fn cost_gradient(&self, y: &DVector<f64>) -> DVector<f64>;
    fn constraints(&self, y: &DVector<f64>) -> DVector<f64>;

    /// Jacobian of the constraints; the default is central finite differences
    /// with step `1e-6 (1 + |y_j|)` per column.
    fn constraint_jacobian(&self, y: &DVector<f64>) -> DMatrix<f64> {
        central_difference_jacobian(self.num_constraints(), &|p| self.constraints(p), y)
    }

    fn constraint_lower(&self) -> &DVector<f64>;
    fn constraint_upper(&self) -> &DVector<f64>;
    fn variable_lower(&self) -> &DVector<f64>;
    fn variable_upper(&self) -> &DVector<f64>;
    fn initial_guess(&self) -> DVector<f64>;
}

/// Dense central-difference Jacobian of an arbitrary vector map.
pub fn central_difference_jacobian(
    rows: usize,
    f: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    y: &DVector<f64>,
) -> DMatrix<f64> {
    let dim = y.len();
    let mut jac = DMatrix::zeros(rows, dim);
    let mut yp = y.clone();
    let mut ym = y.clone();
    for j in 0..dim {
        let h = 1e-6 * (1.0 + y[j].abs());
        yp[j] = y[j] + h;
        ym[j] = y[j] - h;
        let denom = yp[j] - ym[j];
        let fp = f(&yp);
        let fm = f(&ym);
        jac.set_column(j, &((fp - fm) / denom));
        yp[j] = y[j];
        ym[j] = y[j];
    }
    jac
}
