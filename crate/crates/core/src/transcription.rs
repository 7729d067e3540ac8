//! Direct collocation: transcribes the swing-up optimal control problem into
//! a boxed nonlinear program.
//!
//! States and controls are discretized on a uniform time grid and interleaved
//! into the decision vector `y = [x_1, u_1, …, x_N, u_N]`. The dynamics enter
//! as per-interval defect equalities and the objective is the trapezoidal
//! quadrature of the squared control effort.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::dynamics::{state_derivative, DynamicsError, LinkChainParams, State};
use crate::nlp::{central_difference_jacobian, NlpProblem};

#[derive(Debug, Error)]
pub enum TranscriptionError {
    #[error("invalid OCP specification: {0}")]
    InvalidSpec(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Defect scheme used on each interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CollocationScheme {
    /// `ζ_k = x_{k+1} − x_k − h f_k`
    Euler,
    /// `ζ_k = x_{k+1} − x_k − (h/2)(f_k + f_{k+1})`
    #[default]
    Trapezoid,
}

/// The continuous swing-up problem and its discretization parameters.
#[derive(Debug, Clone)]
pub struct OcpSpec {
    pub params: LinkChainParams,
    pub t_final: f64,
    pub n_knots: usize,
    pub x_init: DVector<f64>,
    pub x_final: DVector<f64>,
    pub u_min: DVector<f64>,
    pub u_max: DVector<f64>,
    pub x_min: DVector<f64>,
    pub x_max: DVector<f64>,
    pub scheme: CollocationScheme,
}

impl OcpSpec {
    /// Rest-to-rest swing-up with the default discretization: 3 s horizon,
    /// 25 knots, |u| ≤ 20 N·m, q ∈ [−2π, 2π], q̇ ∈ [−4π, 4π], hanging start,
    /// upright goal.
    pub fn swing_up(params: LinkChainParams) -> Result<Self, TranscriptionError> {
        let n = params.n_links();
        let m = params.num_actuated();
        let mut x_final = DVector::zeros(2 * n);
        x_final[0] = std::f64::consts::PI;
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut x_min = DVector::zeros(2 * n);
        let mut x_max = DVector::zeros(2 * n);
        for i in 0..n {
            x_min[i] = -two_pi;
            x_max[i] = two_pi;
            x_min[n + i] = -2.0 * two_pi;
            x_max[n + i] = 2.0 * two_pi;
        }
        let spec = Self {
            params,
            t_final: 3.0,
            n_knots: 25,
            x_init: DVector::zeros(2 * n),
            x_final,
            u_min: DVector::from_element(m, -20.0),
            u_max: DVector::from_element(m, 20.0),
            x_min,
            x_max,
            scheme: CollocationScheme::Trapezoid,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), TranscriptionError> {
        let n = self.params.n_links();
        let m = self.params.num_actuated();
        if self.n_knots < 3 {
            return Err(TranscriptionError::InvalidSpec(format!(
                "need at least 3 knots, got {}",
                self.n_knots
            )));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(TranscriptionError::InvalidSpec(format!(
                "t_final = {} must be positive",
                self.t_final
            )));
        }
        for (name, v, len) in [
            ("x_init", &self.x_init, 2 * n),
            ("x_final", &self.x_final, 2 * n),
            ("x_min", &self.x_min, 2 * n),
            ("x_max", &self.x_max, 2 * n),
            ("u_min", &self.u_min, m),
            ("u_max", &self.u_max, m),
        ] {
            if v.len() != len {
                return Err(TranscriptionError::InvalidSpec(format!(
                    "{name} has length {}, expected {len}",
                    v.len()
                )));
            }
            if v.iter().any(|x| x.is_nan()) {
                return Err(TranscriptionError::InvalidSpec(format!("{name} contains NaN")));
            }
        }
        if self.x_min.iter().zip(self.x_max.iter()).any(|(a, b)| a > b)
            || self.u_min.iter().zip(self.u_max.iter()).any(|(a, b)| a > b)
        {
            return Err(TranscriptionError::InvalidSpec("bounds are not ordered".into()));
        }
        for (name, x) in [("x_init", &self.x_init), ("x_final", &self.x_final)] {
            let inside = x
                .iter()
                .zip(self.x_min.iter().zip(self.x_max.iter()))
                .all(|(v, (lo, hi))| v >= lo && v <= hi);
            if !inside {
                return Err(TranscriptionError::InvalidSpec(format!(
                    "{name} lies outside the state bounds"
                )));
            }
        }
        Ok(())
    }

    /// Uniform interval length `h = t_final / (N − 1)`.
    pub fn interval(&self) -> f64 {
        self.t_final / (self.n_knots - 1) as f64
    }

    pub fn state_dim(&self) -> usize {
        2 * self.params.n_links()
    }

    pub fn control_dim(&self) -> usize {
        self.params.num_actuated()
    }

    /// Decision-vector length `N (2n + m)`.
    pub fn decision_dim(&self) -> usize {
        self.n_knots * (self.state_dim() + self.control_dim())
    }

    pub fn unpack(&self, y: &DVector<f64>) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>), TranscriptionError> {
        unpack(y, self.n_knots, self.state_dim(), self.control_dim())
    }

    /// Knot times of the uniform grid.
    pub fn knot_times(&self) -> Vec<f64> {
        let h = self.interval();
        (0..self.n_knots)
            .map(|k| {
                if k + 1 == self.n_knots {
                    self.t_final
                } else {
                    k as f64 * h
                }
            })
            .collect()
    }
}

/// Interleaves per-knot states and controls into `y = [x_1, u_1, …, x_N, u_N]`.
pub fn pack(
    states: &[DVector<f64>],
    controls: &[DVector<f64>],
) -> Result<DVector<f64>, TranscriptionError> {
    if states.len() != controls.len() || states.is_empty() {
        return Err(TranscriptionError::ShapeMismatch(format!(
            "{} states vs {} controls",
            states.len(),
            controls.len()
        )));
    }
    let nx = states[0].len();
    let m = controls[0].len();
    if states.iter().any(|x| x.len() != nx) || controls.iter().any(|u| u.len() != m) {
        return Err(TranscriptionError::ShapeMismatch(
            "inconsistent per-knot dimensions".into(),
        ));
    }
    let mut y = DVector::zeros(states.len() * (nx + m));
    for (k, (x, u)) in states.iter().zip(controls).enumerate() {
        let o = k * (nx + m);
        y.rows_mut(o, nx).copy_from(x);
        y.rows_mut(o + nx, m).copy_from(u);
    }
    Ok(y)
}

/// Splits `y` back into per-knot states and controls.
pub fn unpack(
    y: &DVector<f64>,
    n_knots: usize,
    state_dim: usize,
    control_dim: usize,
) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>), TranscriptionError> {
    let per = state_dim + control_dim;
    if y.len() != n_knots * per {
        return Err(TranscriptionError::ShapeMismatch(format!(
            "decision vector has length {}, expected {} knots × {per}",
            y.len(),
            n_knots
        )));
    }
    let mut states = Vec::with_capacity(n_knots);
    let mut controls = Vec::with_capacity(n_knots);
    for k in 0..n_knots {
        let o = k * per;
        states.push(y.rows(o, state_dim).into_owned());
        controls.push(y.rows(o + state_dim, control_dim).into_owned());
    }
    Ok((states, controls))
}

fn knot_derivative(
    spec: &OcpSpec,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<DVector<f64>, TranscriptionError> {
    let state = State::from_stacked(x)?;
    Ok(state_derivative(&spec.params, &state, u)?)
}

/// Stacked per-interval defects `ζ_1 … ζ_{N−1}` for the spec's scheme.
pub fn defects(spec: &OcpSpec, y: &DVector<f64>) -> Result<DVector<f64>, TranscriptionError> {
    let (states, controls) = spec.unpack(y)?;
    let nx = spec.state_dim();
    let h = spec.interval();
    let n = spec.n_knots;
    let mut out = DVector::zeros((n - 1) * nx);
    match spec.scheme {
        CollocationScheme::Euler => {
            for k in 0..n - 1 {
                let f_k = knot_derivative(spec, &states[k], &controls[k])?;
                let zeta = &states[k + 1] - &states[k] - h * f_k;
                out.rows_mut(k * nx, nx).copy_from(&zeta);
            }
        }
        CollocationScheme::Trapezoid => {
            let mut f_prev = knot_derivative(spec, &states[0], &controls[0])?;
            for k in 0..n - 1 {
                let f_next = knot_derivative(spec, &states[k + 1], &controls[k + 1])?;
                let zeta = &states[k + 1] - &states[k] - (0.5 * h) * (&f_prev + &f_next);
                out.rows_mut(k * nx, nx).copy_from(&zeta);
                f_prev = f_next;
            }
        }
    }
    Ok(out)
}

/// Trapezoidal quadrature of `u·u` over the horizon.
pub fn effort_cost(spec: &OcpSpec, y: &DVector<f64>) -> Result<f64, TranscriptionError> {
    let (_, controls) = spec.unpack(y)?;
    let h = spec.interval();
    let mut total = 0.0;
    for k in 0..spec.n_knots - 1 {
        total += 0.5 * h * (controls[k].dot(&controls[k]) + controls[k + 1].dot(&controls[k + 1]));
    }
    Ok(total)
}

/// Boundary residuals `(x_1 − x_init, x_N − x_final)`.
pub fn boundary_constraints(
    spec: &OcpSpec,
    y: &DVector<f64>,
) -> Result<DVector<f64>, TranscriptionError> {
    let (states, _) = spec.unpack(y)?;
    let nx = spec.state_dim();
    let mut out = DVector::zeros(2 * nx);
    out.rows_mut(0, nx).copy_from(&(&states[0] - &spec.x_init));
    out.rows_mut(nx, nx)
        .copy_from(&(states.last().unwrap() - &spec.x_final));
    Ok(out)
}

/// Dense central-difference Jacobian of a problem's constraints, step
/// `1e-6 (1 + |y_j|)` per column.
pub fn constraint_jacobian_fd(problem: &dyn NlpProblem, y: &DVector<f64>) -> DMatrix<f64> {
    central_difference_jacobian(problem.num_constraints(), &|p| problem.constraints(p), y)
}

/// Lifts a decision vector from one knot grid onto another by linear
/// interpolation in time (mesh refinement warm start).
pub fn interpolate_decision(
    coarse: &OcpSpec,
    y: &DVector<f64>,
    fine: &OcpSpec,
) -> Result<DVector<f64>, TranscriptionError> {
    if coarse.state_dim() != fine.state_dim() || coarse.control_dim() != fine.control_dim() {
        return Err(TranscriptionError::ShapeMismatch(
            "grids describe different models".into(),
        ));
    }
    let (states, controls) = coarse.unpack(y)?;
    let t_coarse = coarse.knot_times();
    let nx = fine.state_dim();
    let m = fine.control_dim();
    let per = nx + m;
    let mut out = DVector::zeros(fine.decision_dim());
    for (k, t) in fine.knot_times().iter().enumerate() {
        let scale = coarse.t_final / fine.t_final;
        let t = t * scale;
        let i = t_coarse
            .windows(2)
            .position(|w| t <= w[1])
            .unwrap_or(t_coarse.len() - 2);
        let alpha = ((t - t_coarse[i]) / (t_coarse[i + 1] - t_coarse[i])).clamp(0.0, 1.0);
        let x = &states[i] * (1.0 - alpha) + &states[i + 1] * alpha;
        let u = &controls[i] * (1.0 - alpha) + &controls[i + 1] * alpha;
        out.rows_mut(k * per, nx).copy_from(&x);
        out.rows_mut(k * per + nx, m).copy_from(&u);
    }
    Ok(out)
}

/// Assembles the NLP: defect rows then boundary rows (all equalities at
/// zero), per-knot box bounds, and a linear-interpolation initial guess with
/// zero controls. The first and last knot states are additionally pinned
/// through their variable bounds, so boundary values hold exactly at every
/// iterate.
pub fn build_nlp(spec: OcpSpec) -> Result<TranscribedOcp, TranscriptionError> {
    spec.validate()?;
    TranscribedOcp::new(spec)
}

/// The transcribed program; implements [`NlpProblem`].
#[derive(Debug, Clone)]
pub struct TranscribedOcp {
    spec: OcpSpec,
    y_lower: DVector<f64>,
    y_upper: DVector<f64>,
    c_lower: DVector<f64>,
    c_upper: DVector<f64>,
    y_guess: DVector<f64>,
}

impl TranscribedOcp {
    fn new(spec: OcpSpec) -> Result<Self, TranscriptionError> {
        let n = spec.n_knots;
        let nx = spec.state_dim();
        let m = spec.control_dim();
        let per = nx + m;
        let dim = spec.decision_dim();

        let mut y_lower = DVector::zeros(dim);
        let mut y_upper = DVector::zeros(dim);
        let mut y_guess = DVector::zeros(dim);
        for k in 0..n {
            let o = k * per;
            for i in 0..nx {
                y_lower[o + i] = spec.x_min[i];
                y_upper[o + i] = spec.x_max[i];
            }
            for j in 0..m {
                y_lower[o + nx + j] = spec.u_min[j];
                y_upper[o + nx + j] = spec.u_max[j];
            }
            let alpha = k as f64 / (n - 1) as f64;
            for i in 0..nx {
                y_guess[o + i] = (1.0 - alpha) * spec.x_init[i] + alpha * spec.x_final[i];
            }
        }
        // pin the boundary knots: the defect/boundary rows stay in the
        // constraint vector, but the variables cannot drift off the targets
        let last = (n - 1) * per;
        for i in 0..nx {
            y_lower[i] = spec.x_init[i];
            y_upper[i] = spec.x_init[i];
            y_lower[last + i] = spec.x_final[i];
            y_upper[last + i] = spec.x_final[i];
        }

        let n_constraints = (n - 1) * nx + 2 * nx;
        Ok(Self {
            spec,
            y_lower,
            y_upper,
            c_lower: DVector::zeros(n_constraints),
            c_upper: DVector::zeros(n_constraints),
            y_guess,
        })
    }

    pub fn spec(&self) -> &OcpSpec {
        &self.spec
    }

    /// Replaces the default linear-interpolation guess, e.g. with a coarse
    /// solution lifted onto a finer grid (see [`interpolate_decision`]). The
    /// guess is projected onto the variable bounds.
    pub fn set_initial_guess(&mut self, y: DVector<f64>) -> Result<(), TranscriptionError> {
        if y.len() != self.y_guess.len() {
            return Err(TranscriptionError::ShapeMismatch(format!(
                "guess has length {}, expected {}",
                y.len(),
                self.y_guess.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(TranscriptionError::ShapeMismatch("guess contains non-finite entries".into()));
        }
        self.y_guess = DVector::from_fn(y.len(), |i, _| y[i].clamp(self.y_lower[i], self.y_upper[i]));
        Ok(())
    }

    /// Maps a dynamics failure to NaN rows; the solver turns those into an
    /// evaluation error carrying the offending point.
    fn constraints_or_nan(&self, y: &DVector<f64>) -> DVector<f64> {
        let nc = self.num_constraints();
        let d = match defects(&self.spec, y) {
            Ok(d) => d,
            Err(_) => return DVector::from_element(nc, f64::NAN),
        };
        let b = match boundary_constraints(&self.spec, y) {
            Ok(b) => b,
            Err(_) => return DVector::from_element(nc, f64::NAN),
        };
        let mut c = DVector::zeros(nc);
        c.rows_mut(0, d.len()).copy_from(&d);
        c.rows_mut(d.len(), b.len()).copy_from(&b);
        c
    }

    /// Structured central-difference Jacobian.
    ///
    /// A variable of knot `k` only enters the defect rows of intervals `k−1`
    /// and `k` (and the boundary rows for the first/last knot), and it only
    /// enters them through `x_k` and `f(x_k, u_k)`. Differencing `f` once per
    /// column therefore reproduces the dense central-difference Jacobian
    /// exactly, at a fraction of the evaluations.
    fn structured_jacobian(&self, y: &DVector<f64>) -> Option<DMatrix<f64>> {
        let spec = &self.spec;
        let n = spec.n_knots;
        let nx = spec.state_dim();
        let m = spec.control_dim();
        let per = nx + m;
        let h = spec.interval();
        let nc = self.num_constraints();
        let boundary_start = (n - 1) * nx;

        let (states, controls) = spec.unpack(y).ok()?;
        let mut jac = DMatrix::zeros(nc, y.len());

        for k in 0..n {
            let offset = k * per;
            for jl in 0..per {
                let col = offset + jl;
                let step = 1e-6 * (1.0 + y[col].abs());
                let plus = y[col] + step;
                let minus = y[col] - step;
                let denom = plus - minus;

                let mut xp = states[k].clone();
                let mut xm = states[k].clone();
                let mut up = controls[k].clone();
                let mut um = controls[k].clone();
                if jl < nx {
                    xp[jl] = plus;
                    xm[jl] = minus;
                } else {
                    up[jl - nx] = plus;
                    um[jl - nx] = minus;
                }
                let fp = knot_derivative(spec, &xp, &up).ok()?;
                let fm = knot_derivative(spec, &xm, &um).ok()?;
                let df = (fp - fm) / denom;

                let weight = match spec.scheme {
                    CollocationScheme::Trapezoid => 0.5 * h,
                    CollocationScheme::Euler => h,
                };
                // interval k−1: x_k enters positively; f_k only under trapezoid
                if k > 0 {
                    let row = (k - 1) * nx;
                    match spec.scheme {
                        CollocationScheme::Trapezoid => {
                            for i in 0..nx {
                                jac[(row + i, col)] = -weight * df[i];
                            }
                        }
                        CollocationScheme::Euler => {}
                    }
                    if jl < nx {
                        jac[(row + jl, col)] += 1.0;
                    }
                }
                // interval k: x_k enters negatively, f_k always
                if k < n - 1 {
                    let row = k * nx;
                    for i in 0..nx {
                        jac[(row + i, col)] = -weight * df[i];
                    }
                    if jl < nx {
                        jac[(row + jl, col)] -= 1.0;
                    }
                }
                // boundary rows
                if k == 0 && jl < nx {
                    jac[(boundary_start + jl, col)] = 1.0;
                }
                if k == n - 1 && jl < nx {
                    jac[(boundary_start + nx + jl, col)] = 1.0;
                }
            }
        }
        Some(jac)
    }
}

impl NlpProblem for TranscribedOcp {
    fn dim(&self) -> usize {
        self.spec.decision_dim()
    }

    fn num_constraints(&self) -> usize {
        (self.spec.n_knots - 1) * self.spec.state_dim() + 2 * self.spec.state_dim()
    }

    fn cost(&self, y: &DVector<f64>) -> f64 {
        effort_cost(&self.spec, y).unwrap_or(f64::NAN)
    }

    fn cost_gradient(&self, y: &DVector<f64>) -> DVector<f64> {
        let spec = &self.spec;
        let nx = spec.state_dim();
        let m = spec.control_dim();
        let per = nx + m;
        let h = spec.interval();
        let mut grad = DVector::zeros(y.len());
        for k in 0..spec.n_knots {
            let w = if k == 0 || k + 1 == spec.n_knots { 0.5 } else { 1.0 };
            let o = k * per + nx;
            for j in 0..m {
                grad[o + j] = 2.0 * h * w * y[o + j];
            }
        }
        grad
    }

    fn constraints(&self, y: &DVector<f64>) -> DVector<f64> {
        self.constraints_or_nan(y)
    }

    fn constraint_jacobian(&self, y: &DVector<f64>) -> DMatrix<f64> {
        match self.structured_jacobian(y) {
            Some(jac) => jac,
            None => DMatrix::from_element(self.num_constraints(), y.len(), f64::NAN),
        }
    }

    fn constraint_lower(&self) -> &DVector<f64> {
        &self.c_lower
    }

    fn constraint_upper(&self) -> &DVector<f64> {
        &self.c_upper
    }

    fn variable_lower(&self) -> &DVector<f64> {
        &self.y_lower
    }

    fn variable_upper(&self) -> &DVector<f64> {
        &self.y_upper
    }

    fn initial_guess(&self) -> DVector<f64> {
        self.y_guess.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::LinkChainParams;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn spec_2link() -> OcpSpec {
        OcpSpec::swing_up(LinkChainParams::acrobot(2).unwrap()).unwrap()
    }

    #[test]
    fn pack_layout_is_interleaved() {
        let states = vec![
            DVector::from_row_slice(&[1.0, 2.0]),
            DVector::from_row_slice(&[3.0, 4.0]),
        ];
        let controls = vec![
            DVector::from_row_slice(&[5.0]),
            DVector::from_row_slice(&[6.0]),
        ];
        let y = pack(&states, &controls).unwrap();
        assert_eq!(y.as_slice(), &[1.0, 2.0, 5.0, 3.0, 4.0, 6.0]);
        let (s, u) = unpack(&y, 2, 2, 1).unwrap();
        assert_eq!(s, states);
        assert_eq!(u, controls);
    }

    #[test]
    fn decision_dimension_arithmetic() {
        let spec = spec_2link();
        assert_eq!(spec.decision_dim(), 25 * 5);
    }

    #[test]
    fn pack_rejects_mismatched_shapes() {
        let states = vec![DVector::zeros(4)];
        let controls = vec![DVector::zeros(1), DVector::zeros(1)];
        assert!(pack(&states, &controls).is_err());
        assert!(unpack(&DVector::zeros(11), 2, 4, 1).is_err());
    }

    #[test]
    fn equilibrium_trajectory_has_zero_defects_under_both_schemes() {
        for scheme in [CollocationScheme::Euler, CollocationScheme::Trapezoid] {
            let mut spec = spec_2link();
            spec.scheme = scheme;
            // constant upright rest at every knot, zero controls
            let mut upright = DVector::zeros(4);
            upright[0] = PI;
            let states = vec![upright.clone(); spec.n_knots];
            let controls = vec![DVector::zeros(1); spec.n_knots];
            let y = pack(&states, &controls).unwrap();
            let d = defects(&spec, &y).unwrap();
            assert!(d.amax() < 1e-12, "{scheme:?}: {:.3e}", d.amax());
        }
    }

    #[test]
    fn recurrence_generated_trajectory_has_zero_defects() {
        // Euler: generate x_{k+1} = x_k + h f_k directly. Trapezoid: solve
        // the implicit recurrence by fixed-point iteration to round-off.
        for scheme in [CollocationScheme::Euler, CollocationScheme::Trapezoid] {
            let mut spec = spec_2link();
            spec.scheme = scheme;
            spec.n_knots = 8;
            spec.t_final = 0.6;
            let h = spec.interval();
            let mut states = vec![DVector::from_row_slice(&[0.4, -0.2, 0.1, 0.3])];
            let controls: Vec<DVector<f64>> = (0..spec.n_knots)
                .map(|k| DVector::from_element(1, (k as f64 * 0.7).sin()))
                .collect();
            for k in 0..spec.n_knots - 1 {
                let f_k = knot_derivative(&spec, &states[k], &controls[k]).unwrap();
                let mut next = &states[k] + h * &f_k;
                if scheme == CollocationScheme::Trapezoid {
                    for _ in 0..100 {
                        let f_next = knot_derivative(&spec, &next, &controls[k + 1]).unwrap();
                        let candidate = &states[k] + 0.5 * h * (&f_k + &f_next);
                        if (&candidate - &next).amax() < 1e-16 {
                            next = candidate;
                            break;
                        }
                        next = candidate;
                    }
                }
                states.push(next);
            }
            let y = pack(&states, &controls).unwrap();
            let d = defects(&spec, &y).unwrap();
            assert!(d.amax() < 1e-12, "{scheme:?}: {:.3e}", d.amax());
        }
    }

    #[test]
    fn euler_and_trapezoid_differ_quadratically_on_smooth_trajectories() {
        // Sample a smooth synthetic trajectory on finer and finer grids; the
        // per-interval gap between the two defect definitions is O(h²), so a
        // log-log fit across the grids must have slope ≈ 2.
        let params = LinkChainParams::acrobot(2).unwrap();
        let mut gaps = Vec::new();
        let mut hs = Vec::new();
        for n_knots in [9usize, 17, 33, 65] {
            let mut spec = OcpSpec::swing_up(params.clone()).unwrap();
            spec.n_knots = n_knots;
            spec.t_final = 1.0;
            let h = spec.interval();
            let states: Vec<DVector<f64>> = (0..n_knots)
                .map(|k| {
                    let t = k as f64 * h;
                    DVector::from_row_slice(&[
                        (1.3 * t).sin(),
                        0.5 * (2.1 * t).cos(),
                        1.3 * (1.3 * t).cos(),
                        -1.05 * (2.1 * t).sin(),
                    ])
                })
                .collect();
            let controls: Vec<DVector<f64>> = (0..n_knots)
                .map(|k| DVector::from_element(1, (0.9 * k as f64 * h).cos()))
                .collect();
            let y = pack(&states, &controls).unwrap();
            spec.scheme = CollocationScheme::Euler;
            let de = defects(&spec, &y).unwrap();
            spec.scheme = CollocationScheme::Trapezoid;
            let dt = defects(&spec, &y).unwrap();
            gaps.push((de - dt).amax());
            hs.push(h);
        }
        let mut slopes = Vec::new();
        for i in 1..gaps.len() {
            slopes.push((gaps[i - 1] / gaps[i]).ln() / (hs[i - 1] / hs[i]).ln());
        }
        let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
        assert!(mean >= 1.9, "slope {mean:.3}, gaps {gaps:?}");
    }

    #[test]
    fn effort_cost_examples() {
        let mut spec = spec_2link();
        spec.n_knots = 5;
        spec.t_final = 1.0;
        let states = vec![DVector::zeros(4); 5];
        // u ≡ 0 → 0
        let zeros = vec![DVector::zeros(1); 5];
        let y = pack(&states, &zeros).unwrap();
        assert_eq!(effort_cost(&spec, &y).unwrap(), 0.0);
        // constant u = 1 over one second integrates to exactly 1
        let ones = vec![DVector::from_element(1, 1.0); 5];
        let y = pack(&states, &ones).unwrap();
        assert_eq!(effort_cost(&spec, &y).unwrap(), 1.0);
    }

    #[test]
    fn effort_cost_of_linear_ramp_matches_quadrature_error_bound() {
        // u(t) = t on [0,1]: trapezoid of t² gives 1/3 + h²/6.
        let mut spec = spec_2link();
        spec.n_knots = 101;
        spec.t_final = 1.0;
        let h = spec.interval();
        let states = vec![DVector::zeros(4); 101];
        let controls: Vec<DVector<f64>> =
            (0..101).map(|k| DVector::from_element(1, k as f64 * h)).collect();
        let y = pack(&states, &controls).unwrap();
        let expected = 1.0 / 3.0 + h * h / 6.0;
        assert_abs_diff_eq!(effort_cost(&spec, &y).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(effort_cost(&spec, &y).unwrap(), 0.33335, epsilon = 5e-5);
    }

    #[test]
    fn boundary_rows_vanish_on_matching_knots() {
        let spec = spec_2link();
        let nlp = build_nlp(spec.clone()).unwrap();
        let y = nlp.initial_guess();
        let b = boundary_constraints(&spec, &y).unwrap();
        assert_eq!(b.amax(), 0.0);
    }

    #[test]
    fn build_nlp_shapes_bounds_and_guess() {
        let nlp = build_nlp(spec_2link()).unwrap();
        assert_eq!(nlp.dim(), 125);
        assert_eq!(nlp.num_constraints(), 24 * 4 + 8);
        assert!(nlp.constraint_lower().amax() == 0.0 && nlp.constraint_upper().amax() == 0.0);

        let y = nlp.initial_guess();
        let (states, controls) = nlp.spec().unpack(&y).unwrap();
        assert_eq!(states[0], nlp.spec().x_init);
        assert_eq!(states[24], nlp.spec().x_final);
        let mid = (&nlp.spec().x_init + &nlp.spec().x_final) / 2.0;
        assert_abs_diff_eq!(states[12], mid, epsilon = 1e-15);
        assert!(controls.iter().all(|u| u.amax() == 0.0));
        // guess respects bounds
        for i in 0..y.len() {
            assert!(y[i] >= nlp.variable_lower()[i] && y[i] <= nlp.variable_upper()[i]);
        }
        // boundary knots pinned
        assert_eq!(nlp.variable_lower()[0], nlp.variable_upper()[0]);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = spec_2link();
        spec.t_final = 0.0;
        assert!(spec.validate().is_err());
        let mut spec = spec_2link();
        spec.n_knots = 2;
        assert!(spec.validate().is_err());
        let mut spec = spec_2link();
        spec.u_min[0] = 30.0;
        assert!(spec.validate().is_err());
        let mut spec = spec_2link();
        spec.x_final[0] = 100.0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn structured_jacobian_matches_dense_fd() {
        for scheme in [CollocationScheme::Euler, CollocationScheme::Trapezoid] {
            let mut spec = spec_2link();
            spec.scheme = scheme;
            spec.n_knots = 5;
            let nlp = build_nlp(spec).unwrap();
            let mut y = nlp.initial_guess();
            for (i, v) in y.iter_mut().enumerate() {
                *v += 0.01 * ((i * 37 % 11) as f64 - 5.0);
            }
            let dense = constraint_jacobian_fd(&nlp, &y);
            let structured = nlp.constraint_jacobian(&y);
            // identical difference quotients; the dense route only adds
            // subtraction noise on rows with constant offsets
            assert_abs_diff_eq!(structured, dense, epsilon = 1e-9);
        }
    }

    #[test]
    fn jacobian_is_block_banded() {
        let spec = spec_2link();
        let nlp = build_nlp(spec).unwrap();
        let y = nlp.initial_guess();
        let jac = nlp.constraint_jacobian(&y);
        let nx = 4;
        let per = 5;
        for block in 0..24usize {
            for r in block * nx..(block + 1) * nx {
                for c in 0..jac.ncols() {
                    let knot = c / per;
                    if knot != block && knot != block + 1 {
                        assert_eq!(jac[(r, c)], 0.0, "row {r} col {c} (knot {knot})");
                    }
                }
            }
        }
    }
}
