//! Fixed-step integration of mass-matrix ODEs.

use nalgebra::DVector;
use thiserror::Error;

use crate::dynamics::{ChainOde, DynamicsError, LinkChainParams, MassMatrixOde, State};
use crate::linalg::LinAlgError;

mod rk4;

pub use rk4::rk4_step;

/// Any state component beyond this magnitude aborts a simulation.
const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error("invalid rollout configuration: {0}")]
    InvalidConfig(String),
    #[error("state diverged at t = {t} (component magnitude exceeded 1e6)")]
    Diverged { t: f64 },
    #[error("reference trajectory carries no controls")]
    MissingControls,
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

/// How per-knot controls relate to the time grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlSampling {
    /// One control per time sample; interpolate linearly between knots.
    AtKnots,
    /// One control per interval (one fewer than times); piecewise constant.
    OverIntervals,
}

/// A time-sampled trajectory: states at every grid point, optionally with
/// controls.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<State>,
    controls: Option<Vec<DVector<f64>>>,
    sampling: ControlSampling,
}

impl Trajectory {
    pub fn new(
        times: Vec<f64>,
        states: Vec<State>,
        controls: Option<Vec<DVector<f64>>>,
        sampling: ControlSampling,
    ) -> Result<Self, IntegratorError> {
        if times.len() < 2 {
            return Err(IntegratorError::InvalidTrajectory(
                "need at least two samples".into(),
            ));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(IntegratorError::InvalidTrajectory(
                "times must be strictly increasing".into(),
            ));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(IntegratorError::InvalidTrajectory("non-finite time".into()));
        }
        if states.len() != times.len() {
            return Err(IntegratorError::InvalidTrajectory(format!(
                "{} states for {} times",
                states.len(),
                times.len()
            )));
        }
        if let Some(u) = &controls {
            let expected = match sampling {
                ControlSampling::AtKnots => times.len(),
                ControlSampling::OverIntervals => times.len() - 1,
            };
            if u.len() != expected {
                return Err(IntegratorError::InvalidTrajectory(format!(
                    "{} controls for {} times with {sampling:?} sampling",
                    u.len(),
                    times.len()
                )));
            }
            if u.iter().flat_map(|v| v.iter()).any(|x| !x.is_finite()) {
                return Err(IntegratorError::InvalidTrajectory(
                    "non-finite control entry".into(),
                ));
            }
        }
        Ok(Self {
            times,
            states,
            controls,
            sampling,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn controls(&self) -> Option<&[DVector<f64>]> {
        self.controls.as_deref()
    }

    pub fn sampling(&self) -> ControlSampling {
        self.sampling
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &State {
        self.states.last().expect("trajectory is never empty")
    }

    /// Control at time `t`: first-order hold for knot sampling, zero-order
    /// hold for interval sampling; clamped to the first/last value outside
    /// the grid.
    pub fn control_at(&self, t: f64) -> Result<DVector<f64>, IntegratorError> {
        let u = self.controls.as_ref().ok_or(IntegratorError::MissingControls)?;
        if t <= self.times[0] {
            return Ok(u[0].clone());
        }
        if t >= *self.times.last().unwrap() {
            return Ok(u.last().unwrap().clone());
        }
        // interval index with times[i] <= t < times[i+1]
        let i = match self.times.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
            Ok(exact) => exact.min(self.times.len() - 2),
            Err(insertion) => insertion - 1,
        };
        match self.sampling {
            ControlSampling::OverIntervals => Ok(u[i].clone()),
            ControlSampling::AtKnots => {
                let span = self.times[i + 1] - self.times[i];
                let alpha = (t - self.times[i]) / span;
                Ok(&u[i] * (1.0 - alpha) + &u[i + 1] * alpha)
            }
        }
    }
}

/// Time span, fixed step, and control source of a rollout.
#[derive(Debug, Clone, Copy)]
pub struct RolloutConfig {
    pub t_span: (f64, f64),
    pub dt: f64,
}

impl RolloutConfig {
    pub fn new(t_span: (f64, f64), dt: f64) -> Result<Self, IntegratorError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(IntegratorError::InvalidConfig(format!("dt = {dt} must be > 0")));
        }
        if !(t_span.1 > t_span.0) || !t_span.0.is_finite() || !t_span.1.is_finite() {
            return Err(IntegratorError::InvalidConfig(format!(
                "time span ({}, {}) must be increasing and finite",
                t_span.0, t_span.1
            )));
        }
        Ok(Self { t_span, dt })
    }
}

/// Where the control input of a rollout comes from.
pub enum ControlSource<'a> {
    /// Passive system: `u ≡ 0`.
    Zero,
    /// Interpolate the knot controls of a reference trajectory.
    Interpolated(&'a Trajectory),
    /// Arbitrary open-loop control law `u(t)`.
    Callback(&'a dyn Fn(f64) -> DVector<f64>),
}

/// Integrates the passive chain (`u ≡ 0`).
pub fn simulate(
    params: &LinkChainParams,
    initial: &State,
    cfg: &RolloutConfig,
) -> Result<Trajectory, IntegratorError> {
    simulate_with(params, initial, cfg, &ControlSource::Zero)
}

/// Integrates the chain with the given control source, recording every step.
///
/// Sample `k` sits at exactly `t_start + k·dt`; a shortened final step lands
/// exactly on `t_end`.
pub fn simulate_with(
    params: &LinkChainParams,
    initial: &State,
    cfg: &RolloutConfig,
    source: &ControlSource,
) -> Result<Trajectory, IntegratorError> {
    if initial.n_links() != params.n_links() {
        return Err(DynamicsError::InvalidState(format!(
            "initial state has {} joints, model has {}",
            initial.n_links(),
            params.n_links()
        ))
        .into());
    }
    if let ControlSource::Interpolated(reference) = source {
        if reference.controls.is_none() {
            return Err(IntegratorError::MissingControls);
        }
    }

    let ode = ChainOde::new(params.clone());
    let m = ode.control_dimension();
    let (t0, t1) = cfg.t_span;
    let control_at = |t: f64| -> Result<DVector<f64>, IntegratorError> {
        match source {
            ControlSource::Zero => Ok(DVector::zeros(m)),
            ControlSource::Interpolated(reference) => reference.control_at(t),
            ControlSource::Callback(f) => Ok(f(t)),
        }
    };

    let mut x = initial.to_stacked();
    let mut times = vec![t0];
    let mut states = vec![initial.clone()];
    let mut controls = vec![control_at(t0)?];

    let mut k: usize = 0;
    loop {
        let t = t0 + (k as f64) * cfg.dt;
        if t >= t1 {
            break;
        }
        // land the final sample exactly on t_end
        let t_next = t0 + ((k + 1) as f64) * cfg.dt;
        let (step, t_next) = if t_next >= t1 { (t1 - t, t1) } else { (cfg.dt, t_next) };

        let u = control_at(t)?;
        x = rk4_step(&ode, &x, &u, t, step).map_err(|e| match e {
            IntegratorError::LinAlg(l) => IntegratorError::LinAlg(l),
            other => other,
        })?;

        if x.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
            return Err(IntegratorError::Diverged { t: t_next });
        }

        times.push(t_next);
        states.push(State::from_stacked(&x)?);
        controls.push(control_at(t_next)?);
        k += 1;
    }

    let controls = match source {
        ControlSource::Zero => None,
        _ => Some(controls),
    };
    Trajectory::new(times, states, controls, ControlSampling::AtKnots)
}

/// Replays a reference trajectory's controls through the integrator with a
/// first-order hold, starting from `initial`.
pub fn rollout_with_controls(
    params: &LinkChainParams,
    initial: &State,
    reference: &Trajectory,
    dt: f64,
) -> Result<Trajectory, IntegratorError> {
    if reference.controls.is_none() {
        return Err(IntegratorError::MissingControls);
    }
    let span = (reference.times[0], *reference.times.last().unwrap());
    let cfg = RolloutConfig::new(span, dt)?;
    simulate_with(params, initial, &cfg, &ControlSource::Interpolated(reference))
}
