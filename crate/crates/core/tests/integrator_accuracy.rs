//! Accuracy properties of the fixed-step integrator: energy conservation,
//! fourth-order convergence, and grid exactness.

use acrobot_core::dynamics::{total_energy, LinkChainParams, State};
use acrobot_core::integrator::{
    rollout_with_controls, simulate, ControlSampling, RolloutConfig, Trajectory,
};
use nalgebra::DVector;
use std::f64::consts::FRAC_PI_3;

fn release_state(n: usize) -> State {
    let mut q = vec![0.0; n];
    q[0] = FRAC_PI_3;
    State::from_slices(&q, &vec![0.0; n]).unwrap()
}

#[test]
fn passive_energy_drift_stays_tiny_over_ten_seconds() {
    for n in [2usize, 3] {
        let params = LinkChainParams::acrobot(n).unwrap();
        let initial = release_state(n);
        let e0 = total_energy(&params, &initial).unwrap();
        let cfg = RolloutConfig::new((0.0, 10.0), 1e-3).unwrap();
        let traj = simulate(&params, &initial, &cfg).unwrap();
        let drift = traj
            .states()
            .iter()
            .map(|s| (total_energy(&params, s).unwrap() - e0).abs())
            .fold(0.0, f64::max);
        let relative = drift / e0.abs();
        assert!(relative < 1e-6, "n={n}: relative drift {relative:.3e}");
    }
}

#[test]
fn energy_drift_bounded_from_random_bounded_states() {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(37);
    for n in [2usize, 3] {
        let params = LinkChainParams::acrobot(n).unwrap();
        for _ in 0..3 {
            let q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
            let qd: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let initial = State::from_slices(&q, &qd).unwrap();
            let e0 = total_energy(&params, &initial).unwrap();
            let cfg = RolloutConfig::new((0.0, 10.0), 1e-3).unwrap();
            let traj = simulate(&params, &initial, &cfg).unwrap();
            let e_end = total_energy(&params, traj.final_state()).unwrap();
            assert!(
                (e_end - e0).abs() / e0.abs().max(1.0) < 1e-6,
                "n={n} from {q:?} {qd:?}"
            );
        }
    }
}

fn end_state(params: &LinkChainParams, initial: &State, t: f64, dt: f64) -> DVector<f64> {
    let cfg = RolloutConfig::new((0.0, t), dt).unwrap();
    simulate(params, initial, &cfg).unwrap().final_state().to_stacked()
}

#[test]
fn halving_the_step_cuts_the_error_sixteenfold() {
    for n in [2usize, 3] {
        let params = LinkChainParams::acrobot(n).unwrap();
        let initial = release_state(n);
        let reference = end_state(&params, &initial, 2.0, 2.5e-4);
        let coarse = (end_state(&params, &initial, 2.0, 2e-3) - &reference).amax();
        let fine = (end_state(&params, &initial, 2.0, 1e-3) - &reference).amax();
        let ratio = coarse / fine;
        assert!(
            (12.0..=20.0).contains(&ratio),
            "n={n}: order-4 ratio out of window: {ratio:.2}"
        );
    }
}

#[test]
fn controlled_rollout_is_fourth_order_too() {
    // Reference trajectory with a dyadic knot grid and dyadic steps, so every
    // first-order-hold kink lands exactly on a step boundary at all levels.
    let params = LinkChainParams::acrobot(2).unwrap();
    let knots = 9usize;
    let t_final = 2.0;
    let h = t_final / (knots - 1) as f64; // 0.25, dyadic
    let times: Vec<f64> = (0..knots).map(|k| k as f64 * h).collect();
    let states: Vec<State> =
        (0..knots).map(|_| State::from_slices(&[0.0, 0.0], &[0.0, 0.0]).unwrap()).collect();
    let controls: Vec<DVector<f64>> = (0..knots)
        .map(|k| DVector::from_element(1, 6.0 * (1.7 * k as f64 * h).sin()))
        .collect();
    let reference =
        Trajectory::new(times, states, Some(controls), ControlSampling::AtKnots).unwrap();
    let initial = release_state(2);

    let end = |dt: f64| -> DVector<f64> {
        rollout_with_controls(&params, &initial, &reference, dt)
            .unwrap()
            .final_state()
            .to_stacked()
    };
    let reference_end = end(h / 512.0);
    let coarse = (end(h / 16.0) - &reference_end).amax();
    let fine = (end(h / 32.0) - &reference_end).amax();
    let ratio = coarse / fine;
    assert!(
        (12.0..=20.0).contains(&ratio),
        "rollout order-4 ratio out of window: {ratio:.2}"
    );
}

#[test]
fn grids_are_bitwise_reproducible() {
    let params = LinkChainParams::acrobot(3).unwrap();
    let initial = release_state(3);
    let cfg = RolloutConfig::new((0.0, 0.5), 7e-3).unwrap();
    let a = simulate(&params, &initial, &cfg).unwrap();
    let b = simulate(&params, &initial, &cfg).unwrap();
    assert_eq!(a, b);
    for (k, &t) in a.times().iter().enumerate() {
        if k + 1 < a.len() {
            assert_eq!(t, k as f64 * 7e-3);
        } else {
            assert_eq!(t, 0.5);
        }
    }
}
