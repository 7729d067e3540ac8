//! Solves the default swing-up problems and prints convergence summaries,
//! then replays each solution open-loop through the integrator.

use acrobot_core::dynamics::{LinkChainParams, State};
use acrobot_core::integrator::{rollout_with_controls, ControlSampling, Trajectory};
use acrobot_core::nlp::{solve, SolverOptions};
use acrobot_core::transcription::{build_nlp, OcpSpec};

fn main() {
    let mut opts = SolverOptions::default();
    opts.verbose = std::env::var("QUIET").is_err();
    if let Ok(p) = std::env::var("PENALTY") {
        opts.initial_penalty = p.parse().unwrap();
    }
    if let Ok(i) = std::env::var("INNER") {
        opts.max_inner_iters = i.parse().unwrap();
    }
    let knots: usize = std::env::var("KNOTS").map(|s| s.parse().unwrap()).unwrap_or(25);
    let warm = std::env::var("WARM").is_ok();

    for n in [2usize, 3] {
        println!("=== {n}-link swing-up, N={knots} warm={warm} ===");
        let params = LinkChainParams::acrobot(n).unwrap();
        let mut spec = OcpSpec::swing_up(params.clone()).unwrap();
        spec.n_knots = knots;
        let mut nlp = build_nlp(spec).unwrap();
        if warm && knots != 25 {
            let coarse_spec = OcpSpec::swing_up(params.clone()).unwrap();
            let coarse = build_nlp(coarse_spec.clone()).unwrap();
            let coarse_report = solve(&coarse, &opts).unwrap();
            let lifted = acrobot_core::transcription::interpolate_decision(
                &coarse_spec,
                &coarse_report.y_star,
                nlp.spec(),
            )
            .unwrap();
            nlp.set_initial_guess(lifted).unwrap();
        }
        let t0 = std::time::Instant::now();
        let report = solve(&nlp, &opts).unwrap();
        let elapsed = t0.elapsed().as_secs_f64();
        let (states, controls) = nlp.spec().unpack(&report.y_star).unwrap();
        let max_u = controls.iter().map(|u| u.amax()).fold(0.0, f64::max);
        println!(
            "status={:?} violation={:.3e} cost={:.4} outers={} evals={} time={elapsed:.2}s max|u|={max_u:.3}",
            report.status,
            report.final_constraint_violation,
            report.final_cost,
            report.outer_iterations,
            report.inner_evaluations
        );

        let times = nlp.spec().knot_times();
        let knot_states: Vec<State> = states.iter().map(|x| State::from_stacked(x).unwrap()).collect();
        let reference = Trajectory::new(times, knot_states, Some(controls), ControlSampling::AtKnots).unwrap();
        let initial = State::from_stacked(&states[0]).unwrap();
        let rolled = rollout_with_controls(&params, &initial, &reference, 1e-3).unwrap();
        let end = rolled.final_state();
        let target = &nlp.spec().x_final;
        let dev_q = (0..n).map(|i| (end.q()[i] - target[i]).abs()).fold(0.0, f64::max);
        let dev_qd = (0..n).map(|i| (end.qdot()[i] - target[n + i]).abs()).fold(0.0, f64::max);
        println!("rollout deviation: q {dev_q:.4} rad, q̇ {dev_qd:.4} rad/s");
    }
}
