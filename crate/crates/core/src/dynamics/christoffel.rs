//! Coriolis matrix from Christoffel symbols of the inertia matrix.

use nalgebra::DMatrix;

use super::{manipulator_terms, DynamicsError, LinkChainParams, State};

/// Builds `C(q, q̇)` from the partials of the inertia matrix:
///
/// ```text
/// C_ij = Σ_k ½ (∂M_ij/∂q_k + ∂M_ik/∂q_j − ∂M_jk/∂q_i) q̇_k
/// ```
///
/// The result satisfies the skew-symmetry of `Ṁ − 2C`, which makes it the
/// canonical factorization for cross-validating hand-collected Coriolis terms.
///
/// `dm_dq[k]` must be `∂M/∂q_k`; see [`mass_matrix_partials`] and
/// [`mass_matrix_partials_fd`] for the analytic and finite-difference routes.
pub fn christoffel_coriolis(state: &State, dm_dq: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n = state.n_links();
    assert_eq!(dm_dq.len(), n, "need one ∂M/∂q_k per joint");
    let qd = state.qdot();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut sum = 0.0;
            for k in 0..n {
                sum += 0.5 * (dm_dq[k][(i, j)] + dm_dq[j][(i, k)] - dm_dq[i][(j, k)]) * qd[k];
            }
            c[(i, j)] = sum;
        }
    }
    c
}

/// Analytic `∂M/∂q_k` for the closed-form models.
pub fn mass_matrix_partials(
    params: &LinkChainParams,
    state: &State,
) -> Result<Vec<DMatrix<f64>>, DynamicsError> {
    super::check_links(params, state, params.n_links())?;
    match params.n_links() {
        2 => Ok(super::two_link::mass_matrix_partials_2link(params, state)),
        3 => Ok(super::three_link::mass_matrix_partials_3link(params, state)),
        n => Err(DynamicsError::ModelMismatch { expected: 2, got: n }),
    }
}

/// `∂M/∂q_k` by central finite differences of the mass-matrix evaluator,
/// step `1e-6 · max(1, |q_k|)`. Independent of the analytic partials, so the
/// two routes cross-validate each other.
pub fn mass_matrix_partials_fd(
    params: &LinkChainParams,
    state: &State,
) -> Result<Vec<DMatrix<f64>>, DynamicsError> {
    let n = state.n_links();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let h = 1e-6 * state.q()[k].abs().max(1.0);
        let mut qp = state.q().clone();
        let mut qm = state.q().clone();
        qp[k] += h;
        qm[k] -= h;
        let denom = qp[k] - qm[k];
        let sp = State::new(qp, state.qdot().clone())?;
        let sm = State::new(qm, state.qdot().clone())?;
        let mp = manipulator_terms(params, &sp)?.mass_matrix;
        let mm = manipulator_terms(params, &sm)?.mass_matrix;
        out.push((mp - mm) / denom);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    #[test]
    fn zero_velocity_gives_zero_coriolis() {
        let p = LinkChainParams::acrobot(3).unwrap();
        let s = State::from_slices(&[0.9, -0.4, 1.7], &[0.0; 3]).unwrap();
        let c = christoffel_coriolis(&s, &mass_matrix_partials(&p, &s).unwrap());
        assert_eq!(c, DMatrix::zeros(3, 3));
    }

    #[test]
    fn analytic_and_finite_difference_partials_agree() {
        let p = LinkChainParams::new(
            vec![0.7, 1.3, 2.1],
            vec![0.9, 1.4, 0.6],
            9.81,
            vec![false, true, true],
        )
        .unwrap();
        let s = State::from_slices(&[0.3, -1.2, 2.4], &[0.5, -0.8, 1.1]).unwrap();
        let analytic = mass_matrix_partials(&p, &s).unwrap();
        let fd = mass_matrix_partials_fd(&p, &s).unwrap();
        for (a, f) in analytic.iter().zip(&fd) {
            assert_abs_diff_eq!(a, f, epsilon = 1e-7);
        }
    }

    #[test]
    fn two_link_christoffel_matches_per_equation_grouping_in_the_product() {
        // The per-equation grouping returned by manipulator_terms_2link and
        // the Christoffel form are different matrices, but both must yield the
        // same generalized force C·q̇.
        let p = LinkChainParams::acrobot(2).unwrap();
        let s = State::from_slices(&[0.7, -1.9], &[1.3, 0.4]).unwrap();
        let grouped = manipulator_terms(&p, &s).unwrap().coriolis;
        let chr = christoffel_coriolis(&s, &mass_matrix_partials(&p, &s).unwrap());
        let qd = s.qdot();
        assert_abs_diff_eq!(&grouped * qd, &chr * qd, epsilon = 1e-12);
        // And they genuinely differ entrywise: the grouping zeroes C₁₁ while
        // the Christoffel form carries -m₂l₁l₂ s₂ q̇₂ there.
        let a = p.masses()[1] * p.lengths()[0] * p.lengths()[1];
        let expected_c11 = -a * s.q()[1].sin() * qd[1];
        assert_abs_diff_eq!(chr[(0, 0)], expected_c11, epsilon = 1e-12);
        assert_eq!(grouped[(0, 0)], 0.0);
        assert!((chr[(0, 0)] - grouped[(0, 0)]).abs() > 0.1);
    }

    #[test]
    fn mdot_minus_two_c_is_skew_symmetric() {
        let p = LinkChainParams::acrobot(3).unwrap();
        let s = State::from_slices(&[0.2, 1.1, -0.6], &[1.0, -2.0, 0.5]).unwrap();
        let partials = mass_matrix_partials(&p, &s).unwrap();
        let c = christoffel_coriolis(&s, &partials);
        let mut mdot = DMatrix::zeros(3, 3);
        for k in 0..3 {
            mdot += &partials[k] * s.qdot()[k];
        }
        let n = mdot - 2.0 * c;
        let sym = &n + n.transpose();
        assert_abs_diff_eq!(sym, DMatrix::zeros(3, 3), epsilon = 1e-12);
        let v = DVector::from_row_slice(&[0.3, -1.4, 0.9]);
        assert!((v.transpose() * &n * &v)[(0, 0)].abs() < 1e-12);
    }
}
