//! Stationary solutions of the Pauli master equation.
//!
//! The generator L conserves total population (columns sum to zero), so the
//! stationary state solves L p = 0 with sum(p) = 1. The solve uses the
//! Grassmann-Taksar-Heyman elimination, which touches only nonnegative
//! numbers: no subtraction ever occurs, so every component of the result
//! carries full relative accuracy even when populations span hundreds of
//! orders of magnitude. Long steep chains produce exactly that regime, and
//! a general-purpose factorization returns sign-indefinite noise there.
//!
//! Uniqueness needs exactly one closed communicating class in the rate
//! graph. Transient states (reachable but never fed back) are fine and end
//! up with exactly zero population; two mutually unreachable closed subsets
//! mean the stationary state depends on the initial condition, which is
//! reported as an error rather than silently picking one.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::environment::RateModel;

#[derive(Debug, Error)]
pub enum SteadyStateError {
    #[error(
        "disconnected state space: stationary populations are not unique \
         (closed subsets: {closed:?})"
    )]
    Disconnected { closed: Vec<Vec<usize>> },
    #[error("stationary solve failed; rate graph is not irreducible on its closed class")]
    SolveFailed,
}

/// Pairwise reachability under edges m -> n wherever `w[(n, m)] > 0`. The
/// diagonal is ignored, so a generator works as well as a rate matrix.
fn reachability(w: &DMatrix<f64>) -> Vec<Vec<bool>> {
    let dim = w.nrows();
    let mut reach = vec![vec![false; dim]; dim];
    for m in 0..dim {
        reach[m][m] = true;
        for n in 0..dim {
            if n != m && w[(n, m)] > 0.0 {
                reach[m][n] = true;
            }
        }
    }
    for k in 0..dim {
        for i in 0..dim {
            if reach[i][k] {
                for j in 0..dim {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    reach
}

/// Closed communicating classes of the rate graph: subsets that communicate
/// internally and have no outgoing edge. Exactly one such class means a
/// unique stationary distribution.
pub fn closed_classes(w: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let dim = w.nrows();
    let reach = reachability(w);
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut seen = vec![false; dim];
    for i in 0..dim {
        if seen[i] {
            continue;
        }
        // class of i is closed iff everything reachable also reaches back
        let closed = (0..dim).all(|j| !reach[i][j] || reach[j][i]);
        if closed {
            let members: Vec<usize> = (0..dim)
                .filter(|&j| reach[i][j] && reach[j][i])
                .collect();
            for &j in &members {
                seen[j] = true;
            }
            classes.push(members);
        }
    }
    classes
}

/// Stationary populations of the rate model. The result is normalized and
/// componentwise nonnegative by construction.
pub fn steady_state(rm: &RateModel) -> Result<DVector<f64>, SteadyStateError> {
    solve_stationary(&rm.generator)
}

/// Grassmann-Taksar-Heyman elimination on the states of `class`, read in
/// row convention from the generator's off-diagonal entries. Returns the
/// unnormalized stationary weights of the class.
///
/// Every intermediate is a sum or product of nonnegative numbers and the
/// single division is by a positive outflow, so components keep relative
/// accuracy at any magnitude.
fn gth_weights(generator: &DMatrix<f64>, class: &[usize]) -> Option<Vec<f64>> {
    let m = class.len();
    // a[(i, j)] = rate class[i] -> class[j]
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            if i != j {
                a[(i, j)] = generator[(class[j], class[i])];
            }
        }
    }
    // censor state n onto the states below it
    for n in (1..m).rev() {
        let outflow: f64 = (0..n).map(|j| a[(n, j)]).sum();
        if !(outflow > 0.0) {
            // closed class that is not irreducible; cannot happen for
            // classes produced by closed_classes
            return None;
        }
        for i in 0..n {
            let f = a[(i, n)] / outflow;
            a[(i, n)] = f;
            if f > 0.0 {
                for j in 0..n {
                    if j != i {
                        a[(i, j)] += f * a[(n, j)];
                    }
                }
            }
        }
    }
    let mut p = vec![0.0; m];
    p[0] = 1.0;
    for n in 1..m {
        p[n] = (0..n).map(|i| p[i] * a[(i, n)]).sum();
    }
    Some(p)
}

/// Solve L p = 0, sum(p) = 1 for a generator with zero column sums.
/// Transient states get exactly zero; a unique closed class is required.
pub fn solve_stationary(generator: &DMatrix<f64>) -> Result<DVector<f64>, SteadyStateError> {
    let classes = closed_classes(generator);
    let class = match classes.as_slice() {
        [one] => one,
        _ => return Err(SteadyStateError::Disconnected { closed: classes }),
    };
    let weights = gth_weights(generator, class).ok_or(SteadyStateError::SolveFailed)?;
    let total: f64 = weights.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(SteadyStateError::SolveFailed);
    }
    let mut p = DVector::zeros(generator.nrows());
    for (&state, &weight) in class.iter().zip(&weights) {
        p[state] = weight / total;
    }
    Ok(p)
}

/// Infinity norm of the stationary defect L p.
pub fn residual(generator: &DMatrix<f64>, p: &DVector<f64>) -> f64 {
    (generator * p).amax()
}

/// Integrate dp/dt = L p from `p0` to `t_final` with an adaptive
/// step-doubling RK4. Slow against the direct solve and used as its
/// independent cross-check.
pub fn evolve(generator: &DMatrix<f64>, p0: &DVector<f64>, t_final: f64, tol: f64) -> DVector<f64> {
    let dim = generator.nrows();
    let rk4 = |p: &DVector<f64>, h: f64| -> DVector<f64> {
        let k1 = generator * p;
        let k2 = generator * &(p + &k1 * (h / 2.0));
        let k3 = generator * &(p + &k2 * (h / 2.0));
        let k4 = generator * &(p + &k3 * h);
        p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    };
    let max_diag = (0..dim)
        .map(|i| generator[(i, i)].abs())
        .fold(0.0_f64, f64::max);
    // explicit stability: |h lambda| stays inside the RK4 region
    let h_cap = if max_diag > 0.0 { 1.0 / max_diag } else { t_final };

    let mut p = p0.clone();
    let mut t = 0.0;
    let mut h = (t_final / 100.0).min(h_cap);
    while t < t_final {
        h = h.min(t_final - t).min(h_cap);
        let full = rk4(&p, h);
        let half = rk4(&rk4(&p, h / 2.0), h / 2.0);
        let err = (&full - &half).amax() / 15.0;
        if err <= tol || h <= 1e-14 * t_final {
            t += h;
            // local extrapolation: fifth-order combination
            p = &half + (&half - &full) / 15.0;
            if err > 0.0 {
                h *= 0.9 * (tol / err).powf(0.2).min(5.0);
            } else {
                h *= 5.0;
            }
        } else {
            h *= 0.9 * (tol / err).powf(0.25).max(0.1);
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{assemble_rates, generator_from_w};
    use crate::hamiltonian::{build, diagonalize};
    use crate::model::{ModelParams, K_BOLTZMANN};
    use approx::assert_abs_diff_eq;
    use approx::assert_relative_eq;

    fn model_from_w(entries: &[(usize, usize, f64)], dim: usize) -> RateModel {
        let mut w = DMatrix::zeros(dim, dim);
        for &(n, m, r) in entries {
            w[(n, m)] = r;
        }
        RateModel::from_w(w)
    }

    #[test]
    fn two_state_balance() {
        // 1 -> 0 at 2, 0 -> 1 at 1: populations 2/3, 1/3
        let rm = model_from_w(&[(0, 1, 2.0), (1, 0, 1.0)], 2);
        let p = steady_state(&rm).unwrap();
        assert_abs_diff_eq!(p[0], 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p[1], 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn driven_ring_is_uniform() {
        // one-way cycle with equal rates carries flux but uniform population
        let rm = model_from_w(&[(1, 0, 0.7), (2, 1, 0.7), (0, 2, 0.7)], 3);
        let p = steady_state(&rm).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(p[i], 1.0 / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn chain_with_detailed_balance() {
        // rates chosen so p = (1, 2, 4) / 7 exactly
        let rm = model_from_w(&[(1, 0, 2.0), (0, 1, 1.0), (2, 1, 2.0), (1, 2, 1.0)], 3);
        let p = steady_state(&rm).unwrap();
        assert_abs_diff_eq!(p[0], 1.0 / 7.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p[1], 2.0 / 7.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p[2], 4.0 / 7.0, epsilon = 1e-14);
    }

    #[test]
    fn populations_keep_relative_accuracy_across_huge_ranges() {
        // balance forces p1/p0 = 1e-30; an absolute-error solver returns
        // sign-indefinite noise here, the censoring solve is exact
        let rm = model_from_w(&[(0, 1, 1.0), (1, 0, 1e-30)], 2);
        let p = steady_state(&rm).unwrap();
        assert_relative_eq!(p[1], 1e-30, max_relative = 1e-12);
        assert_relative_eq!(p[0], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn deep_chain_tail_stays_positive() {
        // ten downhill-favored hops: tail population ~ r^10 with r = 1e-12
        let mut entries = Vec::new();
        for i in 0..10 {
            entries.push((i, i + 1, 1.0));
            entries.push((i + 1, i, 1e-12));
        }
        let rm = model_from_w(&entries, 11);
        let p = steady_state(&rm).unwrap();
        assert_relative_eq!(p[10] / p[0], 1e-120, max_relative = 1e-10);
        assert!(p.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn disconnected_blocks_are_rejected() {
        let rm = model_from_w(&[(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)], 4);
        match steady_state(&rm) {
            Err(SteadyStateError::Disconnected { closed }) => {
                assert_eq!(closed, vec![vec![0, 1], vec![2, 3]]);
            }
            other => panic!("expected disconnection, got {other:?}"),
        }
    }

    #[test]
    fn transient_source_drains_to_zero() {
        // state 2 feeds the pair but is never refilled
        let rm = model_from_w(
            &[(0, 1, 1.0), (1, 0, 1.0), (0, 2, 0.5), (1, 2, 0.5)],
            3,
        );
        let p = steady_state(&rm).unwrap();
        assert_eq!(p[2], 0.0);
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn absorbing_state_takes_everything() {
        let rm = model_from_w(&[(1, 0, 1.0), (2, 1, 1.0)], 3);
        let p = steady_state(&rm).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn residual_stays_at_machine_level() {
        let params = ModelParams::reference(12);
        let basis = diagonalize(&build(&params.chain));
        let rm = assemble_rates(&params, &basis, 2.6e-5);
        let p = steady_state(&rm).unwrap();
        // defect far below the smallest meaningful rate
        assert!(residual(&rm.generator, &p) < 1e-15);
        assert_abs_diff_eq!(p.sum(), 1.0, epsilon = 1e-14);
        assert!(p.min() >= 0.0);
    }

    #[test]
    fn time_propagation_agrees_with_direct_solve() {
        let params = ModelParams::reference(4);
        let basis = diagonalize(&build(&params.chain));
        let rm = assemble_rates(&params, &basis, 3e-5);
        let direct = steady_state(&rm).unwrap();

        let dim = rm.dim();
        let uniform = DVector::from_element(dim, 1.0 / dim as f64);
        let evolved = evolve(&rm.generator, &uniform, 2e6, 1e-12);
        for i in 0..dim {
            assert_abs_diff_eq!(evolved[i], direct[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn equal_temperatures_relax_to_gibbs() {
        // with every bath at one temperature, detailed balance forces the
        // Boltzmann distribution over all eigenstates regardless of the
        // coupling pattern; hot enough that no population underflows
        let t = 3000.0;
        let mut params = ModelParams::reference(5);
        for proc in &mut params.processes {
            proc.spectrum.set_temperature(t);
        }
        params.t_cold = t;
        let basis = diagonalize(&build(&params.chain));
        let rm = assemble_rates(&params, &basis, 1e-4);
        let p = steady_state(&rm).unwrap();

        let kt = K_BOLTZMANN * t;
        let z: f64 = basis.energies.iter().map(|e| (-e / kt).exp()).sum();
        for n in 0..rm.dim() {
            let gibbs = (-basis.energies[n] / kt).exp() / z;
            assert_relative_eq!(p[n], gibbs, max_relative = 1e-9);
        }
    }

    #[test]
    fn evolve_conserves_probability() {
        let w = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 0.3, 1.0, 0.0, 0.25, 3.0, 4.0, 0.0]);
        let l = generator_from_w(&w);
        let p0 = DVector::from_vec(vec![0.9, 0.05, 0.05]);
        let p = evolve(&l, &p0, 5.0, 1e-11);
        assert_abs_diff_eq!(p.sum(), 1.0, epsilon = 1e-10);
        assert!(p.min() >= -1e-12);
    }
}
