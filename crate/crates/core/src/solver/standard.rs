//! Standard lumped model: Poiseuille vessels with capacitance and stenosis
//! loss, lossless junctions, backward Euler in time.

use super::newton::newton;
use super::{idx, Engine, Mode, Solution, SolutionTable, SolverConfig, Step, StepDiagnostics, P_IN, P_OUT, Q_IN, Q_OUT};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::network::VascularNetwork;
use crate::scalar::Scalar;

/// Row offsets of the equation blocks.
struct Layout {
    junctions: usize,
    inflow: usize,
    outlets: usize,
}

fn layout<T: Scalar>(net: &VascularNetwork<T>) -> Layout {
    let v = net.vessels().len();
    let junctions = 2 * v;
    let inflow = junctions + 3 * net.junctions().len();
    Layout {
        junctions,
        inflow,
        outlets: inflow + 1,
    }
}

/// Residual of the standard model. Rows: per vessel the mass and momentum
/// equations, per junction mass conservation and zero pressure drop to each
/// outlet, the inflow condition, then one resistance condition per terminal
/// vessel.
pub fn assemble_standard_residual<T: Scalar>(net: &VascularNetwork<T>, x: &[T], step: &Step<T>) -> Vec<T> {
    assemble(net, x, step, false).0
}

pub(crate) fn assemble<T: Scalar>(
    net: &VascularNetwork<T>,
    x: &[T],
    step: &Step<T>,
    with_jacobian: bool,
) -> (Vec<T>, Option<Matrix<T>>) {
    let n = 4 * net.vessels().len();
    assert_eq!(x.len(), n, "state length does not match the network");
    let mut r = vec![T::zero(); n];
    let mut jac = with_jacobian.then(|| Matrix::zeros(n, n));
    let two = T::lit(2.0);
    let kd = step.rate_derivative();
    for (v, vessel) in net.vessels().iter().enumerate() {
        let (pi, po, qi, qo) = (idx(v, P_IN), idx(v, P_OUT), idx(v, Q_IN), idx(v, Q_OUT));
        let (c, rv, l, rs) = (vessel.capacitance, vessel.resistance, vessel.inductance, vessel.stenosis_resistance);
        let q = x[qi];
        let dp = step.rate(x, pi);
        let dq_in = step.rate(x, qi);
        let dq_out = step.rate(x, qo);
        r[2 * v] = x[qi] - x[qo] - c * (dp + rv * dq_in + two * rs * q.abs() * dq_in);
        r[2 * v + 1] = x[pi] - x[po] - rv * q - rs * q * q.abs() - l * dq_out;
        if let Some(a) = jac.as_mut() {
            let sign = if q > T::zero() {
                T::one()
            } else if q < T::zero() {
                -T::one()
            } else {
                T::zero()
            };
            let m = 2 * v;
            a[(m, qi)] = T::one() - c * (rv * kd + two * rs * (sign * dq_in + q.abs() * kd));
            a[(m, qo)] = -T::one();
            a[(m, pi)] = -c * kd;
            let m = 2 * v + 1;
            a[(m, pi)] = T::one();
            a[(m, po)] = -T::one();
            a[(m, qi)] = -rv - two * rs * q.abs();
            a[(m, qo)] = -l * kd;
        }
    }
    let lay = layout(net);
    for j in 0..net.junctions().len() {
        let inlet = net.junction_inlet(j);
        let [a, b] = net.junction_outlets(j);
        let row = lay.junctions + 3 * j;
        r[row] = x[idx(inlet, Q_OUT)] - x[idx(a, Q_IN)] - x[idx(b, Q_IN)];
        r[row + 1] = x[idx(inlet, P_OUT)] - x[idx(a, P_IN)];
        r[row + 2] = x[idx(inlet, P_OUT)] - x[idx(b, P_IN)];
        if let Some(m) = jac.as_mut() {
            m[(row, idx(inlet, Q_OUT))] = T::one();
            m[(row, idx(a, Q_IN))] = -T::one();
            m[(row, idx(b, Q_IN))] = -T::one();
            m[(row + 1, idx(inlet, P_OUT))] = T::one();
            m[(row + 1, idx(a, P_IN))] = -T::one();
            m[(row + 2, idx(inlet, P_OUT))] = T::one();
            m[(row + 2, idx(b, P_IN))] = -T::one();
        }
    }
    let root = net.root();
    r[lay.inflow] = x[idx(root, Q_IN)] - step.inflow;
    if let Some(m) = jac.as_mut() {
        m[(lay.inflow, idx(root, Q_IN))] = T::one();
    }
    for (k, v) in net.terminal_vessels().enumerate() {
        let (rb, pd) = net.terminal_bc(v).expect("terminal vessel has a resistance condition");
        let row = lay.outlets + k;
        r[row] = x[idx(v, P_OUT)] - rb * x[idx(v, Q_OUT)] - pd;
        if let Some(m) = jac.as_mut() {
            m[(row, idx(v, P_OUT))] = T::one();
            m[(row, idx(v, Q_OUT))] = -rb;
        }
    }
    (r, jac)
}

/// Analytic Jacobian of [`assemble_standard_residual`].
pub fn standard_jacobian<T: Scalar>(net: &VascularNetwork<T>, x: &[T], step: &Step<T>) -> Matrix<T> {
    assemble(net, x, step, true).1.expect("jacobian requested")
}

fn solve_step<T: Scalar>(
    net: &VascularNetwork<T>,
    x: &mut [T],
    step: &Step<T>,
    config: &SolverConfig<T>,
) -> Result<super::NewtonOutcome> {
    newton(
        |x| {
            let (r, j) = assemble(net, x, step, true);
            (r, j.expect("jacobian requested"))
        },
        x,
        config.newton_tolerance,
        config.max_iterations,
    )
}

/// Steady solution of the standard model at inflow `inflow(t0)`.
pub fn solve_steady_standard<T: Scalar>(net: &VascularNetwork<T>, config: &SolverConfig<T>) -> Result<Solution<T>> {
    config.validate()?;
    let t0 = config.t0;
    let q = net.inflow().at(t0)?;
    let mut x = vec![T::zero(); 4 * net.vessels().len()];
    let out = solve_step(net, &mut x, &Step::steady(q), config)?;
    let mut cfg = config.clone();
    cfg.mode = Mode::Steady;
    Ok(Solution {
        engine: Engine::Standard,
        config: cfg,
        table: SolutionTable::new(net, vec![t0], vec![x]),
        diagnostics: vec![StepDiagnostics::newton(t0.as_f64(), &out)],
        objective_scale: None,
    })
}

/// Backward-Euler solution on the configured grid. The first state is the
/// steady solution at the initial inflow.
pub fn solve_transient_standard<T: Scalar>(net: &VascularNetwork<T>, config: &SolverConfig<T>) -> Result<Solution<T>> {
    config.validate()?;
    if config.mode != Mode::Transient {
        return Err(Error::InvalidParameter("transient solve requested with a steady configuration".into()));
    }
    let times = config.times();
    let steady = solve_steady_standard(net, config)?;
    let mut states = steady.table.states;
    let mut diagnostics = steady.diagnostics;
    for (n, &t) in times.iter().enumerate().skip(1) {
        let q = net.inflow().at(t)?;
        let prev = states[n - 1].clone();
        let mut x = prev.clone();
        let step = Step {
            inflow: q,
            previous: Some((&prev, config.dt)),
        };
        let out = solve_step(net, &mut x, &step, config).map_err(|e| match e {
            Error::Convergence(m) => Error::Convergence(format!("time step {n} (t = {t}): {m}")),
            Error::Divergence(m) => Error::Divergence(format!("time step {n} (t = {t}): {m}")),
            other => other,
        })?;
        diagnostics.push(StepDiagnostics::newton(t.as_f64(), &out));
        states.push(x);
    }
    Ok(Solution {
        engine: Engine::Standard,
        config: config.clone(),
        table: SolutionTable::new(net, times, states),
        diagnostics,
        objective_scale: None,
    })
}

pub fn solve_standard<T: Scalar>(net: &VascularNetwork<T>, config: &SolverConfig<T>) -> Result<Solution<T>> {
    match config.mode {
        Mode::Steady => solve_steady_standard(net, config),
        Mode::Transient => solve_transient_standard(net, config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm_inf;
    use crate::network::fixtures::single_vessel;
    use crate::network::{generate_symmetric_tree, Inflow, TreeSpec, VesselSpec};
    use crate::network::{BifurcationDefinition, BoundaryCondition, Fluid, NetworkOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_vessel_hand_solution() {
        let net = single_vessel(10.0, 100.0);
        let rv = net.vessels()[0].resistance;
        assert!((rv - 1.005_309_649_148_734).abs() < 1e-12);
        let s = solve_steady_standard(&net, &SolverConfig::steady()).unwrap();
        let x = &s.table.states[0];
        assert!((x[P_IN] - 1010.053_096_491_487).abs() < 1e-9);
        assert!((x[P_OUT] - 1000.0).abs() < 1e-9);
        assert_eq!(s.diagnostics[0].iterations, 1);
        let r = assemble_standard_residual(&net, x, &Step::steady(10.0));
        assert!(norm_inf(&r) < 1e-12);
    }

    #[test]
    fn zero_state_residual_shows_inflow_mismatch() {
        let net = single_vessel(10.0, 100.0);
        let r = assemble_standard_residual(&net, &[0.0; 4], &Step::steady(10.0));
        assert_eq!(r, vec![0.0, 0.0, -10.0, 0.0]);
    }

    fn stenosed_tree() -> VascularNetwork<f64> {
        let mut v1 = VesselSpec::new(1, 2.0, 0.4);
        v1.stenosis_area = Some(0.2);
        VascularNetwork::new(
            Fluid::blood(),
            vec![VesselSpec::new(0, 3.0, 0.8), v1, VesselSpec::new(2, 2.5, 0.3)],
            vec![crate::network::Junction::new(0, 0, [1, 2], [0.3, 0.6])],
            vec![
                (0, BoundaryCondition::Inflow(Inflow::Steady(12.0))),
                (1, BoundaryCondition::Resistance { resistance: 800.0, distal_pressure: 50.0 }),
                (2, BoundaryCondition::Resistance { resistance: 1200.0, distal_pressure: 0.0 }),
            ],
            BifurcationDefinition::PartialBranch,
            NetworkOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let net = stenosed_tree();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for transient in [false, true] {
            let x: Vec<f64> = (0..12).map(|_| rng.gen_range(-20.0..20.0)).collect();
            let prev: Vec<f64> = (0..12).map(|_| rng.gen_range(-20.0..20.0)).collect();
            let step = Step {
                inflow: 3.0,
                previous: transient.then_some((&prev[..], 1e-3)),
            };
            let jac = standard_jacobian(&net, &x, &step);
            for c in 0..12 {
                let h = 1e-6 * x[c].abs().max(1.0);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[c] += h;
                xm[c] -= h;
                let rp = assemble_standard_residual(&net, &xp, &step);
                let rm = assemble_standard_residual(&net, &xm, &step);
                for r in 0..12 {
                    let fd = (rp[r] - rm[r]) / (2.0 * h);
                    let an = jac[(r, c)];
                    assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "({r},{c}): {fd} vs {an}");
                }
            }
        }
    }

    #[test]
    fn stenosis_drop_matches_hand_evaluation() {
        let net = stenosed_tree();
        let s = solve_steady_standard(&net, &SolverConfig::steady()).unwrap();
        let x = &s.table.states[0];
        let v = &net.vessels()[1];
        let q = x[idx(1, Q_IN)];
        let expect = v.resistance * q + v.stenosis_resistance * q * q.abs();
        assert!(v.stenosis_resistance > 0.0);
        assert!((x[idx(1, P_IN)] - x[idx(1, P_OUT)] - expect).abs() < 1e-9);
        assert!(super::super::junction_mass_imbalance(&net, x) < 1e-12);
    }

    #[test]
    fn symmetric_tree_splits_evenly() {
        let net = generate_symmetric_tree(&TreeSpec::<f64>::new(1)).unwrap();
        let s = solve_steady_standard(&net, &SolverConfig::steady()).unwrap();
        let x = &s.table.states[0];
        assert!((x[idx(1, Q_IN)] - 25.0).abs() < 1e-12);
        assert!((x[idx(2, Q_IN)] - 25.0).abs() < 1e-12);
    }

    #[test]
    fn constant_inflow_transient_is_steady() {
        let net = generate_symmetric_tree(&TreeSpec::<f64>::new(2)).unwrap();
        let steady = solve_steady_standard(&net, &SolverConfig::steady()).unwrap();
        let tr = solve_transient_standard(&net, &SolverConfig::transient(1e-3, 20)).unwrap();
        assert_eq!(tr.table.states.len(), 21);
        for x in &tr.table.states {
            for (a, b) in x.iter().zip(&steady.table.states[0]) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn zero_inflow_series_gives_zero_solution() {
        let mut net = generate_symmetric_tree(&TreeSpec::<f64>::new(1)).unwrap();
        net.set_inflow(Inflow::Series {
            time: vec![0.0, 1.0],
            flow: vec![0.0, 0.0],
        })
        .unwrap();
        let tr = solve_transient_standard(&net, &SolverConfig::transient(0.1, 10)).unwrap();
        assert!(tr.table.states.iter().all(|x| x.iter().all(|&v| v == 0.0)));
    }
}
