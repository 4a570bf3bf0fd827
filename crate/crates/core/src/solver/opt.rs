//! Optimization engine: minimize the junction misfit Z subject to exact
//! linear conservation and boundary constraints.
//!
//! The constraints (vessels as wires, junction mass conservation, inflow,
//! terminal resistances) are linear, so the feasible set is an affine space.
//! The solver works in an orthonormal basis of its null space and applies a
//! regularized Newton method with the exact Hessian of Z and an Armijo line
//! search.

use serde::{Deserialize, Serialize};

use super::rootfind::{outlet_laws, OutletLaw};
use super::standard::solve_steady_standard;
use super::{
    idx, Engine, Initialization, Mode, Solution, SolutionTable, SolverConfig, Step, StepDiagnostics, P_IN, P_OUT, Q_IN,
    Q_OUT,
};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, Cholesky, ConstraintBasis, Matrix};
use crate::network::VascularNetwork;
use crate::nondim::ModelKind;
use crate::scalar::Scalar;

/// Inflow that normalizes Z: the steady inflow, or the peak of the inflow
/// series in transient mode. A zero inflow falls back to 1.
pub fn objective_scale<T: Scalar>(net: &VascularNetwork<T>, config: &SolverConfig<T>) -> Result<T> {
    let s = match config.mode {
        Mode::Steady => net.inflow().at(config.t0)?.abs(),
        Mode::Transient => net.inflow().peak(),
    };
    Ok(if s > T::zero() { s } else { T::one() })
}

pub(crate) fn initial_state<T: Scalar>(net: &VascularNetwork<T>, config: &SolverConfig<T>) -> Result<Vec<T>> {
    match config.initialization {
        Initialization::Zero => Ok(vec![T::zero(); 4 * net.vessels().len()]),
        Initialization::StandardSolution => {
            let mut steady = config.clone();
            steady.mode = Mode::Steady;
            Ok(solve_steady_standard(net, &steady)?.table.states.remove(0))
        }
    }
}

struct Problem<'a, T> {
    net: &'a VascularNetwork<T>,
    laws: Vec<[OutletLaw<T>; 2]>,
    phi: Vec<[T; 2]>,
    a: Matrix<T>,
    basis: ConstraintBasis<T>,
    null: Matrix<T>,
    scale: T,
}

/// Constraint rows: per vessel `Q_in − Q_out` and `P_in − P_out`, per junction
/// mass conservation, the inflow, then per terminal vessel `P_out − R Q_out`.
fn constraint_matrix<T: Scalar>(net: &VascularNetwork<T>) -> Matrix<T> {
    let nv = net.vessels().len();
    let nj = net.junctions().len();
    let nt = net.terminal_vessels().count();
    let mut a = Matrix::zeros(2 * nv + nj + 1 + nt, 4 * nv);
    for v in 0..nv {
        a[(2 * v, idx(v, Q_IN))] = T::one();
        a[(2 * v, idx(v, Q_OUT))] = -T::one();
        a[(2 * v + 1, idx(v, P_IN))] = T::one();
        a[(2 * v + 1, idx(v, P_OUT))] = -T::one();
    }
    for j in 0..nj {
        let row = 2 * nv + j;
        let [o1, o2] = net.junction_outlets(j);
        a[(row, idx(net.junction_inlet(j), Q_OUT))] = T::one();
        a[(row, idx(o1, Q_IN))] = -T::one();
        a[(row, idx(o2, Q_IN))] = -T::one();
    }
    let row = 2 * nv + nj;
    a[(row, idx(net.root(), Q_IN))] = T::one();
    for (k, v) in net.terminal_vessels().enumerate() {
        let (r, _) = net.terminal_bc(v).expect("terminal vessel has a resistance condition");
        a[(row + 1 + k, idx(v, P_OUT))] = T::one();
        a[(row + 1 + k, idx(v, Q_OUT))] = -r;
    }
    a
}

fn constraint_rhs<T: Scalar>(net: &VascularNetwork<T>, inflow: T) -> Vec<T> {
    let nv = net.vessels().len();
    let nj = net.junctions().len();
    let mut b = vec![T::zero(); 2 * nv + nj + 1];
    b[2 * nv + nj] = inflow;
    b.extend(net.terminal_vessels().map(|v| net.terminal_bc(v).expect("terminal").1));
    b
}

/// Objective value, residual vector and its Jacobian at `x`.
struct Eval<T> {
    z: T,
    r: Vec<T>,
    jac: Matrix<T>,
    /// `(state index, Σ r_i ∂²r_i/∂x²)` diagonal curvature entries.
    curvature: Vec<(usize, T)>,
}

impl<'a, T: Scalar> Problem<'a, T> {
    fn new(net: &'a VascularNetwork<T>, kind: ModelKind, scale: T) -> Result<Self> {
        let laws = outlet_laws(net, kind)?;
        let phi = net
            .junctions()
            .iter()
            .map(|j| {
                j.flow_split.ok_or(Error::MissingJunctionData {
                    junction: j.id,
                    outlet: 1,
                    what: "a flow split",
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let a = constraint_matrix(net);
        let basis = ConstraintBasis::new(&a).map_err(|e| match e {
            Error::RankDeficient { column } => Error::Convergence(format!("infeasible constraint set at {column}")),
            other => other,
        })?;
        let null = basis.null_space();
        Ok(Self {
            net,
            laws,
            phi,
            a,
            basis,
            null,
            scale,
        })
    }

    fn constraint_violation(&self, x: &[T], b: &[T]) -> T {
        let ax = self.a.mul_vec(x);
        ax.iter().zip(b).fold(T::zero(), |m, (u, v)| m.max((*u - *v).abs()))
    }

    fn project(&self, x: &[T], b: &[T]) -> Vec<T> {
        let ax = self.a.mul_vec(x);
        let res: Vec<T> = b.iter().zip(&ax).map(|(u, v)| *u - *v).collect();
        self.basis.project(x, &res)
    }

    fn eval(&self, x: &[T], step: &Step<T>, with_jacobian: bool) -> Eval<T> {
        let nj = self.laws.len();
        let n = x.len();
        let s = self.scale;
        let s2 = s * s;
        let kd = step.rate_derivative();
        let mut r = vec![T::zero(); 4 * nj];
        let mut jac = Matrix::zeros(if with_jacobian { 4 * nj } else { 0 }, n);
        let mut curvature = Vec::new();
        for j in 0..nj {
            let inlet = self.net.junction_inlet(j);
            let outs = self.net.junction_outlets(j);
            for k in 0..2 {
                let law = &self.laws[j][k];
                let qi = idx(outs[k], Q_IN);
                let q = x[qi];
                let dq = step.rate(x, qi);
                let rp = 4 * j + 2 * k;
                let rf = rp + 1;
                r[rp] = (x[idx(inlet, P_OUT)] - x[idx(outs[k], P_IN)] - law.drop(q, dq)) / s2;
                r[rf] = (self.phi[j][k] * x[idx(inlet, Q_OUT)] - q) / s;
                if with_jacobian {
                    jac[(rp, idx(inlet, P_OUT))] = T::one() / s2;
                    jac[(rp, idx(outs[k], P_IN))] = -T::one() / s2;
                    jac[(rp, qi)] = -(law.d_flow(q) + law.d_rate() * kd) / s2;
                    jac[(rf, idx(inlet, Q_OUT))] = self.phi[j][k] / s;
                    jac[(rf, qi)] = -T::one() / s;
                    let c = law.d2_flow();
                    if c != T::zero() {
                        curvature.push((qi, -r[rp] * c / s2));
                    }
                }
            }
        }
        let z = r.iter().fold(T::zero(), |acc, v| acc + *v * *v);
        Eval { z, r, jac, curvature }
    }

    fn gradient(&self, e: &Eval<T>) -> Vec<T> {
        e.jac.tr_mul_vec(&e.r).into_iter().map(|g| g + g).collect()
    }

    /// Reduced Newton step `N d` with `(NᵀHN + δI) d = −Nᵀ∇Z`.
    fn newton_direction(&self, e: &Eval<T>) -> Vec<T> {
        let (m, n) = (e.jac.rows(), self.null.rows());
        let p = self.null.cols();
        if p == 0 {
            return vec![T::zero(); n];
        }
        // J N
        let mut jn = Matrix::zeros(m, p);
        for i in 0..m {
            let row = e.jac.row(i);
            for (c, &jc) in row.iter().enumerate() {
                if jc == T::zero() {
                    continue;
                }
                for t in 0..p {
                    jn[(i, t)] += jc * self.null[(c, t)];
                }
            }
        }
        let two = T::lit(2.0);
        let mut h: Matrix<T> = Matrix::zeros(p, p);
        for i in 0..m {
            let row = jn.row(i);
            for a in 0..p {
                if row[a] == T::zero() {
                    continue;
                }
                for b in 0..p {
                    h[(a, b)] += two * row[a] * row[b];
                }
            }
        }
        for &(q, w) in &e.curvature {
            for a in 0..p {
                for b in 0..p {
                    h[(a, b)] += two * w * self.null[(q, a)] * self.null[(q, b)];
                }
            }
        }
        let g = jn.tr_mul_vec(&e.r).into_iter().map(|v| -(v + v)).collect::<Vec<_>>();
        let hmax = h.max_abs().max(T::min_positive_value());
        let mut delta = T::zero();
        let d = loop {
            let mut hd = h.clone();
            for a in 0..p {
                hd[(a, a)] += delta;
            }
            match Cholesky::new(&hd) {
                Ok(c) => break c.solve(&g),
                Err(_) => {
                    delta = if delta == T::zero() {
                        hmax * T::lit(1e-10)
                    } else {
                        delta * T::lit(10.0)
                    };
                }
            }
        };
        self.null.mul_vec(&d)
    }

    /// Minimizes Z on the affine set `A x = b` starting from `x`.
    fn minimize(&self, x: &mut Vec<T>, b: &[T], step: &Step<T>, config: &SolverConfig<T>) -> Result<StepDiagnostics> {
        *x = self.project(x, b);
        let mut iterations = 0;
        let target = config.stationarity_tolerance * T::lit(1e-3);
        while iterations < config.max_opt_iterations {
            let e = self.eval(x, step, true);
            if !e.z.is_finite() {
                return Err(Error::Divergence("objective is not finite".into()));
            }
            let g = self.gradient(&e);
            if norm_inf(&self.basis.reduce_gradient(&g)) <= target || e.z == T::zero() {
                break;
            }
            let dx = self.newton_direction(&e);
            if norm_inf(&dx) <= T::lit(16.0) * T::epsilon() * (T::one() + norm_inf(x)) {
                break;
            }
            let slope = dot(&g, &dx);
            let mut alpha = T::one();
            let accepted = loop {
                let trial: Vec<T> = x.iter().zip(&dx).map(|(xi, d)| *xi + alpha * *d).collect();
                let zt = self.eval(&trial, step, false).z;
                if zt <= e.z + T::lit(1e-4) * alpha * slope.min(T::zero()) {
                    break Some(trial);
                }
                alpha *= T::lit(0.5);
                if alpha < T::lit(1e-12) {
                    break None;
                }
            };
            iterations += 1;
            match accepted {
                Some(trial) => *x = trial,
                None => break,
            }
        }
        *x = self.project(x, b);
        let e = self.eval(x, step, true);
        let stationarity = norm_inf(&self.basis.reduce_gradient(&self.gradient(&e)));
        let violation = self.constraint_violation(x, b);
        if !(violation <= config.constraint_tolerance) || !(stationarity <= config.stationarity_tolerance) {
            return Err(Error::Convergence(format!(
                "optimization stopped after {iterations} iterations with constraint violation {}, stationarity {}, Z = {}",
                violation.as_f64(),
                stationarity.as_f64(),
                e.z.as_f64()
            )));
        }
        Ok(StepDiagnostics {
            t: f64::NAN,
            iterations,
            residual: None,
            objective: Some(e.z.as_f64()),
            constraint_violation: Some(violation.as_f64()),
            stationarity: Some(stationarity.as_f64()),
        })
    }
}

/// Solves the junction-law network by constrained minimization of
/// `Z = Σ_outlets [(P_out,inlet − P_in,outlet − ΔP(Q, Q̇))/Q_s²]² + [(φ Q_out,inlet − Q_in,outlet)/Q_s]²`
/// where `Q_s` is [`objective_scale`]. Transient steps use backward
/// differences and warm-start from the previous step.
pub fn solve_opt<T: Scalar>(net: &VascularNetwork<T>, kind: ModelKind, config: &SolverConfig<T>) -> Result<Solution<T>> {
    config.validate()?;
    let scale = objective_scale(net, config)?;
    let problem = Problem::new(net, kind, scale)?;
    let times = config.times();
    let mut x = initial_state(net, config)?;
    let mut states: Vec<Vec<T>> = Vec::with_capacity(times.len());
    let mut diagnostics = Vec::with_capacity(times.len());
    for (n, &t) in times.iter().enumerate() {
        let q = net.inflow().at(t)?;
        let b = constraint_rhs(net, q);
        let prev = states.last().cloned();
        let step = Step {
            inflow: q,
            previous: prev.as_deref().map(|p| (p, config.dt)),
        };
        let mut d = problem.minimize(&mut x, &b, &step, config).map_err(|e| match e {
            Error::Convergence(m) if config.mode == Mode::Transient => {
                Error::Convergence(format!("time step {n} (t = {t}): {m}"))
            }
            other => other,
        })?;
        d.t = t.as_f64();
        diagnostics.push(d);
        states.push(x.clone());
    }
    Ok(Solution {
        engine: Engine::Optimization(kind),
        config: config.clone(),
        table: SolutionTable::new(net, times, states),
        diagnostics,
        objective_scale: Some(scale),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktStep {
    pub t: f64,
    pub constraint_violation: f64,
    pub stationarity: f64,
    pub objective: f64,
}

/// Recomputes constraint violation, stationarity `‖∇Z + Aᵀλ‖∞` (least-squares
/// multipliers) and Z from the stored states of an optimization solution.
pub fn kkt_report<T: Scalar>(net: &VascularNetwork<T>, solution: &Solution<T>) -> Result<Vec<KktStep>> {
    let Engine::Optimization(kind) = solution.engine else {
        return Err(Error::Unsupported("KKT report requires an optimization solution".into()));
    };
    let scale = solution
        .objective_scale
        .map_or_else(|| objective_scale(net, &solution.config), Ok)?;
    let problem = Problem::new(net, kind, scale)?;
    let table = &solution.table;
    (0..table.len())
        .map(|n| {
            let t = table.times[n];
            let x = &table.states[n];
            if x.len() != 4 * net.vessels().len() {
                return Err(Error::ShapeMismatch("solution does not match the network".into()));
            }
            let q = net.inflow().at(t)?;
            let b = constraint_rhs(net, q);
            let step = Step {
                inflow: q,
                previous: (n > 0 && solution.config.mode == Mode::Transient)
                    .then(|| (&table.states[n - 1][..], solution.config.dt)),
            };
            let e = problem.eval(x, &step, true);
            Ok(KktStep {
                t: t.as_f64(),
                constraint_violation: problem.constraint_violation(x, &b).as_f64(),
                stationarity: norm_inf(&problem.basis.reduce_gradient(&problem.gradient(&e))).as_f64(),
                objective: e.z.as_f64(),
            })
        })
        .collect()
}
