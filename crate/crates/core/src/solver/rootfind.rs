//! Junction pressure-drop laws solved as a square nonlinear system.

use super::newton::newton;
use super::{
    idx, outlet_coefficients, Engine, Mode, Solution, SolutionTable, SolverConfig, Step, StepDiagnostics, P_IN, P_OUT,
    Q_IN, Q_OUT,
};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::network::VascularNetwork;
use crate::nondim::{CoefficientSet, ModelKind};
use crate::scalar::Scalar;

/// Pressure-drop law of one junction outlet: the junction coefficients plus
/// the Poiseuille segment of the daughter branch not attributed to the junction.
#[derive(Debug, Clone, Copy)]
pub(crate) struct OutletLaw<T> {
    pub coeffs: CoefficientSet<T>,
    pub segment_resistance: T,
    pub segment_inductance: T,
}

impl<T: Scalar> OutletLaw<T> {
    pub fn drop(&self, q: T, dq: T) -> T {
        self.coeffs.pressure_drop(q, dq) + self.segment_resistance * q + self.segment_inductance * dq
    }

    /// `∂ drop / ∂ q` at fixed `dq`.
    pub fn d_flow(&self, q: T) -> T {
        self.coeffs.r_lin + T::lit(2.0) * self.coeffs.r_quad() * q + self.segment_resistance
    }

    /// `∂ drop / ∂ dq`.
    pub fn d_rate(&self) -> T {
        self.coeffs.inductance + self.segment_inductance
    }

    /// `∂² drop / ∂ q²`.
    pub fn d2_flow(&self) -> T {
        T::lit(2.0) * self.coeffs.r_quad()
    }
}

pub(crate) fn outlet_laws<T: Scalar>(net: &VascularNetwork<T>, kind: ModelKind) -> Result<Vec<[OutletLaw<T>; 2]>> {
    (0..net.junctions().len())
        .map(|j| {
            let c = outlet_coefficients(net, j, kind)?;
            Ok([0, 1].map(|k| {
                let (r, l) = net.residual_elements(j, k);
                OutletLaw {
                    coeffs: c[k],
                    segment_resistance: r,
                    segment_inductance: l,
                }
            }))
        })
        .collect()
}

fn assemble<T: Scalar>(
    net: &VascularNetwork<T>,
    laws: &[[OutletLaw<T>; 2]],
    x: &[T],
    step: &Step<T>,
) -> (Vec<T>, Matrix<T>) {
    let nv = net.vessels().len();
    let n = 4 * nv;
    let mut r = vec![T::zero(); n];
    let mut a = Matrix::zeros(n, n);
    for v in 0..nv {
        r[2 * v] = x[idx(v, Q_IN)] - x[idx(v, Q_OUT)];
        a[(2 * v, idx(v, Q_IN))] = T::one();
        a[(2 * v, idx(v, Q_OUT))] = -T::one();
        r[2 * v + 1] = x[idx(v, P_IN)] - x[idx(v, P_OUT)];
        a[(2 * v + 1, idx(v, P_IN))] = T::one();
        a[(2 * v + 1, idx(v, P_OUT))] = -T::one();
    }
    let kd = step.rate_derivative();
    let base = 2 * nv;
    for (j, law) in laws.iter().enumerate() {
        let inlet = net.junction_inlet(j);
        let outs = net.junction_outlets(j);
        let row = base + 3 * j;
        r[row] = x[idx(inlet, Q_OUT)] - x[idx(outs[0], Q_IN)] - x[idx(outs[1], Q_IN)];
        a[(row, idx(inlet, Q_OUT))] = T::one();
        a[(row, idx(outs[0], Q_IN))] = -T::one();
        a[(row, idx(outs[1], Q_IN))] = -T::one();
        for k in 0..2 {
            let c = outs[k];
            let qi = idx(c, Q_IN);
            let q = x[qi];
            let dq = step.rate(x, qi);
            let m = row + 1 + k;
            r[m] = x[idx(inlet, P_OUT)] - x[idx(c, P_IN)] - law[k].drop(q, dq);
            a[(m, idx(inlet, P_OUT))] = T::one();
            a[(m, idx(c, P_IN))] = -T::one();
            a[(m, qi)] = -(law[k].d_flow(q) + law[k].d_rate() * kd);
        }
    }
    let row = base + 3 * laws.len();
    r[row] = x[idx(net.root(), Q_IN)] - step.inflow;
    a[(row, idx(net.root(), Q_IN))] = T::one();
    for (k, v) in net.terminal_vessels().enumerate() {
        let (rb, pd) = net.terminal_bc(v).expect("terminal vessel has a resistance condition");
        let m = row + 1 + k;
        r[m] = x[idx(v, P_OUT)] - rb * x[idx(v, Q_OUT)] - pd;
        a[(m, idx(v, P_OUT))] = T::one();
        a[(m, idx(v, Q_OUT))] = -rb;
    }
    (r, a)
}

/// Residual of the junction-law system: vessels as wires, junction mass
/// conservation, one pressure-drop law per junction outlet, inflow and
/// terminal resistance conditions.
pub fn assemble_junction_residual<T: Scalar>(
    net: &VascularNetwork<T>,
    kind: ModelKind,
    x: &[T],
    step: &Step<T>,
) -> Result<Vec<T>> {
    let laws = outlet_laws(net, kind)?;
    Ok(assemble(net, &laws, x, step).0)
}

/// Newton solve of the junction-law system, steady or backward Euler.
pub fn solve_junction_newton<T: Scalar>(
    net: &VascularNetwork<T>,
    kind: ModelKind,
    config: &SolverConfig<T>,
) -> Result<Solution<T>> {
    config.validate()?;
    let laws = outlet_laws(net, kind)?;
    let times = config.times();
    let mut x = super::opt::initial_state(net, config)?;
    let mut states: Vec<Vec<T>> = Vec::with_capacity(times.len());
    let mut diagnostics = Vec::with_capacity(times.len());
    for (n, &t) in times.iter().enumerate() {
        let q = net.inflow().at(t)?;
        let prev = states.last().cloned();
        let step = Step {
            inflow: q,
            previous: prev.as_deref().map(|p| (p, config.dt)),
        };
        let out = newton(|x| assemble(net, &laws, x, &step), &mut x, config.newton_tolerance, config.max_iterations)
            .map_err(|e| match e {
                Error::Convergence(m) if config.mode == Mode::Transient => {
                    Error::Convergence(format!("time step {n} (t = {t}): {m}"))
                }
                other => other,
            })?;
        diagnostics.push(StepDiagnostics::newton(t.as_f64(), &out));
        states.push(x.clone());
    }
    Ok(Solution {
        engine: Engine::JunctionNewton(kind),
        config: config.clone(),
        table: SolutionTable::new(net, times, states),
        diagnostics,
        objective_scale: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{
        BifurcationDefinition, BoundaryCondition, Fluid, Inflow, Junction, NetworkOptions, VesselSpec,
    };

    /// Single junction with R_lin = 1, R_quad = 0.01, equal outlets, terminal R = 100.
    pub(crate) fn hand_junction(kind: ModelKind) -> VascularNetwork<f64> {
        let mut net = VascularNetwork::new(
            Fluid::blood(),
            (0..3).map(|i| VesselSpec::new(i, 1.0, 0.5)).collect(),
            vec![Junction::new(0, 0, [1, 2], [0.4, 0.4])],
            vec![
                (0, BoundaryCondition::Inflow(Inflow::Steady(10.0))),
                (1, BoundaryCondition::Resistance { resistance: 100.0, distal_pressure: 0.0 }),
                (2, BoundaryCondition::Resistance { resistance: 100.0, distal_pressure: 0.0 }),
            ],
            BifurcationDefinition::FullBranch,
            NetworkOptions::default(),
        )
        .unwrap();
        for k in 0..2 {
            let c = match kind {
                ModelKind::Rri => CoefficientSet::rri(1.0, 0.01, 0.0),
                ModelKind::Ri => CoefficientSet::ri(1.0, 0.0),
            };
            net.set_outlet_coefficients(0, k, c).unwrap();
        }
        net.set_flow_split(0, [0.5, 0.5]).unwrap();
        net
    }

    #[test]
    fn hand_junction_solution() {
        let net = hand_junction(ModelKind::Rri);
        let s = solve_junction_newton(&net, ModelKind::Rri, &SolverConfig::steady()).unwrap();
        let x = s.last();
        assert!((x[idx(1, Q_IN)] - 5.0).abs() < 1e-12);
        assert!((x[idx(1, P_IN)] - 500.0).abs() < 1e-10);
        assert!((x[idx(0, P_OUT)] - 505.25).abs() < 1e-10);
        assert!((x[idx(0, P_IN)] - 505.25).abs() < 1e-10);
    }

    #[test]
    fn missing_coefficients_reported() {
        let net = hand_junction(ModelKind::Rri);
        let err = solve_junction_newton(&net, ModelKind::Ri, &SolverConfig::steady()).unwrap_err();
        assert!(matches!(err, Error::MissingJunctionData { outlet: 1, .. }));
    }
}
