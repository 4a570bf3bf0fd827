//! Network solvers.
//!
//! Every engine uses the same state layout: four unknowns per vessel,
//! `[P_in, P_out, Q_in, Q_out]` at `4v..4v+4`. The standard engine treats
//! vessels as Poiseuille elements joined by zero-loss junctions. The junction
//! engines treat vessels as wires and place the pressure loss in the
//! junction outlets, either as a square root-finding problem
//! ([`solve_junction_newton`]) or as the constrained least-squares problem
//! ([`solve_opt`]).

mod newton;
mod opt;
mod rootfind;
mod solution;
mod standard;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::VascularNetwork;
use crate::nondim::{CoefficientSet, ModelKind};
use crate::scalar::Scalar;

pub use newton::NewtonOutcome;
pub use opt::{kkt_report, objective_scale, solve_opt, KktStep};
pub use rootfind::{assemble_junction_residual, solve_junction_newton};
pub use solution::{read_solution_csv, Solution, SolutionTable, StepDiagnostics};
pub use standard::{assemble_standard_residual, solve_standard, solve_steady_standard, solve_transient_standard, standard_jacobian};

pub const P_IN: usize = 0;
pub const P_OUT: usize = 1;
pub const Q_IN: usize = 2;
pub const Q_OUT: usize = 3;

/// Position of a vessel quantity in the state vector.
#[inline]
pub fn idx(vessel: usize, field: usize) -> usize {
    4 * vessel + field
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Steady,
    Transient,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "steady" => Ok(Mode::Steady),
            "transient" => Ok(Mode::Transient),
            _ => Err(Error::InvalidParameter(format!("unknown mode {s:?}"))),
        }
    }
}

/// Which equations a solution satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "engine", content = "model")]
pub enum Engine {
    Standard,
    /// Junction pressure-drop laws solved as a square nonlinear system.
    JunctionNewton(ModelKind),
    /// Junction pressure-drop laws enforced through the objective Z.
    Optimization(ModelKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialization {
    /// Start from the standard-model solution (junctions without losses).
    #[default]
    StandardSolution,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SolverConfig<T> {
    pub mode: Mode,
    /// Time step, s. Ignored in steady mode.
    pub dt: T,
    /// Number of time steps after the initial state.
    pub n_steps: usize,
    pub t0: T,
    /// Residual ∞-norm accepted by the Newton engines.
    pub newton_tolerance: T,
    pub max_iterations: usize,
    pub constraint_tolerance: T,
    pub stationarity_tolerance: T,
    pub max_opt_iterations: usize,
    pub initialization: Initialization,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            mode: Mode::Steady,
            dt: T::lit(1e-3),
            n_steps: 0,
            t0: T::zero(),
            newton_tolerance: T::lit(1e-10),
            max_iterations: 50,
            constraint_tolerance: T::lit(1e-8),
            stationarity_tolerance: T::lit(1e-6),
            max_opt_iterations: 200,
            initialization: Initialization::StandardSolution,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn steady() -> Self {
        Self::default()
    }

    pub fn transient(dt: T, n_steps: usize) -> Self {
        Self {
            mode: Mode::Transient,
            dt,
            n_steps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.newton_tolerance,
            self.constraint_tolerance,
            self.stationarity_tolerance,
        ];
        if positive.iter().any(|t| !(*t > T::zero())) || self.max_iterations == 0 || self.max_opt_iterations == 0 {
            return Err(Error::InvalidParameter("solver tolerances and iteration limits must be positive".into()));
        }
        if self.mode == Mode::Transient && !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(Error::InvalidParameter("transient solves need Δt > 0".into()));
        }
        if !self.t0.is_finite() {
            return Err(Error::InvalidParameter("initial time must be finite".into()));
        }
        Ok(())
    }

    /// Output times: `t0` alone in steady mode, `t0 + n·Δt` for `n = 0..=n_steps` otherwise.
    pub fn times(&self) -> Vec<T> {
        match self.mode {
            Mode::Steady => vec![self.t0],
            Mode::Transient => (0..=self.n_steps).map(|n| self.t0 + T::from_count(n) * self.dt).collect(),
        }
    }
}

/// Backward-difference context of one time step.
#[derive(Debug, Clone, Copy)]
pub struct Step<'a, T> {
    /// Prescribed inflow at the current time.
    pub inflow: T,
    /// Previous state and time step; `None` for steady equations.
    pub previous: Option<(&'a [T], T)>,
}

impl<'a, T: Scalar> Step<'a, T> {
    pub fn steady(inflow: T) -> Self {
        Self { inflow, previous: None }
    }

    /// `(x[i] − x_prev[i])/Δt`, or zero in steady equations.
    #[inline]
    pub(crate) fn rate(&self, x: &[T], i: usize) -> T {
        match self.previous {
            Some((p, dt)) => (x[i] - p[i]) / dt,
            None => T::zero(),
        }
    }

    /// `∂ rate / ∂ x[i]`.
    #[inline]
    pub(crate) fn rate_derivative(&self) -> T {
        match self.previous {
            Some((_, dt)) => T::one() / dt,
            None => T::zero(),
        }
    }
}

/// Junction coefficients of model `kind` for both outlets of junction `j`.
pub(crate) fn outlet_coefficients<T: Scalar>(
    net: &VascularNetwork<T>,
    j: usize,
    kind: ModelKind,
) -> Result<[CoefficientSet<T>; 2]> {
    let junction = &net.junctions()[j];
    let get = |k: usize| {
        junction.coefficients[k].get(kind).copied().ok_or(Error::MissingJunctionData {
            junction: junction.id,
            outlet: k + 1,
            what: match kind {
                ModelKind::Rri => "RRI coefficients",
                ModelKind::Ri => "RI coefficients",
            },
        })
    };
    Ok([get(0)?, get(1)?])
}

/// Largest junction mass imbalance `|Q_out(inlet) − Q_in(outlet 1) − Q_in(outlet 2)|`.
pub fn junction_mass_imbalance<T: Scalar>(net: &VascularNetwork<T>, x: &[T]) -> T {
    (0..net.junctions().len()).fold(T::zero(), |m, j| {
        let [a, b] = net.junction_outlets(j);
        let r = x[idx(net.junction_inlet(j), Q_OUT)] - x[idx(a, Q_IN)] - x[idx(b, Q_IN)];
        m.max(r.abs())
    })
}

/// Largest `|Q_in − Q_out|` over vessels.
pub fn vessel_flow_imbalance<T: Scalar>(x: &[T]) -> T {
    x.chunks_exact(4).fold(T::zero(), |m, v| m.max((v[Q_IN] - v[Q_OUT]).abs()))
}

/// Solves with the requested engine.
pub fn solve<T: Scalar>(net: &VascularNetwork<T>, engine: Engine, config: &SolverConfig<T>) -> Result<Solution<T>> {
    match engine {
        Engine::Standard => solve_standard(net, config),
        Engine::JunctionNewton(kind) => solve_junction_newton(net, kind, config),
        Engine::Optimization(kind) => solve_opt(net, kind, config),
    }
}
