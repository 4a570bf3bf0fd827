//! Junction coefficients fitted inside a tree from a sweep of steady
//! reference solutions, and the errors of the re-solved model.

use serde::{Deserialize, Serialize};

use super::errors::BA_PER_MMHG;
use crate::datagen::flow_for_reynolds;
use crate::error::{Error, Result};
use crate::linalg::{least_squares, Matrix};
use crate::network::{BifurcationDefinition, Inflow, VascularNetwork};
use crate::nondim::{CoefficientSet, ModelKind};
use crate::scalar::Scalar;
use crate::solver::{idx, solve_opt, SolverConfig, P_IN, P_OUT, Q_IN, Q_OUT};

/// Inlet Reynolds numbers of the default steady sweep.
pub const DEFAULT_REYNOLDS_SWEEP: [f64; 4] = [600.0, 1300.0, 2700.0, 5500.0];

/// One steady reference solution of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint<T> {
    pub reynolds: T,
    pub inflow: T,
    /// Steady state in the solver layout.
    pub state: Vec<T>,
}

/// Inflow at each inlet Reynolds number, for the root vessel's radius.
pub fn sweep_inflows<T: Scalar>(net: &VascularNetwork<T>, reynolds: &[T]) -> Vec<T> {
    let r = net.vessels()[net.root()].radius();
    reynolds.iter().map(|&re| flow_for_reynolds(re, r, net.fluid())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct OutletFit<T> {
    pub junction: usize,
    pub outlet: usize,
    pub coefficients: CoefficientSet<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedPoint {
    pub reynolds: f64,
    pub inflow: f64,
    pub inlet_pressure: f64,
    pub reference_inlet_pressure: f64,
    /// |P_in − P_in,ref|, mmHg.
    pub absolute_error: f64,
    /// |P_in − P_in,ref| / |P_in,ref − datum|.
    pub relative_error: f64,
}

/// Fitted coefficients and re-solve errors for one bifurcation definition and model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TreeFit<T> {
    pub definition: BifurcationDefinition,
    pub kind: ModelKind,
    pub outlets: Vec<OutletFit<T>>,
    pub points: Vec<ResolvedPoint>,
    /// Mean relative inlet-pressure error over the sweep.
    pub relative_error: f64,
    /// Mean absolute inlet-pressure error over the sweep, mmHg.
    pub total_error: f64,
}

/// Junction pressure drop of outlet `k` net of the residual Poiseuille segment.
fn junction_drop<T: Scalar>(net: &VascularNetwork<T>, x: &[T], j: usize, k: usize) -> (T, T) {
    let c = net.junction_outlets(j)[k];
    let q = x[idx(c, Q_IN)];
    let (r_seg, _) = net.residual_elements(j, k);
    (q, x[idx(net.junction_inlet(j), P_OUT)] - x[idx(c, P_IN)] - r_seg * q)
}

/// Least-squares fit of `ΔP = R_lin Q + R_quad Q²` (RRI) or `ΔP = R_lin Q`
/// (RI) per junction outlet across the sweep. Inductance is zero.
pub fn fit_outlets<T: Scalar>(net: &VascularNetwork<T>, sweep: &[SweepPoint<T>], kind: ModelKind) -> Result<Vec<OutletFit<T>>> {
    let needed = match kind {
        ModelKind::Rri => 2,
        ModelKind::Ri => 1,
    };
    if sweep.len() < needed {
        return Err(Error::RankDeficient {
            column: format!("{} fits need at least {needed} steady solutions", kind.name()),
        });
    }
    let n = 4 * net.vessels().len();
    if sweep.iter().any(|p| p.state.len() != n) {
        return Err(Error::ShapeMismatch("sweep state does not match the network".into()));
    }
    let mut out = Vec::with_capacity(2 * net.junctions().len());
    for j in 0..net.junctions().len() {
        for k in 0..2 {
            let mut a = Matrix::zeros(sweep.len(), needed);
            let mut b = Vec::with_capacity(sweep.len());
            for (i, p) in sweep.iter().enumerate() {
                let (q, dp) = junction_drop(net, &p.state, j, k);
                a[(i, 0)] = q;
                if needed == 2 {
                    a[(i, 1)] = q * q;
                }
                b.push(dp);
            }
            let names: &[&str] = if needed == 2 { &["Q", "Q^2"] } else { &["Q"] };
            let c = least_squares(&a, &b, names).map_err(|e| match e {
                Error::RankDeficient { column } => Error::RankDeficient {
                    column: format!("junction {} outlet {}: {column}", net.junctions()[j].id, k + 1),
                },
                other => other,
            })?;
            let coefficients = match kind {
                ModelKind::Rri => CoefficientSet::rri(c[0], c[1], T::zero()),
                ModelKind::Ri => CoefficientSet::ri(c[0], T::zero()),
            };
            out.push(OutletFit {
                junction: j,
                outlet: k,
                coefficients,
            });
        }
    }
    Ok(out)
}

/// Fits junction coefficients under `definition`, re-solves each sweep point
/// with the optimization engine using the reference's own flow splits, and
/// reports inlet-pressure errors relative to `datum`.
pub fn fit_tree_coefficients<T: Scalar>(
    net: &VascularNetwork<T>,
    sweep: &[SweepPoint<T>],
    kind: ModelKind,
    definition: BifurcationDefinition,
    datum: T,
) -> Result<TreeFit<T>> {
    let mut net = net.clone();
    net.apply_bifurcation_definition(definition);
    net.clear_coefficients();
    let outlets = fit_outlets(&net, sweep, kind)?;
    for f in &outlets {
        net.set_outlet_coefficients(f.junction, f.outlet, f.coefficients)?;
    }
    let root = net.root();
    let mut points = Vec::with_capacity(sweep.len());
    for p in sweep {
        for j in 0..net.junctions().len() {
            let q_in = p.state[idx(net.junction_inlet(j), Q_OUT)];
            let phi = p.state[idx(net.junction_outlets(j)[0], Q_IN)] / q_in;
            net.set_flow_split(j, [phi, T::one() - phi])?;
        }
        net.set_inflow(Inflow::Steady(p.inflow))?;
        let s = solve_opt(&net, kind, &SolverConfig::steady())?;
        let got = s.last()[idx(root, P_IN)];
        let want = p.state[idx(root, P_IN)];
        let range = (want - datum).abs();
        if range == T::zero() {
            return Err(Error::InvalidParameter("reference inlet pressure equals the datum".into()));
        }
        let err = (got - want).abs();
        points.push(ResolvedPoint {
            reynolds: p.reynolds.as_f64(),
            inflow: p.inflow.as_f64(),
            inlet_pressure: got.as_f64(),
            reference_inlet_pressure: want.as_f64(),
            absolute_error: err.as_f64() / BA_PER_MMHG,
            relative_error: (err / range).as_f64(),
        });
    }
    let n = points.len() as f64;
    Ok(TreeFit {
        definition,
        kind,
        outlets,
        relative_error: points.iter().map(|p| p.relative_error).sum::<f64>() / n,
        total_error: points.iter().map(|p| p.absolute_error).sum::<f64>() / n,
        points,
    })
}

/// Relative and total inlet-pressure errors for every bifurcation definition
/// and both junction models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TreeFitReport<T> {
    pub fits: Vec<TreeFit<T>>,
}

impl<T: Scalar> TreeFitReport<T> {
    pub fn get(&self, definition: BifurcationDefinition, kind: ModelKind) -> Option<&TreeFit<T>> {
        self.fits.iter().find(|f| f.definition == definition && f.kind == kind)
    }

    /// Plain-text table with one column per definition and model.
    pub fn to_table(&self) -> String {
        let mut cols = Vec::new();
        for d in BifurcationDefinition::ALL {
            for k in [ModelKind::Ri, ModelKind::Rri] {
                if let Some(f) = self.get(d, k) {
                    cols.push(f);
                }
            }
        }
        let mut s = String::from("definition       ");
        for f in &cols {
            s += &format!("{:>16}", format!("{}/{}", f.definition.name(), f.kind.name()));
        }
        s += "\nrelative error   ";
        for f in &cols {
            s += &format!("{:>16.6e}", f.relative_error);
        }
        s += "\ntotal error mmHg ";
        for f in &cols {
            s += &format!("{:>16.6e}", f.total_error);
        }
        s.push('\n');
        s
    }
}

pub fn tree_fit_report<T: Scalar>(net: &VascularNetwork<T>, sweep: &[SweepPoint<T>], datum: T) -> Result<TreeFitReport<T>> {
    let mut fits = Vec::new();
    for d in BifurcationDefinition::ALL {
        for k in [ModelKind::Ri, ModelKind::Rri] {
            fits.push(fit_tree_coefficients(net, sweep, k, d, datum)?);
        }
    }
    Ok(TreeFitReport { fits })
}
