use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::VascularNetwork;
use crate::scalar::Scalar;
use crate::solver::{idx, SolutionTable, P_IN, P_OUT, Q_IN, Q_OUT};

/// Barye per mmHg.
pub const BA_PER_MMHG: f64 = 1333.22;

/// Inlet-pressure error against a reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureError {
    /// Largest |P_in − P_in,ref| over time, mmHg.
    pub absolute: f64,
    /// `absolute` over the largest |P_in,ref − datum|.
    pub relative: f64,
    /// Time average of |P_in − P_in,ref|, mmHg.
    pub absolute_mean: f64,
    /// `absolute_mean` over the largest |P_in,ref − datum|.
    pub relative_mean: f64,
}

/// Compares the inlet pressure of the root vessel. Both tables must share
/// vessels and time grid; `datum` is the outlet reference pressure, Ba.
pub fn pressure_error<T: Scalar>(
    net: &VascularNetwork<T>,
    solution: &SolutionTable<T>,
    reference: &SolutionTable<T>,
    datum: T,
) -> Result<PressureError> {
    if solution.vessel_ids != reference.vessel_ids || solution.len() != reference.len() {
        return Err(Error::ShapeMismatch("solution and reference cover different vessels or steps".into()));
    }
    let span = reference
        .times
        .iter()
        .fold(T::zero(), |m, t| m.max(t.abs()))
        .max(T::one());
    if let Some(n) = (0..solution.len())
        .find(|&n| (solution.times[n] - reference.times[n]).abs() > T::lit(1e-9) * span)
    {
        return Err(Error::ShapeMismatch(format!("time grids differ at step {n}")));
    }
    let root = net.root();
    let p = solution.series(root, P_IN);
    let r = reference.series(root, P_IN);
    let range = r.iter().fold(T::zero(), |m, &v| m.max((v - datum).abs())).as_f64();
    if range == 0.0 {
        return Err(Error::InvalidParameter(
            "reference inlet pressure equals the datum; relative error undefined".into(),
        ));
    }
    let diffs: Vec<f64> = p.iter().zip(&r).map(|(a, b)| (*a - *b).abs().as_f64()).collect();
    let max = diffs.iter().fold(0.0f64, |m, &d| m.max(d));
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    Ok(PressureError {
        absolute: max / BA_PER_MMHG,
        relative: max / range,
        absolute_mean: mean / BA_PER_MMHG,
        relative_mean: mean / range,
    })
}

/// Junction statistics averaged per depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthStatistics {
    /// Number of junctions upstream of the junctions in this row.
    pub depth: usize,
    pub junctions: usize,
    /// Inlet flow over tree inlet flow.
    pub mean_normalized_flow: f64,
    /// Inlet Reynolds number over tree inlet Reynolds number.
    pub mean_normalized_reynolds: f64,
    /// Mean |P − P_ref| at the junction inlets, mmHg.
    pub pressure_error: Option<f64>,
    /// Mean relative error of the outlet resistances ΔP/Q.
    pub resistance_error: Option<f64>,
}

fn reynolds<T: Scalar>(net: &VascularNetwork<T>, v: usize, q: T) -> f64 {
    let vessel = &net.vessels()[v];
    let f = net.fluid();
    (f.density * (q / vessel.area()) * T::lit(2.0) * vessel.radius() / f.viscosity).as_f64()
}

/// Outlet resistance `ΔP/Q` of outlet `k` of junction `j`.
fn outlet_resistance<T: Scalar>(net: &VascularNetwork<T>, x: &[T], j: usize, k: usize) -> f64 {
    let c = net.junction_outlets(j)[k];
    let dp = x[idx(net.junction_inlet(j), P_OUT)] - x[idx(c, P_IN)];
    (dp / x[idx(c, Q_IN)]).as_f64()
}

/// Per-depth flow, Reynolds number and (with a reference state) error
/// statistics of a steady state.
pub fn depth_statistics<T: Scalar>(net: &VascularNetwork<T>, state: &[T], reference: Option<&[T]>) -> Result<Vec<DepthStatistics>> {
    let n = 4 * net.vessels().len();
    if state.len() != n || reference.is_some_and(|r| r.len() != n) {
        return Err(Error::ShapeMismatch("state does not match the network".into()));
    }
    let root = net.root();
    let q0 = state[idx(root, Q_IN)];
    let re0 = reynolds(net, root, q0);
    let mut rows: Vec<DepthStatistics> = Vec::new();
    let mut sums: Vec<[f64; 4]> = Vec::new();
    for j in 0..net.junctions().len() {
        let d = net.junction_depth(j);
        while rows.len() <= d {
            rows.push(DepthStatistics {
                depth: rows.len(),
                junctions: 0,
                mean_normalized_flow: 0.0,
                mean_normalized_reynolds: 0.0,
                pressure_error: None,
                resistance_error: None,
            });
            sums.push([0.0; 4]);
        }
        let inlet = net.junction_inlet(j);
        let q = state[idx(inlet, Q_OUT)];
        rows[d].junctions += 1;
        sums[d][0] += (q / q0).as_f64();
        sums[d][1] += reynolds(net, inlet, q) / re0;
        if let Some(r) = reference {
            sums[d][2] += (state[idx(inlet, P_OUT)] - r[idx(inlet, P_OUT)]).abs().as_f64() / BA_PER_MMHG;
            for k in 0..2 {
                let a = outlet_resistance(net, state, j, k);
                let b = outlet_resistance(net, r, j, k);
                sums[d][3] += ((a - b) / b).abs() / 2.0;
            }
        }
    }
    for (row, s) in rows.iter_mut().zip(&sums) {
        let n = row.junctions.max(1) as f64;
        row.mean_normalized_flow = s[0] / n;
        row.mean_normalized_reynolds = s[1] / n;
        if reference.is_some() {
            row.pressure_error = Some(s[2] / n);
            row.resistance_error = Some(s[3] / n);
        }
    }
    Ok(rows.into_iter().filter(|r| r.junctions > 0).collect())
}
