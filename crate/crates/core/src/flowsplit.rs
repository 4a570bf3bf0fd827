//! A-priori junction flow splits from the effective resistance of the
//! downstream circuitry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::VascularNetwork;
use crate::scalar::Scalar;

/// Estimated split of one junction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct JunctionSplit<T> {
    pub junction: usize,
    pub outlet_vessels: [usize; 2],
    /// Fraction of the junction inflow leaving through each outlet.
    pub phi: [T; 2],
    /// Effective resistance of each outlet subtree, Ba·s/cm³.
    pub resistance: [T; 2],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SplitEstimate<T> {
    pub junctions: Vec<JunctionSplit<T>>,
}

impl<T: Scalar> SplitEstimate<T> {
    /// Stores the estimated splits in the network's junctions.
    pub fn apply(&self, net: &mut VascularNetwork<T>) -> Result<()> {
        for (j, s) in self.junctions.iter().enumerate() {
            net.set_flow_split(j, s.phi)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("split report serialization cannot fail")
    }
}

fn terminal_resistance<T: Scalar>(net: &VascularNetwork<T>, v: usize) -> Result<T> {
    let (r, pd) = net.terminal_bc(v).ok_or_else(|| {
        Error::Connectivity(format!(
            "vessel {} has neither a downstream junction nor a resistance boundary condition",
            net.vessels()[v].id()
        ))
    })?;
    if pd != T::zero() {
        return Err(Error::Unsupported(format!(
            "vessel {}: flow splits from effective resistance require zero distal pressure (found {pd})",
            net.vessels()[v].id()
        )));
    }
    Ok(r)
}

/// Effective resistance seen at the inlet of vessel `v`: its Poiseuille
/// resistance in series with either its terminal resistance or the parallel
/// combination of its daughter subtrees. Stenosis losses are not included.
pub fn effective_resistance<T: Scalar>(net: &VascularNetwork<T>, v: usize) -> Result<T> {
    let own = net.vessels()[v].resistance;
    match net.downstream_junction(v) {
        None => Ok(own + terminal_resistance(net, v)?),
        Some(j) => {
            let [a, b] = net.junction_outlets(j);
            let ra = effective_resistance(net, a)?;
            let rb = effective_resistance(net, b)?;
            Ok(own + ra * rb / (ra + rb))
        }
    }
}

/// Split estimate for every junction, `φ_1 = R_2/(R_1 + R_2)`.
pub fn estimate_flow_splits<T: Scalar>(net: &VascularNetwork<T>) -> Result<SplitEstimate<T>> {
    let n = net.vessels().len();
    let mut eff: Vec<Option<T>> = vec![None; n];
    // Deepest junctions first so each subtree is reduced once.
    for &j in net.junction_order().iter().rev() {
        for v in net.junction_outlets(j) {
            if net.downstream_junction(v).is_none() {
                eff[v] = Some(net.vessels()[v].resistance + terminal_resistance(net, v)?);
            }
        }
        let [a, b] = net.junction_outlets(j).map(|v| eff[v].expect("daughter reduced before parent"));
        let inlet = net.junction_inlet(j);
        eff[inlet] = Some(net.vessels()[inlet].resistance + a * b / (a + b));
    }
    let junctions = (0..net.junctions().len())
        .map(|j| {
            let outs = net.junction_outlets(j);
            let r = outs.map(|v| eff[v].expect("all outlets reduced"));
            let phi1 = r[1] / (r[0] + r[1]);
            JunctionSplit {
                junction: net.junctions()[j].id,
                outlet_vessels: outs.map(|v| net.vessels()[v].id()),
                phi: [phi1, T::one() - phi1],
                resistance: r,
            }
        })
        .collect();
    Ok(SplitEstimate { junctions })
}

/// Estimates and stores the splits of every junction.
pub fn populate_flow_splits<T: Scalar>(net: &mut VascularNetwork<T>) -> Result<SplitEstimate<T>> {
    let est = estimate_flow_splits(net)?;
    est.apply(net)?;
    Ok(est)
}
