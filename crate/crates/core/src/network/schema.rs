//! JSON network files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    BifurcationDefinition, BoundaryCondition, Fluid, Inflow, Junction, NetworkOptions, OutletCoefficients,
    VascularNetwork, VesselSpec,
};
use crate::error::{Error, Result};
use crate::nondim::CoefficientSet;
use crate::scalar::Scalar;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct NetworkFile<T> {
    #[serde(default = "Fluid::blood")]
    fluid: Fluid<T>,
    vessels: Vec<VesselEntry<T>>,
    #[serde(default)]
    junctions: Vec<JunctionEntry<T>>,
    boundary_conditions: Vec<BcEntry<T>>,
    #[serde(default = "default_definition")]
    bifurcation_definition: BifurcationDefinition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capacitance: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    no_branch_fraction: Option<T>,
}

fn default_definition() -> BifurcationDefinition {
    BifurcationDefinition::PartialBranch
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct VesselEntry<T> {
    id: usize,
    length: T,
    area: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stenosis_area: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kt: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tangent: Option<[T; 3]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct JunctionEntry<T> {
    id: usize,
    inlet_vessel: usize,
    outlet_vessels: Vec<usize>,
    angles: Vec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    flow_split: Option<Vec<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coefficients: Option<Vec<CoefficientEntry<T>>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct CoefficientEntry<T> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rri: Option<RriEntry<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ri: Option<RiEntry<T>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RriEntry<T> {
    r_lin: T,
    r_quad: T,
    l: T,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RiEntry<T> {
    r_lin: T,
    l: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
enum BcKind {
    Flow,
    Resistance,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged, bound = "T: Scalar")]
enum BcValue<T> {
    Number(T),
    Series {
        t: Vec<T>,
        #[serde(rename = "Q")]
        q: Vec<T>,
    },
    Resistance {
        #[serde(rename = "R")]
        r: T,
        #[serde(rename = "Pd", default)]
        pd: T,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct BcEntry<T> {
    vessel_id: usize,
    kind: BcKind,
    value: BcValue<T>,
}

/// Parses and validates a network from JSON text.
pub fn network_from_json<T: Scalar>(text: &str) -> Result<VascularNetwork<T>> {
    let file: NetworkFile<T> = serde_json::from_str(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => Error::Schema(e.to_string()),
        _ => Error::json(text, e),
    })?;
    from_file(file)
}

/// Reads, parses and validates a network file.
pub fn load_network<T: Scalar>(path: impl AsRef<Path>) -> Result<VascularNetwork<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    network_from_json(&text).map_err(|e| match e {
        Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Serializes a network, including any flow splits and coefficients.
pub fn network_to_json<T: Scalar>(net: &VascularNetwork<T>) -> String {
    serde_json::to_string_pretty(&to_file(net)).expect("network serialization cannot fail")
}

pub fn save_network<T: Scalar>(net: &VascularNetwork<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, network_to_json(net)).map_err(|e| Error::io(path, e))
}

fn pair<T: Copy>(v: &[T], jid: usize, what: &str) -> Result<[T; 2]> {
    match v {
        [a, b] => Ok([*a, *b]),
        _ => Err(Error::Schema(format!(
            "junction {jid}: `{what}` must have exactly 2 entries, found {}",
            v.len()
        ))),
    }
}

fn from_file<T: Scalar>(file: NetworkFile<T>) -> Result<VascularNetwork<T>> {
    let mut options = NetworkOptions::default();
    if let Some(c) = file.capacitance {
        options.capacitance = c;
    }
    if let Some(f) = file.no_branch_fraction {
        options.no_branch_fraction = f;
    }
    let vessels = file
        .vessels
        .into_iter()
        .map(|v| VesselSpec {
            id: v.id,
            length: v.length,
            area: v.area,
            stenosis_area: v.stenosis_area,
            stenosis_coefficient: v.kt,
            tangent: v.tangent,
        })
        .collect();

    let mut junctions = Vec::with_capacity(file.junctions.len());
    let mut coefficients = Vec::new();
    for (ji, j) in file.junctions.into_iter().enumerate() {
        let mut junction = Junction::new(
            j.id,
            j.inlet_vessel,
            pair(&j.outlet_vessels, j.id, "outlet_vessels")?,
            pair(&j.angles, j.id, "angles")?,
        );
        if let Some(s) = j.flow_split {
            junction.flow_split = Some(pair(&s, j.id, "flow_split")?);
        }
        if let Some(c) = j.coefficients {
            let [c0, c1] = pair_owned(c, j.id)?;
            coefficients.push((ji, 0, c0));
            coefficients.push((ji, 1, c1));
        }
        junctions.push(junction);
    }

    let mut bcs = Vec::with_capacity(file.boundary_conditions.len());
    for bc in file.boundary_conditions {
        let cond = match (bc.kind, bc.value) {
            (BcKind::Flow, BcValue::Number(q)) => BoundaryCondition::Inflow(Inflow::Steady(q)),
            (BcKind::Flow, BcValue::Series { t, q }) => BoundaryCondition::Inflow(Inflow::Series { time: t, flow: q }),
            (BcKind::Resistance, BcValue::Resistance { r, pd }) => BoundaryCondition::Resistance {
                resistance: r,
                distal_pressure: pd,
            },
            (BcKind::Resistance, BcValue::Number(r)) => BoundaryCondition::Resistance {
                resistance: r,
                distal_pressure: T::zero(),
            },
            (kind, _) => {
                return Err(Error::Schema(format!(
                    "vessel {}: value does not match boundary condition kind {kind:?}",
                    bc.vessel_id
                )))
            }
        };
        bcs.push((bc.vessel_id, cond));
    }

    let mut net = VascularNetwork::new(
        file.fluid,
        vessels,
        junctions,
        bcs,
        file.bifurcation_definition,
        options,
    )?;
    for (j, k, c) in coefficients {
        if let Some(r) = c.rri {
            net.set_outlet_coefficients(j, k, CoefficientSet::rri(r.r_lin, r.r_quad, r.l))?;
        }
        if let Some(r) = c.ri {
            net.set_outlet_coefficients(j, k, CoefficientSet::ri(r.r_lin, r.l))?;
        }
    }
    Ok(net)
}

fn pair_owned<T>(v: Vec<CoefficientEntry<T>>, jid: usize) -> Result<[CoefficientEntry<T>; 2]> {
    let n = v.len();
    v.try_into().map_err(|_| {
        Error::Schema(format!(
            "junction {jid}: `coefficients` must have exactly 2 entries, found {n}"
        ))
    })
}

fn to_file<T: Scalar>(net: &VascularNetwork<T>) -> NetworkFile<T> {
    let vessels = net
        .vessels()
        .iter()
        .map(|v| VesselEntry {
            id: v.spec.id,
            length: v.spec.length,
            area: v.spec.area,
            stenosis_area: v.spec.stenosis_area,
            kt: v.spec.stenosis_coefficient,
            tangent: v.spec.tangent,
        })
        .collect();
    let junctions = net
        .junctions()
        .iter()
        .map(|j| {
            let has_coeffs = j.coefficients.iter().any(|c| c.rri.is_some() || c.ri.is_some());
            JunctionEntry {
                id: j.id,
                inlet_vessel: j.inlet,
                outlet_vessels: j.outlets.to_vec(),
                angles: j.angles.to_vec(),
                flow_split: j.flow_split.map(|s| s.to_vec()),
                coefficients: has_coeffs.then(|| j.coefficients.iter().map(coefficient_entry).collect()),
            }
        })
        .collect();
    let ids: Vec<usize> = net.vessels().iter().map(|v| v.id()).collect();
    let mut bcs = Vec::new();
    let value = match net.inflow() {
        Inflow::Steady(q) => BcValue::Number(*q),
        Inflow::Series { time, flow } => BcValue::Series {
            t: time.clone(),
            q: flow.clone(),
        },
    };
    bcs.push(BcEntry {
        vessel_id: ids[net.root()],
        kind: BcKind::Flow,
        value,
    });
    for v in net.terminal_vessels() {
        let (r, pd) = net.terminal_bc(v).expect("terminal vessel has a boundary condition");
        bcs.push(BcEntry {
            vessel_id: ids[v],
            kind: BcKind::Resistance,
            value: BcValue::Resistance { r, pd },
        });
    }
    let defaults = NetworkOptions::<T>::default();
    let opts = net.options();
    NetworkFile {
        fluid: *net.fluid(),
        vessels,
        junctions,
        boundary_conditions: bcs,
        bifurcation_definition: net.bifurcation_definition(),
        capacitance: (opts.capacitance != defaults.capacitance).then_some(opts.capacitance),
        no_branch_fraction: (opts.no_branch_fraction != defaults.no_branch_fraction).then_some(opts.no_branch_fraction),
    }
}

fn coefficient_entry<T: Scalar>(c: &OutletCoefficients<T>) -> CoefficientEntry<T> {
    CoefficientEntry {
        rri: c.rri.map(|s| RriEntry {
            r_lin: s.r_lin,
            r_quad: s.r_quad(),
            l: s.inductance,
        }),
        ri: c.ri.map(|s| RiEntry {
            r_lin: s.r_lin,
            l: s.inductance,
        }),
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn minimal_single_vessel() {
        let net: VascularNetwork<f64> = network_from_json(SINGLE_VESSEL).unwrap();
        assert_eq!(net.vessels().len(), 1);
        assert_eq!(net.junctions().len(), 0);
        assert!((net.vessels()[0].resistance - 1.005_309_649_148_734).abs() < 1e-14);
    }

    #[test]
    fn two_junction_fixture() {
        let net: VascularNetwork<f64> = network_from_json(TWO_JUNCTIONS).unwrap();
        assert_eq!(net.junctions().len(), 2);
        assert_eq!(net.terminal_vessels().count(), 3);
        let depths: Vec<usize> = (0..2).map(|j| net.junction_depth(j)).collect();
        assert_eq!(depths, vec![0, 1]);
        let outlets: std::collections::BTreeSet<usize> =
            (0..2).flat_map(|j| net.junction_outlets(j)).collect();
        assert_eq!(outlets.len(), 4);
    }

    #[test]
    fn unknown_vessel_is_connectivity_error() {
        let text = TWO_JUNCTIONS.replace("\"outlet_vessels\": [3, 4]", "\"outlet_vessels\": [3, 9]");
        assert!(matches!(network_from_json::<f64>(&text), Err(Error::Connectivity(_))));
    }

    #[test]
    fn syntax_error_reports_offset() {
        let text = &SINGLE_VESSEL[..60];
        match network_from_json::<f64>(text) {
            Err(Error::Parse { offset, .. }) => assert!(offset <= text.len()),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn schema_errors() {
        let text = SINGLE_VESSEL.replace("\"length\"", "\"lenght\"");
        assert!(matches!(network_from_json::<f64>(&text), Err(Error::Schema(_))));
        let text = TWO_JUNCTIONS.replace("[0.3, 0.5]", "[0.3]");
        assert!(matches!(network_from_json::<f64>(&text), Err(Error::Schema(_))));
    }

    #[test]
    fn round_trip_with_coefficients() {
        let mut net: VascularNetwork<f64> = network_from_json(TWO_JUNCTIONS).unwrap();
        net.set_flow_split(0, [0.4, 0.6]).unwrap();
        net.set_outlet_coefficients(1, 1, CoefficientSet::rri(1.5, -0.25, 0.01)).unwrap();
        net.set_outlet_coefficients(1, 0, CoefficientSet::ri(2.5, 0.02)).unwrap();
        let text = network_to_json(&net);
        let back: VascularNetwork<f64> = network_from_json(&text).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn series_inflow_round_trip() {
        let text = SINGLE_VESSEL.replace("\"value\": 10.0", "\"value\": {\"t\": [0.0, 0.5, 1.0], \"Q\": [0.0, 4.0, 0.0]}");
        let net: VascularNetwork<f64> = network_from_json(&text).unwrap();
        assert_eq!(net.inflow().peak(), 4.0);
        let back: VascularNetwork<f64> = network_from_json(&network_to_json(&net)).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_network::<f64>("/nonexistent/net.json").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/net.json"));
    }
}
