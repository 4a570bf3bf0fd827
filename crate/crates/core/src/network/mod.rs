//! Directed-tree circuit model of a vascular network.
//!
//! A network is a binary tree of [`Vessel`]s joined by [`Junction`]s. The root
//! vessel carries the single inflow boundary condition and every terminal
//! vessel ends in a resistance boundary condition. Element values (Poiseuille
//! resistance, inductance, stenosis loss) are derived once at construction.

mod bifurcation;
mod elements;
mod generate;
pub(crate) mod schema;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nondim::{CoefficientSet, ModelKind};
use crate::scalar::Scalar;

pub use bifurcation::BifurcationDefinition;
pub use elements::{length_correction, poiseuille_elements, stenosis_resistance};
pub(crate) use elements::segment_elements;
pub use generate::{generate_random_tree, generate_symmetric_tree, TreeSpec};
pub use schema::{load_network, network_from_json, network_to_json, save_network};

/// Newtonian fluid properties in CGS units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fluid<T> {
    /// Dynamic viscosity, g/(cm·s).
    #[serde(rename = "mu")]
    pub viscosity: T,
    /// Density, g/cm³.
    #[serde(rename = "rho")]
    pub density: T,
}

impl<T: Scalar> Fluid<T> {
    pub fn new(viscosity: T, density: T) -> Result<Self> {
        if !(viscosity > T::zero()) || !(density > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "fluid viscosity {viscosity} and density {density} must be positive"
            )));
        }
        Ok(Self { viscosity, density })
    }

    /// Blood: μ = 0.04 g/(cm·s), ρ = 1.06 g/cm³.
    pub fn blood() -> Self {
        Self {
            viscosity: T::lit(0.04),
            density: T::lit(1.06),
        }
    }
}

impl<T: Scalar> Default for Fluid<T> {
    fn default() -> Self {
        Self::blood()
    }
}

/// Element-construction options applied to every vessel of a network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkOptions<T> {
    /// Vessel capacitance, cm³/Ba. Kept small: walls are rigid.
    pub capacitance: T,
    /// Stenosis coefficient used when a stenosis omits `kt`.
    pub default_kt: T,
    /// Fraction of each daughter branch attributed to the junction under the no-branch definition.
    pub no_branch_fraction: T,
}

impl<T: Scalar> Default for NetworkOptions<T> {
    fn default() -> Self {
        Self {
            capacitance: T::lit(1e-8),
            default_kt: T::lit(1.52),
            no_branch_fraction: T::lit(0.1),
        }
    }
}

/// Geometric input of a vessel, as read from a network file.
#[derive(Debug, Clone, PartialEq)]
pub struct VesselSpec<T> {
    pub id: usize,
    pub length: T,
    pub area: T,
    pub stenosis_area: Option<T>,
    pub stenosis_coefficient: Option<T>,
    pub tangent: Option<[T; 3]>,
}

impl<T: Scalar> VesselSpec<T> {
    pub fn new(id: usize, length: T, area: T) -> Self {
        Self {
            id,
            length,
            area,
            stenosis_area: None,
            stenosis_coefficient: None,
            tangent: None,
        }
    }
}

/// A vessel with its derived lumped elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Vessel<T> {
    pub spec: VesselSpec<T>,
    pub resistance: T,
    pub inductance: T,
    pub capacitance: T,
    pub stenosis_resistance: T,
}

impl<T: Scalar> Vessel<T> {
    pub fn id(&self) -> usize {
        self.spec.id
    }

    pub fn length(&self) -> T {
        self.spec.length
    }

    pub fn area(&self) -> T {
        self.spec.area
    }

    pub fn radius(&self) -> T {
        (self.spec.area / T::PI()).sqrt()
    }
}

/// Junction coefficients for one outlet; either model may be absent.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OutletCoefficients<T> {
    pub rri: Option<CoefficientSet<T>>,
    pub ri: Option<CoefficientSet<T>>,
}

impl<T: Scalar> OutletCoefficients<T> {
    pub fn get(&self, kind: ModelKind) -> Option<&CoefficientSet<T>> {
        match kind {
            ModelKind::Rri => self.rri.as_ref(),
            ModelKind::Ri => self.ri.as_ref(),
        }
    }
}

/// A two-outlet junction. Vessel references are ids as given in the input.
#[derive(Debug, Clone, PartialEq)]
pub struct Junction<T> {
    pub id: usize,
    pub inlet: usize,
    pub outlets: [usize; 2],
    /// Outlet angles relative to the inlet direction, radians in `[0, π/2]`.
    pub angles: [T; 2],
    /// Flow fraction leaving through each outlet.
    pub flow_split: Option<[T; 2]>,
    pub coefficients: [OutletCoefficients<T>; 2],
    /// Length of each daughter branch attributed to the junction.
    pub(crate) attributed: [T; 2],
}

impl<T: Scalar> Junction<T> {
    pub fn new(id: usize, inlet: usize, outlets: [usize; 2], angles: [T; 2]) -> Self {
        Self {
            id,
            inlet,
            outlets,
            angles,
            flow_split: None,
            coefficients: Default::default(),
            attributed: [T::zero(); 2],
        }
    }

    pub fn attributed_lengths(&self) -> [T; 2] {
        self.attributed
    }
}

/// Prescribed inflow at the root vessel inlet, cm³/s.
#[derive(Debug, Clone, PartialEq)]
pub enum Inflow<T> {
    Steady(T),
    Series { time: Vec<T>, flow: Vec<T> },
}

impl<T: Scalar> Inflow<T> {
    /// Inflow at time `t`; series are linearly interpolated and must cover `t`.
    pub fn at(&self, t: T) -> Result<T> {
        match self {
            Inflow::Steady(q) => Ok(*q),
            Inflow::Series { time, flow } => {
                let n = time.len();
                let span = (time[n - 1] - time[0]).abs();
                let slack = span * T::lit(1e-12);
                if t < time[0] - slack || t > time[n - 1] + slack {
                    return Err(Error::InvalidParameter(format!(
                        "time {t} outside the inflow series [{}, {}]",
                        time[0],
                        time[n - 1]
                    )));
                }
                let k = time.partition_point(|&x| x <= t).clamp(1, n - 1);
                let (t0, t1) = (time[k - 1], time[k]);
                let w = ((t - t0) / (t1 - t0)).max(T::zero()).min(T::one());
                Ok(flow[k - 1] + (flow[k] - flow[k - 1]) * w)
            }
        }
    }

    /// Largest inflow magnitude.
    pub fn peak(&self) -> T {
        match self {
            Inflow::Steady(q) => q.abs(),
            Inflow::Series { flow, .. } => flow.iter().fold(T::zero(), |m, q| m.max(q.abs())),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Inflow::Series { time, flow } = self {
            if time.len() != flow.len() || time.len() < 2 {
                return Err(Error::Schema(
                    "inflow series needs matching t and Q arrays of length >= 2".into(),
                ));
            }
            if let Some(i) = time.windows(2).position(|w| !(w[1] > w[0])) {
                return Err(Error::Schema(format!(
                    "inflow series time must be strictly increasing (sample {})",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition<T> {
    Inflow(Inflow<T>),
    /// `P_out = resistance · Q_out + distal_pressure`
    Resistance { resistance: T, distal_pressure: T },
}

/// Resolved connectivity, all in vessel/junction *indices*.
#[derive(Debug, Clone, PartialEq)]
struct Topology {
    root: usize,
    vessel_index: HashMap<usize, usize>,
    junction_inlet: Vec<usize>,
    junction_outlets: Vec<[usize; 2]>,
    /// Junction feeding each vessel, with the outlet slot.
    upstream: Vec<Option<(usize, usize)>>,
    /// Junction at each vessel's downstream end.
    downstream: Vec<Option<usize>>,
    junction_depth: Vec<usize>,
    /// Junction indices in breadth-first order from the root.
    order: Vec<usize>,
}

/// Validated vascular tree.
#[derive(Debug, Clone, PartialEq)]
pub struct VascularNetwork<T> {
    fluid: Fluid<T>,
    options: NetworkOptions<T>,
    vessels: Vec<Vessel<T>>,
    junctions: Vec<Junction<T>>,
    inflow: Inflow<T>,
    /// Terminal boundary condition per vessel index: `(resistance, distal pressure)`.
    terminal: Vec<Option<(T, T)>>,
    definition: BifurcationDefinition,
    topo: Topology,
}

impl<T: Scalar> VascularNetwork<T> {
    /// Validates connectivity, derives element values and applies the
    /// bifurcation definition.
    pub fn new(
        fluid: Fluid<T>,
        vessels: Vec<VesselSpec<T>>,
        junctions: Vec<Junction<T>>,
        boundary_conditions: Vec<(usize, BoundaryCondition<T>)>,
        definition: BifurcationDefinition,
        options: NetworkOptions<T>,
    ) -> Result<Self> {
        let fluid = Fluid::new(fluid.viscosity, fluid.density)?;
        if !(options.capacitance >= T::zero()) {
            return Err(Error::InvalidParameter("capacitance must be non-negative".into()));
        }
        if !(options.no_branch_fraction > T::zero() && options.no_branch_fraction <= T::one()) {
            return Err(Error::InvalidParameter("no-branch fraction must lie in (0, 1]".into()));
        }
        if vessels.is_empty() {
            return Err(Error::Schema("network has no vessels".into()));
        }

        let mut vessel_index = HashMap::new();
        for (i, v) in vessels.iter().enumerate() {
            if vessel_index.insert(v.id, i).is_some() {
                return Err(Error::DuplicateId { kind: "vessel", id: v.id });
            }
        }
        let built = vessels
            .into_iter()
            .map(|spec| build_vessel(spec, &fluid, &options))
            .collect::<Result<Vec<_>>>()?;

        let mut junction_ids = HashMap::new();
        for j in &junctions {
            if junction_ids.insert(j.id, ()).is_some() {
                return Err(Error::DuplicateId { kind: "junction", id: j.id });
            }
        }

        let nv = built.len();
        let lookup = |jid: usize, vid: usize| {
            vessel_index.get(&vid).copied().ok_or_else(|| {
                Error::Connectivity(format!("junction {jid} references unknown vessel {vid}"))
            })
        };
        let mut upstream = vec![None; nv];
        let mut downstream = vec![None; nv];
        let mut junction_inlet = Vec::with_capacity(junctions.len());
        let mut junction_outlets = Vec::with_capacity(junctions.len());
        for (ji, j) in junctions.iter().enumerate() {
            for (k, a) in j.angles.iter().enumerate() {
                if !(*a >= T::zero() && *a <= T::FRAC_PI_2()) {
                    return Err(Error::InvalidGeometry(format!(
                        "junction {} outlet {} angle {a} outside [0, π/2]",
                        j.id,
                        k + 1
                    )));
                }
            }
            let inlet = lookup(j.id, j.inlet)?;
            let outs = [lookup(j.id, j.outlets[0])?, lookup(j.id, j.outlets[1])?];
            if outs[0] == outs[1] || outs.contains(&inlet) {
                return Err(Error::Connectivity(format!(
                    "junction {} must join three distinct vessels",
                    j.id
                )));
            }
            if downstream[inlet].replace(ji).is_some() {
                return Err(Error::Connectivity(format!(
                    "vessel {} feeds more than one junction",
                    j.inlet
                )));
            }
            for (k, &o) in outs.iter().enumerate() {
                if upstream[o].replace((ji, k)).is_some() {
                    return Err(Error::Connectivity(format!(
                        "vessel {} is an outlet of more than one junction",
                        built[o].id()
                    )));
                }
            }
            junction_inlet.push(inlet);
            junction_outlets.push(outs);
        }

        let roots: Vec<usize> = (0..nv).filter(|&v| upstream[v].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::Connectivity(format!(
                "expected exactly one inlet vessel, found {}",
                roots.len()
            )));
        }
        let root = roots[0];

        // Breadth-first walk; every vessel must be reached exactly once.
        let mut seen = vec![false; nv];
        let mut order = Vec::with_capacity(junctions.len());
        let mut junction_depth = vec![0; junctions.len()];
        let mut queue = std::collections::VecDeque::from([(root, 0usize)]);
        while let Some((v, depth)) = queue.pop_front() {
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::Connectivity(format!("cycle through vessel {}", built[v].id())));
            }
            if let Some(j) = downstream[v] {
                order.push(j);
                junction_depth[j] = depth;
                for &o in &junction_outlets[j] {
                    queue.push_back((o, depth + 1));
                }
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::Connectivity(format!(
                "vessel {} is not reachable from the inlet",
                built[v].id()
            )));
        }

        let mut inflow = None;
        let mut terminal = vec![None; nv];
        for (vid, bc) in boundary_conditions {
            let v = *vessel_index.get(&vid).ok_or_else(|| {
                Error::Connectivity(format!("boundary condition references unknown vessel {vid}"))
            })?;
            match bc {
                BoundaryCondition::Inflow(q) => {
                    if v != root {
                        return Err(Error::Connectivity(format!(
                            "inflow boundary condition on vessel {vid}, which is not the inlet vessel"
                        )));
                    }
                    q.validate()?;
                    if inflow.replace(q).is_some() {
                        return Err(Error::Schema("more than one inflow boundary condition".into()));
                    }
                }
                BoundaryCondition::Resistance {
                    resistance,
                    distal_pressure,
                } => {
                    if !(resistance >= T::zero()) || !distal_pressure.is_finite() {
                        return Err(Error::InvalidParameter(format!(
                            "vessel {vid}: resistance {resistance} must be non-negative"
                        )));
                    }
                    if downstream[v].is_some() {
                        return Err(Error::Connectivity(format!(
                            "vessel {vid} feeds a junction and cannot carry a resistance boundary condition"
                        )));
                    }
                    if terminal[v].replace((resistance, distal_pressure)).is_some() {
                        return Err(Error::Schema(format!(
                            "vessel {vid} has more than one resistance boundary condition"
                        )));
                    }
                }
            }
        }
        let inflow = inflow.ok_or(Error::MissingInflow)?;
        if let Some(v) = (0..nv).find(|&v| downstream[v].is_none() && terminal[v].is_none()) {
            return Err(Error::Connectivity(format!(
                "terminal vessel {} has no resistance boundary condition",
                built[v].id()
            )));
        }

        for j in &junctions {
            if let Some(s) = j.flow_split {
                check_split(j.id, s)?;
            }
        }

        let mut net = Self {
            fluid,
            options,
            vessels: built,
            junctions,
            inflow,
            terminal,
            definition,
            topo: Topology {
                root,
                vessel_index,
                junction_inlet,
                junction_outlets,
                upstream,
                downstream,
                junction_depth,
                order,
            },
        };
        net.apply_bifurcation_definition(definition);
        Ok(net)
    }

    pub fn fluid(&self) -> &Fluid<T> {
        &self.fluid
    }

    pub fn options(&self) -> &NetworkOptions<T> {
        &self.options
    }

    pub fn vessels(&self) -> &[Vessel<T>] {
        &self.vessels
    }

    pub fn junctions(&self) -> &[Junction<T>] {
        &self.junctions
    }

    pub fn inflow(&self) -> &Inflow<T> {
        &self.inflow
    }

    pub fn set_inflow(&mut self, inflow: Inflow<T>) -> Result<()> {
        inflow.validate()?;
        self.inflow = inflow;
        Ok(())
    }

    pub fn bifurcation_definition(&self) -> BifurcationDefinition {
        self.definition
    }

    /// Index of the inlet vessel.
    pub fn root(&self) -> usize {
        self.topo.root
    }

    pub fn vessel_index(&self, id: usize) -> Option<usize> {
        self.topo.vessel_index.get(&id).copied()
    }

    /// Inlet vessel index of junction `j`.
    pub fn junction_inlet(&self, j: usize) -> usize {
        self.topo.junction_inlet[j]
    }

    /// Outlet vessel indices of junction `j`.
    pub fn junction_outlets(&self, j: usize) -> [usize; 2] {
        self.topo.junction_outlets[j]
    }

    /// Junction (and outlet slot) feeding vessel `v`; `None` for the root.
    pub fn upstream_junction(&self, v: usize) -> Option<(usize, usize)> {
        self.topo.upstream[v]
    }

    /// Junction at the downstream end of vessel `v`; `None` for terminal vessels.
    pub fn downstream_junction(&self, v: usize) -> Option<usize> {
        self.topo.downstream[v]
    }

    /// Terminal resistance boundary condition `(R, P_dist)` of vessel `v`.
    pub fn terminal_bc(&self, v: usize) -> Option<(T, T)> {
        self.terminal[v]
    }

    pub fn terminal_vessels(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vessels.len()).filter(|&v| self.terminal[v].is_some())
    }

    /// Number of junctions upstream of junction `j`.
    pub fn junction_depth(&self, j: usize) -> usize {
        self.topo.junction_depth[j]
    }

    /// Junction indices ordered from the root downward.
    pub fn junction_order(&self) -> &[usize] {
        &self.topo.order
    }

    pub fn set_terminal_resistance(&mut self, v: usize, resistance: T, distal_pressure: T) -> Result<()> {
        if self.terminal[v].is_none() {
            return Err(Error::Connectivity(format!(
                "vessel {} is not a terminal vessel",
                self.vessels[v].id()
            )));
        }
        if !(resistance >= T::zero()) {
            return Err(Error::InvalidParameter("resistance must be non-negative".into()));
        }
        self.terminal[v] = Some((resistance, distal_pressure));
        Ok(())
    }

    /// Sets the flow split of junction `j`; the two fractions must sum to one.
    pub fn set_flow_split(&mut self, j: usize, split: [T; 2]) -> Result<()> {
        check_split(self.junctions[j].id, split)?;
        self.junctions[j].flow_split = Some(split);
        Ok(())
    }

    pub fn set_outlet_coefficients(&mut self, j: usize, outlet: usize, coeffs: CoefficientSet<T>) -> Result<()> {
        if coeffs.is_dimensionless() {
            return Err(Error::InvalidParameter(
                "network coefficients must be dimensional".into(),
            ));
        }
        let slot = &mut self.junctions[j].coefficients[outlet];
        match coeffs.kind() {
            ModelKind::Rri => slot.rri = Some(coeffs),
            ModelKind::Ri => slot.ri = Some(coeffs),
        }
        Ok(())
    }

    pub fn clear_coefficients(&mut self) {
        for j in &mut self.junctions {
            j.coefficients = Default::default();
        }
    }

    /// Daughter-branch length left as a Poiseuille segment after the junction
    /// has claimed its attributed share.
    pub fn residual_length(&self, j: usize, outlet: usize) -> T {
        let v = self.topo.junction_outlets[j][outlet];
        self.vessels[v].length() - self.junctions[j].attributed[outlet]
    }

    /// Resistance and inductance of the residual Poiseuille segment of an outlet.
    pub fn residual_elements(&self, j: usize, outlet: usize) -> (T, T) {
        let v = self.topo.junction_outlets[j][outlet];
        segment_elements(self.residual_length(j, outlet), self.vessels[v].area(), &self.fluid)
    }

    /// Inlet radius of junction `j`, its characteristic length.
    pub fn junction_inlet_radius(&self, j: usize) -> T {
        self.vessels[self.topo.junction_inlet[j]].radius()
    }
}

fn check_split<T: Scalar>(id: usize, s: [T; 2]) -> Result<()> {
    let ok = s.iter().all(|&p| p > T::zero() && p < T::one())
        && (s[0] + s[1] - T::one()).abs() <= T::lit(1e-12);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "junction {id}: flow split [{}, {}] must be in (0, 1) and sum to 1",
            s[0], s[1]
        )))
    }
}

fn build_vessel<T: Scalar>(spec: VesselSpec<T>, fluid: &Fluid<T>, options: &NetworkOptions<T>) -> Result<Vessel<T>> {
    let (resistance, inductance) = poiseuille_elements(spec.length, spec.area, fluid)
        .map_err(|e| Error::InvalidGeometry(format!("vessel {}: {e}", spec.id)))?;
    let stenosis = match spec.stenosis_area {
        Some(a) => stenosis_resistance(
            spec.area,
            a,
            spec.stenosis_coefficient.unwrap_or(options.default_kt),
            fluid.density,
        )
        .map_err(|e| Error::InvalidGeometry(format!("vessel {}: {e}", spec.id)))?,
        None => T::zero(),
    };
    if let Some(t) = spec.tangent {
        let n = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
        if (n - T::one()).abs() > T::lit(1e-6) {
            return Err(Error::InvalidGeometry(format!(
                "vessel {}: tangent is not a unit vector",
                spec.id
            )));
        }
    }
    Ok(Vessel {
        spec,
        resistance,
        inductance,
        capacitance: options.capacitance,
        stenosis_resistance: stenosis,
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Single vessel l=1, A=1 with inflow `q` and terminal resistance `r_bc`.
    pub fn single_vessel(q: f64, r_bc: f64) -> VascularNetwork<f64> {
        VascularNetwork::new(
            Fluid::blood(),
            vec![VesselSpec::new(0, 1.0, 1.0)],
            vec![],
            vec![
                (0, BoundaryCondition::Inflow(Inflow::Steady(q))),
                (
                    0,
                    BoundaryCondition::Resistance {
                        resistance: r_bc,
                        distal_pressure: 0.0,
                    },
                ),
            ],
            BifurcationDefinition::PartialBranch,
            NetworkOptions::default(),
        )
        .unwrap()
    }
}
