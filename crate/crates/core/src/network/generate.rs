//! Symmetric binary trees with daughter radii from Murray's law.

use super::{
    BifurcationDefinition, BoundaryCondition, Fluid, Inflow, Junction, NetworkOptions, VascularNetwork,
    VesselSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Parameters of a synthetic symmetric tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSpec<T> {
    /// Number of bifurcation levels; the tree has `2^depth` terminal vessels.
    pub depth: usize,
    pub inlet_radius: T,
    /// Vessel length as a multiple of its radius.
    pub length_over_radius: T,
    /// Exponent `k` in `r_in^k = r_1^k + r_2^k`.
    pub murray_exponent: T,
    /// Steady inflow, cm³/s.
    pub inflow: T,
    /// Resistance at each terminal vessel. Defaults to `1000 · 2^depth`, so the
    /// parallel combination of the terminals is 1000 Ba·s/cm³.
    pub leaf_resistance: Option<T>,
    pub angles: [T; 2],
    pub fluid: Fluid<T>,
    pub definition: BifurcationDefinition,
    pub options: NetworkOptions<T>,
}

impl<T: Scalar> TreeSpec<T> {
    pub fn new(depth: usize) -> Self {
        Self {
            depth,
            inlet_radius: T::lit(0.5),
            length_over_radius: T::lit(30.0),
            murray_exponent: T::lit(3.0),
            inflow: T::lit(50.0),
            leaf_resistance: None,
            angles: [T::lit(0.5), T::lit(0.5)],
            fluid: Fluid::blood(),
            definition: BifurcationDefinition::PartialBranch,
            options: NetworkOptions::default(),
        }
    }

    pub fn leaf_resistance(&self) -> T {
        self.leaf_resistance
            .unwrap_or_else(|| T::lit(1000.0) * T::lit(2.0).powi(self.depth as i32))
    }
}

/// Full binary tree with vessels numbered in heap order: the children of
/// vessel `v` are `2v+1` and `2v+2`, and junction `v` sits at the end of vessel `v`.
pub fn generate_symmetric_tree<T: Scalar>(spec: &TreeSpec<T>) -> Result<VascularNetwork<T>> {
    if !(spec.inlet_radius > T::zero()) || !(spec.length_over_radius > T::zero()) {
        return Err(Error::InvalidParameter(
            "inlet radius and length/radius ratio must be positive".into(),
        ));
    }
    if !(spec.murray_exponent > T::zero()) {
        return Err(Error::InvalidParameter("Murray exponent must be positive".into()));
    }
    if spec.depth > 20 {
        return Err(Error::InvalidParameter(format!("depth {} is too large", spec.depth)));
    }
    let shrink = T::lit(2.0).powf(-T::one() / spec.murray_exponent);
    let n_vessels = (1usize << (spec.depth + 1)) - 1;
    let n_internal = (1usize << spec.depth) - 1;

    let mut vessels = Vec::with_capacity(n_vessels);
    for v in 0..n_vessels {
        let level = usize::BITS - 1 - (v + 1).leading_zeros();
        let r = spec.inlet_radius * shrink.powi(level as i32);
        vessels.push(VesselSpec::new(v, spec.length_over_radius * r, T::PI() * r * r));
    }
    let junctions = (0..n_internal)
        .map(|v| Junction::new(v, v, [2 * v + 1, 2 * v + 2], spec.angles))
        .collect();
    let mut bcs = vec![(0, BoundaryCondition::Inflow(Inflow::Steady(spec.inflow)))];
    let r_leaf = spec.leaf_resistance();
    bcs.extend((n_internal..n_vessels).map(|v| {
        (
            v,
            BoundaryCondition::Resistance {
                resistance: r_leaf,
                distal_pressure: T::zero(),
            },
        )
    }));
    VascularNetwork::new(spec.fluid, vessels, junctions, bcs, spec.definition, spec.options)
}

/// Full binary tree like [`generate_symmetric_tree`], but each junction
/// splits its inlet cross-section unevenly (Murray's law still holds), and
/// vessel lengths, angles and terminal resistances are jittered. Deterministic in `seed`.
pub fn generate_random_tree<T: Scalar>(spec: &TreeSpec<T>, seed: u64) -> Result<VascularNetwork<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symmetric = generate_symmetric_tree(spec)?;
    let n_vessels = symmetric.vessels().len();
    let n_internal = symmetric.junctions().len();
    let k = spec.murray_exponent;
    let mut radius = vec![spec.inlet_radius; n_vessels];
    for v in 0..n_internal {
        let w = T::lit(rng.gen_range(0.3..0.7));
        radius[2 * v + 1] = radius[v] * w.powf(k.recip());
        radius[2 * v + 2] = radius[v] * (T::one() - w).powf(k.recip());
    }
    let vessels = (0..n_vessels)
        .map(|v| {
            let r = radius[v];
            let length = spec.length_over_radius * r * T::lit(rng.gen_range(0.7..1.3));
            VesselSpec::new(v, length, T::PI() * r * r)
        })
        .collect();
    let junctions = (0..n_internal)
        .map(|v| {
            let angles = [T::lit(rng.gen_range(0.1..1.2)), T::lit(rng.gen_range(0.1..1.2))];
            Junction::new(v, v, [2 * v + 1, 2 * v + 2], angles)
        })
        .collect();
    let mut bcs = vec![(0, BoundaryCondition::Inflow(Inflow::Steady(spec.inflow)))];
    let r_leaf = spec.leaf_resistance();
    for v in n_internal..n_vessels {
        let resistance = r_leaf * T::lit(rng.gen_range(0.5..2.0));
        bcs.push((
            v,
            BoundaryCondition::Resistance {
                resistance,
                distal_pressure: T::zero(),
            },
        ));
    }
    VascularNetwork::new(spec.fluid, vessels, junctions, bcs, spec.definition, spec.options)
}
