//! Geometry → coefficients for the junctions of a network.

use serde::{Deserialize, Serialize};

use super::{CoefficientTag, ModelBundle, OutletRanges};
use crate::datagen::Interval;
use crate::error::{Error, Result};
use crate::network::{length_correction, VascularNetwork};
use crate::nondim::{
    nondimensionalize_geometry, redimensionalize_coeffs, CharacteristicScales, CoefficientSet, DimensionlessGeometry,
    JunctionGeometry, ModelKind,
};
use crate::scalar::Scalar;

/// A geometry entry that fell outside the trained range and was clamped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClampedFeature {
    pub feature: String,
    pub value: f64,
    pub clamped_to: f64,
}

/// Prediction for one junction outlet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct OutletPrediction<T> {
    pub outlet: usize,
    /// Geometry as measured, before clamping.
    pub geometry: DimensionlessGeometry<T>,
    /// Network outputs after inverting the z-normalization.
    pub dimensionless: CoefficientSet<T>,
    /// Final dimensional coefficients, including any length correction.
    pub coefficients: CoefficientSet<T>,
    pub clamped: Vec<ClampedFeature>,
    /// Resistance and inductance added because λ was outside the trained range.
    pub length_correction: (T, T),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct JunctionPrediction<T> {
    pub junction: usize,
    pub kind: ModelKind,
    pub outlets: Vec<OutletPrediction<T>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PredictionReport<T> {
    pub junctions: Vec<JunctionPrediction<T>>,
}

impl<T: Scalar> PredictionReport<T> {
    /// Number of clamped entries over all predictions.
    pub fn clamped_count(&self) -> usize {
        self.junctions
            .iter()
            .flat_map(|j| &j.outlets)
            .map(|o| o.clamped.len())
            .sum()
    }
}

fn clamp<T: Scalar>(name: &str, x: T, iv: &Interval<T>, flags: &mut Vec<ClampedFeature>) -> T {
    let c = x.max(iv.min).min(iv.max);
    if c != x {
        flags.push(ClampedFeature {
            feature: name.into(),
            value: x.as_f64(),
            clamped_to: c.as_f64(),
        });
    }
    c
}

/// Junction geometry as seen by the surrogate: the junction part of each
/// daughter branch under the network's bifurcation definition.
pub fn junction_geometry<T: Scalar>(net: &VascularNetwork<T>, j: usize) -> Result<JunctionGeometry<T>> {
    let junction = &net.junctions()[j];
    let flow_split = junction.flow_split.ok_or(Error::MissingJunctionData {
        junction: junction.id,
        outlet: 1,
        what: "a flow split",
    })?;
    let outs = net.junction_outlets(j);
    let vessels = net.vessels();
    Ok(JunctionGeometry {
        inlet_area: vessels[net.junction_inlet(j)].area(),
        outlet_areas: [vessels[outs[0]].area(), vessels[outs[1]].area()],
        outlet_lengths: junction.attributed_lengths(),
        angles: junction.angles,
        flow_split,
    })
}

/// Dimensional `kind` coefficients of both outlets of junction `j`.
pub fn predict_junction_coeffs<T: Scalar>(
    bundle: &ModelBundle<T>,
    net: &VascularNetwork<T>,
    j: usize,
    kind: ModelKind,
) -> Result<JunctionPrediction<T>> {
    let geom = junction_geometry(net, j)?;
    let l_c = geom.inlet_radius();
    let scales = CharacteristicScales::new(l_c, net.fluid(), bundle.scales_policy.reynolds)?;
    let mut outlets = Vec::with_capacity(2);
    for k in 0..2 {
        let g = nondimensionalize_geometry(&geom, k, &scales)?;
        outlets.push(predict_outlet(bundle, &g, &scales, geom.outlet_areas[k], net, kind)?);
    }
    Ok(JunctionPrediction {
        junction: net.junctions()[j].id,
        kind,
        outlets,
    })
}

fn predict_outlet<T: Scalar>(
    bundle: &ModelBundle<T>,
    g: &DimensionlessGeometry<T>,
    scales: &CharacteristicScales<T>,
    outlet_area: T,
    net: &VascularNetwork<T>,
    kind: ModelKind,
) -> Result<OutletPrediction<T>> {
    let k = g.outlet;
    let r: &OutletRanges<T> = &bundle.ranges.outlets[k];
    let mut clamped = Vec::new();
    let alpha = [
        clamp("alpha_1", g.alpha[0], &r.alpha[0], &mut clamped),
        clamp("alpha_2", g.alpha[1], &r.alpha[1], &mut clamped),
    ];
    let theta = [
        clamp("theta_1", g.theta[0], &r.theta[0], &mut clamped),
        clamp("theta_2", g.theta[1], &r.theta[1], &mut clamped),
    ];
    let phi = clamp("phi", g.phi, &r.phi, &mut clamped);
    let lambda = g.lambda.max(r.lambda.min).min(r.lambda.max);
    let inside = DimensionlessGeometry::new(k, alpha, lambda, theta, phi)?;
    let features = inside.features();

    let mut values = [T::zero(); 3];
    for tag in CoefficientTag::for_outlet(k, kind) {
        let slot = match tag.coefficient {
            super::Coefficient::RLin => 0,
            super::Coefficient::RQuad => 1,
            super::Coefficient::Inductance => 2,
        };
        values[slot] = bundle.predict_dimensionless(tag, &features)?;
    }
    let dimensionless = CoefficientSet::of_kind(kind, values[0], values[1], values[2]).into_dimensionless();
    let base = redimensionalize_coeffs(&dimensionless, scales)?;
    let (dr, dl) = length_correction(g.lambda, r.lambda.min, r.lambda.max, scales.length, outlet_area, net.fluid());
    Ok(OutletPrediction {
        outlet: k,
        geometry: *g,
        dimensionless,
        coefficients: base.with_added_segment(dr, dl),
        clamped,
        length_correction: (dr, dl),
    })
}

/// Predicts `kinds` coefficients for every junction and stores them in the network.
pub fn predict_network<T: Scalar>(
    bundle: &ModelBundle<T>,
    net: &mut VascularNetwork<T>,
    kinds: &[ModelKind],
) -> Result<PredictionReport<T>> {
    let mut report = PredictionReport::default();
    for j in 0..net.junctions().len() {
        for &kind in kinds {
            let p = predict_junction_coeffs(bundle, net, j, kind)?;
            for o in &p.outlets {
                net.set_outlet_coefficients(j, o.outlet, o.coefficients)?;
            }
            report.junctions.push(p);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::bundle::fixtures::random_bundle;
    use crate::network::{generate_symmetric_tree, TreeSpec};

    fn tree(scale: f64) -> VascularNetwork<f64> {
        let mut spec = TreeSpec::new(1);
        spec.inlet_radius = 0.5 * scale;
        let mut net = generate_symmetric_tree(&spec).unwrap();
        net.set_flow_split(0, [0.5, 0.5]).unwrap();
        net
    }

    #[test]
    fn missing_split_is_reported() {
        let net = generate_symmetric_tree(&TreeSpec::new(1)).unwrap();
        let err = predict_junction_coeffs(&random_bundle(1), &net, 0, ModelKind::Rri).unwrap_err();
        assert!(matches!(err, Error::MissingJunctionData { junction: 0, .. }));
    }

    #[test]
    fn scaled_twins_share_dimensionless_predictions() {
        let b = random_bundle(4);
        let p1 = predict_junction_coeffs(&b, &tree(1.0), 0, ModelKind::Rri).unwrap();
        let p2 = predict_junction_coeffs(&b, &tree(2.0), 0, ModelKind::Rri).unwrap();
        for k in 0..2 {
            let a = p1.outlets[k].dimensionless.values();
            let c = p2.outlets[k].dimensionless.values();
            for (x, y) in a.iter().zip(&c) {
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn long_outlet_gets_length_correction() {
        let mut b = random_bundle(5);
        let net = tree(1.0);
        let inside = predict_junction_coeffs(&b, &net, 0, ModelKind::Rri).unwrap();
        let lambda = inside.outlets[0].geometry.lambda;
        b.ranges.outlets[0].lambda.max = lambda - 1.0;
        b.ranges.outlets[0].lambda.min = lambda - 5.0;
        let long = predict_junction_coeffs(&b, &net, 0, ModelKind::Rri).unwrap();
        // λ exceeds λ_max by one, i.e. one characteristic length of extra segment.
        let (dr, dl) = long.outlets[0].length_correction;
        let area = net.vessels()[1].area();
        let l_c = net.junction_inlet_radius(0);
        let fluid = net.fluid();
        let expect_dr = 8.0 * std::f64::consts::PI * fluid.viscosity * l_c / (area * area);
        let expect_dl = fluid.density * l_c / area;
        assert!((dr - expect_dr).abs() <= 1e-12 * expect_dr);
        assert!((dl - expect_dl).abs() <= 1e-12 * expect_dl);
        let clamped_only = long.outlets[0].coefficients.r_lin - dr;
        let scales = CharacteristicScales::with_default_reynolds(l_c, fluid).unwrap();
        let base = redimensionalize_coeffs(&long.outlets[0].dimensionless, &scales).unwrap();
        assert!((clamped_only - base.r_lin).abs() <= 1e-12 * base.r_lin.abs().max(1.0));
        assert!(long.outlets[0].clamped.is_empty());
    }

    #[test]
    fn out_of_range_angle_is_clamped_and_flagged() {
        let mut b = random_bundle(6);
        b.ranges.outlets[1].theta[0].max = 0.4;
        let p = predict_junction_coeffs(&b, &tree(1.0), 0, ModelKind::Ri).unwrap();
        assert_eq!(p.outlets[1].clamped.len(), 1);
        assert_eq!(p.outlets[1].clamped[0].feature, "theta_1");
        assert_eq!(p.outlets[1].dimensionless.r_quad(), 0.0);
    }
}
