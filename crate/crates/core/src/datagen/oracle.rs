//! Analytic stand-in for resolved junction simulations, and the inlet waveform
//! and outlet boundary conditions used to drive it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Fluid;
use crate::nondim::{CoefficientSet, DimensionlessGeometry};
use crate::scalar::Scalar;

/// Identifier recorded in cohort manifests.
pub const ORACLE_ID: &str = "analytic-rri-v1";

/// Constants of the analytic junction map.
///
/// ```text
/// R_lin*  = A0 · α⁻² · λ + A1 · θ
/// R_quad* = B0 · (α⁻² − 1) + B1 · (φ⁻¹ − 2)
/// L*      = C0 · λ · α⁻¹
/// ```
///
/// `α`, `θ`, `λ` and `φ` are those of the outlet being described.
pub mod constants {
    pub const A0: f64 = 0.0071;
    pub const A1: f64 = 0.02;
    pub const B0: f64 = 0.5;
    pub const B1: f64 = 0.2;
    pub const C0: f64 = 0.6;
}

/// Domain on which the oracle is defined.
const ALPHA_DOMAIN: (f64, f64) = (0.05, 5.0);
const LAMBDA_MAX: f64 = 200.0;

/// Dimensionless RRI coefficients of a junction outlet.
pub fn oracle_coeffs<T: Scalar>(g: &DimensionlessGeometry<T>) -> Result<CoefficientSet<T>> {
    use constants::*;
    let a = g.own_alpha();
    let theta = g.own_theta();
    let ok = a >= T::lit(ALPHA_DOMAIN.0)
        && a <= T::lit(ALPHA_DOMAIN.1)
        && g.lambda > T::zero()
        && g.lambda <= T::lit(LAMBDA_MAX)
        && theta >= T::zero()
        && theta <= T::FRAC_PI_2()
        && g.phi > T::zero()
        && g.phi < T::one();
    if !ok {
        return Err(Error::InvalidParameter(format!(
            "geometry outside the oracle domain: α={a}, λ={}, θ={theta}, φ={}",
            g.lambda, g.phi
        )));
    }
    let inv_a2 = (a * a).recip();
    let r_lin = T::lit(A0) * inv_a2 * g.lambda + T::lit(A1) * theta;
    let r_quad = T::lit(B0) * (inv_a2 - T::one()) + T::lit(B1) * (g.phi.recip() - T::lit(2.0));
    let l = T::lit(C0) * g.lambda / a;
    Ok(CoefficientSet::rri(r_lin, r_quad, l).into_dimensionless())
}

/// Distal resistance of outlet 1 producing flow split `phi` when outlet 2 has
/// `r_dist2` and both share the same distal pressure: `((1 − φ)/φ) · R_dist,2`.
pub fn distal_resistance_for_split<T: Scalar>(phi: T, r_dist2: T) -> Result<T> {
    if !(phi > T::zero() && phi < T::one()) {
        return Err(Error::InvalidParameter(format!("flow split {phi} outside (0, 1)")));
    }
    if !(r_dist2 >= T::zero()) {
        return Err(Error::InvalidParameter("distal resistance must be non-negative".into()));
    }
    Ok((T::one() - phi) / phi * r_dist2)
}

/// Default outlet-2 distal resistance, Ba·s/cm³.
pub const DEFAULT_R_DIST2: f64 = 1e5;

/// Inlet flow over one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform<T> {
    pub time: Vec<T>,
    pub flow: Vec<T>,
}

impl<T: Scalar> Waveform<T> {
    pub fn peak(&self) -> T {
        self.flow.iter().fold(T::zero(), |m, q| m.max(q.abs()))
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            time: self.time.clone(),
            flow: self.flow.iter().map(|&q| q * s).collect(),
        }
    }
}

/// Plug-flow rate through a circle of radius `radius` at Reynolds number `re`:
/// `Q = Re · μ · π · r / (2ρ)`.
pub fn flow_for_reynolds<T: Scalar>(re: T, radius: T, fluid: &Fluid<T>) -> T {
    re * fluid.viscosity * T::PI() * radius / (T::lit(2.0) * fluid.density)
}

/// Half-sine from 0 up to the flow at `re_max` and back over one period,
/// sampled at `n_steps + 1` uniform points.
pub fn systolic_waveform<T: Scalar>(re_max: T, radius: T, fluid: &Fluid<T>, period: T, n_steps: usize) -> Result<Waveform<T>> {
    if !(re_max >= T::zero()) || !(period > T::zero()) || !(radius > T::zero()) {
        return Err(Error::InvalidParameter(
            "waveform needs Re ≥ 0, positive radius and positive period".into(),
        ));
    }
    if n_steps < 2 {
        return Err(Error::InvalidParameter("waveform needs at least 2 steps".into()));
    }
    let q_max = flow_for_reynolds(re_max, radius, fluid);
    let n = T::from_count(n_steps);
    let time = (0..=n_steps).map(|i| period * T::from_count(i) / n).collect();
    let flow = (0..=n_steps)
        .map(|i| {
            if i == 0 || i == n_steps {
                T::zero()
            } else {
                q_max * (T::PI() * T::from_count(i) / n).sin()
            }
        })
        .collect();
    Ok(Waveform { time, flow })
}
