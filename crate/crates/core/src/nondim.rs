//! Physics-based scaling of junction geometry and junction coefficients.
//!
//! The junction inlet radius `l_c` and a reference Reynolds number `Re_c` fix
//! characteristic area, velocity, flow, time and pressure scales. Geometry and
//! coefficients expressed in those scales are identical for geometrically
//! similar junctions of any size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Fluid;
use crate::scalar::Scalar;

/// Reference Reynolds number used when none is given.
pub const DEFAULT_REYNOLDS: f64 = 4500.0;

/// Characteristic scales of a junction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicScales<T> {
    pub length: T,
    pub area: T,
    pub velocity: T,
    pub flow: T,
    pub time: T,
    pub pressure: T,
    pub reynolds: T,
}

impl<T: Scalar> CharacteristicScales<T> {
    /// All scales derived from `l_c`, the fluid and `Re_c`:
    /// `A_c = π l_c²`, `U_c = Re_c μ / (2 ρ l_c)`, `Q_c = A_c U_c`, `t_c = l_c / U_c`, `P_c = ρ U_c²`.
    pub fn new(length: T, fluid: &Fluid<T>, reynolds: T) -> Result<Self> {
        if !(length > T::zero()) || !(reynolds > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "characteristic length {length} and Reynolds number {reynolds} must be positive"
            )));
        }
        let area = T::PI() * length * length;
        let velocity = reynolds * fluid.viscosity / (fluid.density * T::lit(2.0) * length);
        Ok(Self {
            length,
            area,
            velocity,
            flow: area * velocity,
            time: length / velocity,
            pressure: fluid.density * velocity * velocity,
            reynolds,
        })
    }

    /// Scales at the default reference Reynolds number.
    pub fn with_default_reynolds(length: T, fluid: &Fluid<T>) -> Result<Self> {
        Self::new(length, fluid, T::lit(DEFAULT_REYNOLDS))
    }

    /// Unit scales; coefficients pass through unchanged.
    pub fn identity() -> Self {
        Self {
            length: T::one(),
            area: T::one(),
            velocity: T::one(),
            flow: T::one(),
            time: T::one(),
            pressure: T::one(),
            reynolds: T::one(),
        }
    }
}

/// Junction outlet slot, 0 or 1.
pub type OutletIndex = usize;

/// Dimensional geometry of one junction, as seen from one outlet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionGeometry<T> {
    pub inlet_area: T,
    pub outlet_areas: [T; 2],
    pub outlet_lengths: [T; 2],
    pub angles: [T; 2],
    pub flow_split: [T; 2],
}

impl<T: Scalar> JunctionGeometry<T> {
    /// Inlet radius, the characteristic length of the junction.
    pub fn inlet_radius(&self) -> T {
        (self.inlet_area / T::PI()).sqrt()
    }

    /// Uniformly scales lengths by `s` (areas by `s²`).
    pub fn scaled(&self, s: T) -> Self {
        Self {
            inlet_area: self.inlet_area * s * s,
            outlet_areas: self.outlet_areas.map(|a| a * s * s),
            outlet_lengths: self.outlet_lengths.map(|l| l * s),
            ..*self
        }
    }
}

/// Number of entries of the non-dimensional feature vector.
pub const FEATURE_COUNT: usize = 10;

/// Feature labels, in vector order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "alpha_1",
    "alpha_2",
    "alpha_1^-2",
    "alpha_2^-2",
    "lambda",
    "lambda^2",
    "theta_1",
    "theta_2",
    "phi",
    "phi^-1",
];

/// Non-dimensional geometry for one junction outlet. Only the base entries are
/// stored; powers are derived on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessGeometry<T> {
    /// Outlet whose length and flow fraction this vector describes.
    pub outlet: OutletIndex,
    /// Outlet areas over `A_c`.
    pub alpha: [T; 2],
    /// This outlet's length over `l_c`.
    pub lambda: T,
    pub theta: [T; 2],
    /// This outlet's flow fraction.
    pub phi: T,
}

impl<T: Scalar> DimensionlessGeometry<T> {
    pub fn new(outlet: OutletIndex, alpha: [T; 2], lambda: T, theta: [T; 2], phi: T) -> Result<Self> {
        if outlet > 1 {
            return Err(Error::InvalidParameter(format!("outlet index {outlet} must be 0 or 1")));
        }
        if !(alpha[0] > T::zero() && alpha[1] > T::zero() && lambda > T::zero()) {
            return Err(Error::InvalidGeometry(
                "normalized areas and length must be positive".into(),
            ));
        }
        if !(phi > T::zero() && phi < T::one()) {
            return Err(Error::InvalidParameter(format!("flow split {phi} outside (0, 1)")));
        }
        Ok(Self {
            outlet,
            alpha,
            lambda,
            theta,
            phi,
        })
    }

    /// `[α₁, α₂, α₁⁻², α₂⁻², λ, λ², θ₁, θ₂, φ, φ⁻¹]`
    pub fn features(&self) -> [T; FEATURE_COUNT] {
        let [a1, a2] = self.alpha;
        [
            a1,
            a2,
            (a1 * a1).recip(),
            (a2 * a2).recip(),
            self.lambda,
            self.lambda * self.lambda,
            self.theta[0],
            self.theta[1],
            self.phi,
            self.phi.recip(),
        ]
    }

    /// This outlet's own normalized area.
    pub fn own_alpha(&self) -> T {
        self.alpha[self.outlet]
    }

    pub fn own_theta(&self) -> T {
        self.theta[self.outlet]
    }
}

/// Maps a junction outlet's dimensional geometry into scale-free form.
pub fn nondimensionalize_geometry<T: Scalar>(
    geometry: &JunctionGeometry<T>,
    outlet: OutletIndex,
    scales: &CharacteristicScales<T>,
) -> Result<DimensionlessGeometry<T>> {
    if outlet > 1 {
        return Err(Error::InvalidParameter(format!("outlet index {outlet} must be 0 or 1")));
    }
    DimensionlessGeometry::new(
        outlet,
        geometry.outlet_areas.map(|a| a / scales.area),
        geometry.outlet_lengths[outlet] / scales.length,
        geometry.angles,
        geometry.flow_split[outlet],
    )
}

/// Junction pressure-drop law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// `ΔP = R_lin Q + R_quad Q² + L Q̇`
    Rri,
    /// `ΔP = R_lin Q + L Q̇`
    Ri,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Rri => "rri",
            ModelKind::Ri => "ri",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "rri" => Ok(ModelKind::Rri),
            "ri" => Ok(ModelKind::Ri),
            other => Err(format!("unknown model kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    /// Ba·s/cm³, Ba·s²/cm⁶, Ba·s²/cm³
    Dimensional,
    Dimensionless,
}

/// Junction outlet coefficients. Signs are unconstrained: fitted values may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet<T> {
    kind: ModelKind,
    units: Units,
    pub r_lin: T,
    r_quad: T,
    pub inductance: T,
}

impl<T: Scalar> CoefficientSet<T> {
    pub fn rri(r_lin: T, r_quad: T, inductance: T) -> Self {
        Self {
            kind: ModelKind::Rri,
            units: Units::Dimensional,
            r_lin,
            r_quad,
            inductance,
        }
    }

    pub fn ri(r_lin: T, inductance: T) -> Self {
        Self {
            kind: ModelKind::Ri,
            units: Units::Dimensional,
            r_lin,
            r_quad: T::zero(),
            inductance,
        }
    }

    /// Builds a set of `kind` from raw values; `r_quad` is ignored for RI.
    pub fn of_kind(kind: ModelKind, r_lin: T, r_quad: T, inductance: T) -> Self {
        match kind {
            ModelKind::Rri => Self::rri(r_lin, r_quad, inductance),
            ModelKind::Ri => Self::ri(r_lin, inductance),
        }
    }

    /// Marks the values as already non-dimensional.
    pub fn into_dimensionless(mut self) -> Self {
        self.units = Units::Dimensionless;
        self
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn is_dimensionless(&self) -> bool {
        self.units == Units::Dimensionless
    }

    /// Quadratic resistance; always zero for RI sets.
    pub fn r_quad(&self) -> T {
        self.r_quad
    }

    pub fn set_r_quad(&mut self, r_quad: T) {
        if self.kind == ModelKind::Rri {
            self.r_quad = r_quad;
        }
    }

    /// Pressure drop for flow `q` and flow rate of change `dq`.
    pub fn pressure_drop(&self, q: T, dq: T) -> T {
        self.r_lin * q + self.r_quad * q * q + self.inductance * dq
    }

    /// Adds a Poiseuille segment's resistance and inductance.
    pub fn with_added_segment(mut self, resistance: T, inductance: T) -> Self {
        self.r_lin += resistance;
        self.inductance += inductance;
        self
    }

    /// Values in `[R_lin, R_quad, L]` order (`R_quad` omitted for RI).
    pub fn values(&self) -> Vec<T> {
        match self.kind {
            ModelKind::Rri => vec![self.r_lin, self.r_quad, self.inductance],
            ModelKind::Ri => vec![self.r_lin, self.inductance],
        }
    }
}

/// `R_lin* = R_lin Q_c/P_c`, `R_quad* = R_quad Q_c²/P_c`, `L* = L Q_c/(t_c P_c)`.
pub fn nondimensionalize_coeffs<T: Scalar>(
    coeffs: &CoefficientSet<T>,
    scales: &CharacteristicScales<T>,
) -> Result<CoefficientSet<T>> {
    if coeffs.is_dimensionless() {
        return Err(Error::InvalidParameter("coefficients are already dimensionless".into()));
    }
    let s = scales;
    Ok(CoefficientSet {
        kind: coeffs.kind,
        units: Units::Dimensionless,
        r_lin: coeffs.r_lin * s.flow / s.pressure,
        r_quad: coeffs.r_quad * s.flow * s.flow / s.pressure,
        inductance: coeffs.inductance * s.flow / (s.time * s.pressure),
    })
}

/// Inverse of [`nondimensionalize_coeffs`].
pub fn redimensionalize_coeffs<T: Scalar>(
    coeffs: &CoefficientSet<T>,
    scales: &CharacteristicScales<T>,
) -> Result<CoefficientSet<T>> {
    if !coeffs.is_dimensionless() {
        return Err(Error::InvalidParameter("coefficients are already dimensional".into()));
    }
    let s = scales;
    Ok(CoefficientSet {
        kind: coeffs.kind,
        units: Units::Dimensional,
        r_lin: coeffs.r_lin * s.pressure / s.flow,
        r_quad: coeffs.r_quad * s.pressure / (s.flow * s.flow),
        inductance: coeffs.inductance * s.time * s.pressure / s.flow,
    })
}

/// Per-entry mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZNormStats<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> ZNormStats<T> {
    /// Fits statistics to the rows of a dataset. `names` labels entries for diagnostics.
    pub fn fit<R: AsRef<[T]>>(rows: &[R], names: &[&str]) -> Result<Self> {
        let dim = names.len();
        if rows.is_empty() {
            return Err(Error::InvalidParameter("cannot fit z-normalization to an empty dataset".into()));
        }
        let n = T::from_count(rows.len());
        let mut mean = vec![T::zero(); dim];
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::ShapeMismatch(format!("row of length {} (expected {dim})", r.len())));
            }
            for (m, &x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![T::zero(); dim];
        for r in rows {
            for ((v, &x), &m) in var.iter_mut().zip(r.as_ref()).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std: Vec<T> = var.iter().map(|&v| (v / n).sqrt()).collect();
        for (i, &s) in std.iter().enumerate() {
            let scale = mean[i].abs().max(T::min_positive_value());
            if !(s > scale * T::lit(1e-12)) {
                return Err(Error::DegenerateFeature {
                    index: i,
                    name: names[i].to_string(),
                });
            }
        }
        Ok(Self { mean, std })
    }

    /// Mean 0, standard deviation 1 for every entry.
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![T::zero(); dim],
            std: vec![T::one(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }

    pub fn invert(&self, z: &[T]) -> Vec<T> {
        z.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| v * s + m)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.len() != self.std.len() {
            return Err(Error::ShapeMismatch("z-normalization mean/std lengths differ".into()));
        }
        if self.std.iter().any(|s| !(*s > T::zero())) {
            return Err(Error::InvalidParameter("z-normalization standard deviation must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn blood() -> Fluid<f64> {
        Fluid::blood()
    }

    #[test]
    fn characteristic_scales_hand_values() {
        let s = CharacteristicScales::new(0.5, &blood(), 4500.0).unwrap();
        assert_relative_eq!(s.velocity, 169.811_320_754_716_97, max_relative = 1e-14);
        assert_relative_eq!(s.area, 0.785_398_163_397_448_3, max_relative = 1e-14);
        assert_relative_eq!(s.flow, 133.369_499_444_849_7, max_relative = 1e-13);
        assert_relative_eq!(s.time, 2.944_444_444_444_444_4e-3, max_relative = 1e-13);
        assert_relative_eq!(s.pressure, 30_566.037_735_849_055, max_relative = 1e-13);
    }

    #[test]
    fn scales_are_homogeneous() {
        let a = CharacteristicScales::new(0.5, &blood(), 4500.0).unwrap();
        let b = CharacteristicScales::new(0.5, &blood(), 9000.0).unwrap();
        assert_relative_eq!(b.velocity / a.velocity, 2.0, max_relative = 1e-14);
        assert_relative_eq!(b.flow / a.flow, 2.0, max_relative = 1e-14);
        assert_relative_eq!(b.pressure / a.pressure, 4.0, max_relative = 1e-14);
        assert_relative_eq!(b.time / a.time, 0.5, max_relative = 1e-14);
        let c = CharacteristicScales::new(1.0, &blood(), 4500.0).unwrap();
        assert_relative_eq!(c.velocity / a.velocity, 0.5, max_relative = 1e-14);
        assert_relative_eq!(c.area / a.area, 4.0, max_relative = 1e-14);
        assert_relative_eq!(c.flow / a.flow, 2.0, max_relative = 1e-14);
        assert!(CharacteristicScales::new(0.0, &blood(), 4500.0).is_err());
        assert!(CharacteristicScales::new(0.5, &blood(), -1.0).is_err());
    }

    fn geometry() -> JunctionGeometry<f64> {
        JunctionGeometry {
            inlet_area: 0.785_398_163_397_448_3,
            outlet_areas: [0.785_398_163_397_448_3, 0.392_699_081_698_724_2],
            outlet_lengths: [10.0, 12.0],
            angles: [0.3, 0.7],
            flow_split: [0.6, 0.4],
        }
    }

    #[test]
    fn geometry_ratios() {
        let g = geometry();
        let s = CharacteristicScales::with_default_reynolds(g.inlet_radius(), &blood()).unwrap();
        let f0 = nondimensionalize_geometry(&g, 0, &s).unwrap().features();
        assert_relative_eq!(f0[0], 1.0, max_relative = 1e-14);
        assert_relative_eq!(f0[2], 1.0, max_relative = 1e-14);
        assert_relative_eq!(f0[1], 0.5, max_relative = 1e-14);
        assert_relative_eq!(f0[3], 4.0, max_relative = 1e-14);
        assert_relative_eq!(f0[4], 20.0, max_relative = 1e-14);
        let f1 = nondimensionalize_geometry(&g, 1, &s).unwrap().features();
        assert_relative_eq!(f1[4], 24.0, max_relative = 1e-14);
        assert_relative_eq!(f1[8], 0.4, max_relative = 1e-14);
        assert_relative_eq!(f1[9], 2.5, max_relative = 1e-14);
    }

    #[test]
    fn geometry_rejects_bad_split() {
        let mut g = geometry();
        g.flow_split = [1.0, 0.0];
        let s = CharacteristicScales::with_default_reynolds(g.inlet_radius(), &blood()).unwrap();
        assert!(nondimensionalize_geometry(&g, 0, &s).is_err());
    }

    #[test]
    fn coefficient_scaling_hand_value() {
        let s = CharacteristicScales::new(0.5, &blood(), 4500.0).unwrap();
        let o = nondimensionalize_coeffs(&CoefficientSet::rri(100.0, 0.0, 0.0), &s).unwrap();
        assert_relative_eq!(o.r_lin, 0.436_332_312_998_582_4, max_relative = 1e-13);
        let back = redimensionalize_coeffs(&o, &s).unwrap();
        assert_relative_eq!(back.r_lin, 100.0, max_relative = 1e-14);
        let zero = nondimensionalize_coeffs(&CoefficientSet::rri(0.0, 0.0, 0.0), &s).unwrap();
        assert_eq!(zero.values(), vec![0.0, 0.0, 0.0]);
        assert!(redimensionalize_coeffs(&CoefficientSet::rri(1.0, 0.0, 0.0), &s).is_err());
    }

    #[test]
    fn identity_scales_pass_through() {
        let o = CoefficientSet::rri(2.0, 3.0, 0.5).into_dimensionless();
        let d = redimensionalize_coeffs(&o, &CharacteristicScales::identity()).unwrap();
        assert_eq!(d.values(), vec![2.0, 3.0, 0.5]);
    }

    #[test]
    fn znorm_hand_statistics() {
        let rows = vec![vec![1.0], vec![3.0]];
        let st = ZNormStats::fit(&rows, &["x"]).unwrap();
        assert_eq!(st.mean, vec![2.0]);
        assert_eq!(st.std, vec![1.0]);
        assert_eq!(st.apply(&[1.0]), vec![-1.0]);
        assert_eq!(st.apply(&[3.0]), vec![1.0]);
        let id = ZNormStats::<f64>::identity(3);
        assert_eq!(id.apply(&[1.0, -2.0, 5.0]), vec![1.0, -2.0, 5.0]);
    }

    #[test]
    fn znorm_rejects_constant_column() {
        let rows = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        match ZNormStats::fit(&rows, &["a", "b"]) {
            Err(Error::DegenerateFeature { index, name }) => {
                assert_eq!(index, 1);
                assert_eq!(name, "b");
            }
            other => panic!("expected degenerate feature, got {other:?}"),
        }
    }

    #[test]
    fn f32_scales() {
        let s = CharacteristicScales::<f32>::new(0.5, &Fluid::blood(), 4500.0).unwrap();
        assert!((s.velocity - 169.811_32).abs() < 1e-3);
    }
}
