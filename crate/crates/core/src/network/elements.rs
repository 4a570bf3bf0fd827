//! Lumped circuit element values for straight cylindrical vessel segments.

use crate::error::{Error, Result};
use crate::network::Fluid;
use crate::scalar::Scalar;

/// Poiseuille resistance `8πμl/A²` and inductance `ρl/A` of a rigid cylindrical segment.
pub fn poiseuille_elements<T: Scalar>(length: T, area: T, fluid: &Fluid<T>) -> Result<(T, T)> {
    if !(length > T::zero()) || !(area > T::zero()) {
        return Err(Error::InvalidGeometry(format!(
            "segment length {length} and area {area} must be positive"
        )));
    }
    Ok(segment_elements(length, area, fluid))
}

/// Same as [`poiseuille_elements`] but accepts zero (or negative, for length
/// corrections) lengths. Area must already be validated.
pub(crate) fn segment_elements<T: Scalar>(length: T, area: T, fluid: &Fluid<T>) -> (T, T) {
    let r = T::lit(8.0) * T::PI() * fluid.viscosity * length / (area * area);
    let l = fluid.density * length / area;
    (r, l)
}

/// Flow-direction dependent stenosis loss coefficient, multiplying `Q|Q|`.
pub fn stenosis_resistance<T: Scalar>(area: T, stenosis_area: T, kt: T, density: T) -> Result<T> {
    if !(area > T::zero()) || !(stenosis_area > T::zero()) || stenosis_area > area {
        return Err(Error::InvalidGeometry(format!(
            "stenosis area {stenosis_area} must lie in (0, {area}]"
        )));
    }
    let ratio = area / stenosis_area - T::one();
    Ok(kt * density / (T::lit(2.0) * area * area) * ratio * ratio)
}

/// Resistance and inductance to add to a junction outlet whose normalized
/// length `lambda` lies outside the trained range `[lambda_min, lambda_max]`.
/// Both corrections are negative when the outlet is shorter than `lambda_min`.
pub fn length_correction<T: Scalar>(
    lambda: T,
    lambda_min: T,
    lambda_max: T,
    characteristic_length: T,
    outlet_area: T,
    fluid: &Fluid<T>,
) -> (T, T) {
    let extra = (lambda - lambda_min).min(T::zero()) * characteristic_length
        + (lambda - lambda_max).max(T::zero()) * characteristic_length;
    segment_elements(extra, outlet_area, fluid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn blood() -> Fluid<f64> {
        Fluid::new(0.04, 1.06).unwrap()
    }

    #[test]
    fn poiseuille_hand_values() {
        let (r, l) = poiseuille_elements(1.0, 1.0, &blood()).unwrap();
        assert_relative_eq!(r, 1.005_309_649_148_734, max_relative = 1e-14);
        assert_relative_eq!(l, 1.06, max_relative = 1e-15);
        let (r, l) = poiseuille_elements(1.0, 2.0, &blood()).unwrap();
        assert_relative_eq!(r, 0.251_327_412_287_183_5, max_relative = 1e-14);
        assert_relative_eq!(l, 0.53, max_relative = 1e-15);
    }

    #[test]
    fn poiseuille_rejects_degenerate_segments() {
        assert!(matches!(
            poiseuille_elements(0.0, 1.0, &blood()),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(poiseuille_elements(1.0, -1.0, &blood()).is_err());
    }

    #[test]
    fn stenosis_hand_values() {
        assert_eq!(stenosis_resistance(1.3, 1.3, 1.52, 1.06).unwrap(), 0.0);
        assert_relative_eq!(stenosis_resistance(2.0, 1.0, 1.0, 1.06).unwrap(), 0.1325, max_relative = 1e-14);
        assert_relative_eq!(stenosis_resistance(1.0, 0.5, 1.52, 1.06).unwrap(), 0.8056, max_relative = 1e-14);
        assert!(stenosis_resistance(1.0, 1.5, 1.52, 1.06).is_err());
    }

    #[test]
    fn length_correction_cases() {
        let f = blood();
        assert_eq!(length_correction(20.0, 15.0, 41.0, 1.0, 1.0, &f), (0.0, 0.0));
        let (dr, dl) = length_correction(42.0, 15.0, 41.0, 1.0, 1.0, &f);
        assert_relative_eq!(dr, 1.005_309_649_148_734, max_relative = 1e-14);
        assert_relative_eq!(dl, 1.06, max_relative = 1e-15);
        let (dr, dl) = length_correction(14.5, 15.0, 41.0, 2.0, 1.0, &f);
        assert_relative_eq!(dr, -1.005_309_649_148_734, max_relative = 1e-14);
        assert_relative_eq!(dl, -1.06, max_relative = 1e-15);
    }
}
