//! Least-squares extraction of junction coefficients from a pressure-drop series.

use serde::{Deserialize, Serialize};

use super::TimeSeries;
use crate::error::{Error, Result};
use crate::linalg::{least_squares, Matrix};
use crate::nondim::{CoefficientSet, ModelKind};
use crate::scalar::Scalar;

/// Fitted coefficients with their coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit<T> {
    pub coefficients: CoefficientSet<T>,
    pub r_squared: T,
}

/// Fits `ΔP = R_lin Q + R_quad Q² + L Q̇`.
pub fn fit_rri<T: Scalar>(series: &TimeSeries<T>) -> Result<Fit<T>> {
    fit(series, ModelKind::Rri)
}

/// Fits `ΔP = R_lin Q + L Q̇`.
pub fn fit_ri<T: Scalar>(series: &TimeSeries<T>) -> Result<Fit<T>> {
    fit(series, ModelKind::Ri)
}

pub fn fit<T: Scalar>(series: &TimeSeries<T>, kind: ModelKind) -> Result<Fit<T>> {
    let dq = series.flow_rate()?;
    let n = series.len();
    let (names, cols): (&[&str], usize) = match kind {
        ModelKind::Rri => (&["Q", "Q^2", "dQ/dt"], 3),
        ModelKind::Ri => (&["Q", "dQ/dt"], 2),
    };
    let mut a = Matrix::zeros(n, cols);
    for i in 0..n {
        let q = series.flow[i];
        a[(i, 0)] = q;
        match kind {
            ModelKind::Rri => {
                a[(i, 1)] = q * q;
                a[(i, 2)] = dq[i];
            }
            ModelKind::Ri => a[(i, 1)] = dq[i],
        }
    }
    let x = least_squares(&a, &series.pressure_drop, names)?;
    let coefficients = match kind {
        ModelKind::Rri => CoefficientSet::rri(x[0], x[1], x[2]),
        ModelKind::Ri => CoefficientSet::ri(x[0], x[1]),
    };
    let r_squared = r_squared(series, &coefficients)?;
    Ok(Fit {
        coefficients,
        r_squared,
    })
}

/// `1 − SS_res / SS_tot` of the coefficients' prediction of the series.
pub fn r_squared<T: Scalar>(series: &TimeSeries<T>, coeffs: &CoefficientSet<T>) -> Result<T> {
    let dq = series.flow_rate()?;
    let n = T::from_count(series.len());
    let mean = series.pressure_drop.iter().copied().sum::<T>() / n;
    let mut ss_tot = T::zero();
    let mut ss_res = T::zero();
    for i in 0..series.len() {
        let p = series.pressure_drop[i];
        let e = p - coeffs.pressure_drop(series.flow[i], dq[i]);
        ss_res += e * e;
        ss_tot += (p - mean) * (p - mean);
    }
    if !(ss_tot > T::zero()) {
        return Err(Error::InvalidParameter(
            "pressure drop has zero variance; R² is undefined".into(),
        ));
    }
    Ok(T::one() - ss_res / ss_tot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::synthesize_timeseries;

    fn sine_series(coeffs: &CoefficientSet<f64>) -> TimeSeries<f64> {
        let t: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let q: Vec<f64> = t.iter().map(|x| 5.0 + 4.0 * (2.0 * std::f64::consts::PI * x).sin()).collect();
        synthesize_timeseries(coeffs, &t, &q).unwrap()
    }

    #[test]
    fn rri_round_trip() {
        let f = fit_rri(&sine_series(&CoefficientSet::rri(2.0, 3.0, 0.5))).unwrap();
        let got = f.coefficients.values();
        for (g, e) in got.iter().zip([2.0, 3.0, 0.5]) {
            assert!((g - e).abs() <= 1e-8 * e, "{g} vs {e}");
        }
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_flow_is_rank_deficient() {
        let t: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let s = synthesize_timeseries(&CoefficientSet::rri(2.0, 3.0, 0.5), &t, &[3.0; 10]).unwrap();
        match fit_rri(&s) {
            Err(Error::RankDeficient { column }) => assert_eq!(column, "Q^2"),
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn ri_exact_on_linear_data() {
        let f = fit_ri(&sine_series(&CoefficientSet::ri(7.0, 0.25))).unwrap();
        assert!((f.coefficients.r_lin - 7.0).abs() < 1e-10);
        assert!((f.coefficients.inductance - 0.25).abs() < 1e-10);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn r_squared_cases() {
        let t: Vec<f64> = (0..4).map(|i| i as f64).collect();
        let s = TimeSeries::new(t, vec![1.0, 2.0, 3.0, 4.0], vec![-1.0, 1.0, -1.0, 1.0]).unwrap();
        assert_eq!(r_squared(&s, &CoefficientSet::rri(0.0, 0.0, 0.0)).unwrap(), 0.0);
        let flat = TimeSeries::new(vec![0.0, 1.0, 2.0], vec![1.0; 3], vec![2.0; 3]).unwrap();
        assert!(r_squared(&flat, &CoefficientSet::rri(2.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn ri_worse_on_quadratic_data() {
        let s = sine_series(&CoefficientSet::rri(1.0, 2.0, 0.1));
        let rri = fit_rri(&s).unwrap().r_squared;
        let ri = fit_ri(&s).unwrap().r_squared;
        assert!(rri > ri);
    }
}
