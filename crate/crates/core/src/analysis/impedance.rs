use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::datagen::uniform_step;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default cut-off for retained harmonics, relative to the largest |F(Q)|.
pub const DEFAULT_HARMONIC_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    /// DFT bin index over the analysed window.
    pub index: usize,
    /// Angular frequency, rad/s.
    pub omega: f64,
    pub re: f64,
    pub im: f64,
}

impl Harmonic {
    pub fn magnitude(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn phase(&self) -> f64 {
        self.im.atan2(self.re)
    }
}

/// Ratio of pressure-drop to flow Fourier coefficients at retained harmonics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceSpectrum {
    pub period: f64,
    pub periods: usize,
    pub harmonics: Vec<Harmonic>,
}

impl ImpedanceSpectrum {
    /// Writes `omega, re, im, mag, phase`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["omega", "re", "im", "mag", "phase"])?;
        for h in &self.harmonics {
            w.write_record(
                [h.omega, h.re, h.im, h.magnitude(), h.phase()]
                    .iter()
                    .map(|v| v.to_string()),
            )?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Impedance spectrum of a periodic record. `time` must be uniform and span a
/// whole number of periods; the first sample is dropped so the window of
/// `N = len − 1` samples tiles the periods without repeating an endpoint.
/// Bins with `|F(Q)| < floor · max|F(Q)|` are discarded.
pub fn impedance<T: Scalar>(time: &[T], flow: &[T], pressure_drop: &[T], period: T, floor: f64) -> Result<ImpedanceSpectrum> {
    if flow.len() != time.len() || pressure_drop.len() != time.len() {
        return Err(Error::ShapeMismatch("time, flow and pressure series differ in length".into()));
    }
    let dt = uniform_step(time)?;
    if !(period > T::zero()) {
        return Err(Error::InvalidParameter("period must be positive".into()));
    }
    let span = (time[time.len() - 1] - time[0]).as_f64();
    let periods = span / period.as_f64();
    let m = periods.round();
    if m < 1.0 || (periods - m).abs() > 1e-6 * m {
        return Err(Error::InvalidParameter(format!(
            "series spans {periods} periods; an integer number is required"
        )));
    }
    let n = time.len() - 1;
    let to_complex = |s: &[T]| -> Vec<Complex<f64>> { s[1..].iter().map(|v| Complex::new(v.as_f64(), 0.0)).collect() };
    let mut fq = to_complex(flow);
    let mut fp = to_complex(pressure_drop);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    fft.process(&mut fq);
    fft.process(&mut fp);
    let half = n / 2;
    let qmax = fq[..=half].iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if qmax == 0.0 {
        return Err(Error::InvalidParameter("flow is identically zero".into()));
    }
    let total = n as f64 * dt.as_f64();
    let harmonics = (0..=half)
        .filter(|&k| fq[k].norm() >= floor * qmax)
        .map(|k| {
            let z = fp[k] / fq[k];
            Harmonic {
                index: k,
                omega: 2.0 * std::f64::consts::PI * k as f64 / total,
                re: z.re,
                im: z.im,
            }
        })
        .collect();
    Ok(ImpedanceSpectrum {
        period: period.as_f64(),
        periods: m as usize,
        harmonics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(period: f64, n: usize, periods: usize) -> Vec<f64> {
        (0..=n * periods).map(|i| i as f64 * period / n as f64).collect()
    }

    fn multi_harmonic(t: f64, w: f64) -> (f64, f64) {
        let q = 5.0 + 2.0 * (w * t).sin() + 0.7 * (2.0 * w * t).cos() + 0.3 * (3.0 * w * t + 0.4).sin();
        let dq = 2.0 * w * (w * t).cos() - 1.4 * w * (2.0 * w * t).sin() + 0.9 * w * (3.0 * w * t + 0.4).cos();
        (q, dq)
    }

    #[test]
    fn resistor_has_flat_real_impedance() {
        let t = grid(1.0, 64, 2);
        let w = 2.0 * PI;
        let q: Vec<f64> = t.iter().map(|&t| multi_harmonic(t, w).0).collect();
        let p: Vec<f64> = q.iter().map(|q| 100.0 * q).collect();
        let s = impedance(&t, &q, &p, 1.0, DEFAULT_HARMONIC_FLOOR).unwrap();
        assert_eq!(s.harmonics.iter().map(|h| h.index).collect::<Vec<_>>(), vec![0, 2, 4, 6]);
        for h in &s.harmonics {
            assert!((h.magnitude() - 100.0).abs() < 1e-9);
            assert!(h.phase().abs() < 1e-9);
        }
    }

    #[test]
    fn series_rl_matches_closed_form() {
        let period = 0.5;
        let t = grid(period, 256, 1);
        let w = 2.0 * PI / period;
        let q: Vec<f64> = t.iter().map(|&t| multi_harmonic(t, w).0).collect();
        let p: Vec<f64> = t
            .iter()
            .map(|&t| {
                let (q, dq) = multi_harmonic(t, w);
                2.0 * q + 0.5 * dq
            })
            .collect();
        let s = impedance(&t, &q, &p, period, DEFAULT_HARMONIC_FLOOR).unwrap();
        let mut last_phase = -1.0;
        for h in &s.harmonics {
            assert!((h.omega - w * h.index as f64).abs() < 1e-9);
            assert!((h.re - 2.0).abs() < 1e-9, "{h:?}");
            assert!((h.im - 0.5 * h.omega).abs() < 1e-8, "{h:?}");
            assert!(h.phase() > last_phase);
            last_phase = h.phase();
        }
    }

    #[test]
    fn unit_ratio_and_errors() {
        let t = grid(1.0, 32, 1);
        let q: Vec<f64> = t.iter().map(|&t| (2.0 * PI * t).sin()).collect();
        let s = impedance(&t, &q, &q, 1.0, DEFAULT_HARMONIC_FLOOR).unwrap();
        assert_eq!(s.harmonics.len(), 1);
        assert!((s.harmonics[0].re - 1.0).abs() < 1e-12 && s.harmonics[0].im.abs() < 1e-12);
        assert!(impedance(&t, &q, &q, 0.7, DEFAULT_HARMONIC_FLOOR).is_err());
        let zero = vec![0.0; t.len()];
        assert!(impedance(&t, &zero, &q, 1.0, DEFAULT_HARMONIC_FLOOR).is_err());
    }
}
