//! Uniformly sampled flow / pressure-drop series and their CSV form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nondim::CoefficientSet;
use crate::scalar::Scalar;

/// Flow and pressure drop on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries<T> {
    pub time: Vec<T>,
    pub flow: Vec<T>,
    pub pressure_drop: Vec<T>,
    /// Flow rate of change; computed by central differences when absent.
    pub flow_rate: Option<Vec<T>>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(time: Vec<T>, flow: Vec<T>, pressure_drop: Vec<T>) -> Result<Self> {
        if time.len() != flow.len() || time.len() != pressure_drop.len() {
            return Err(Error::ShapeMismatch(format!(
                "time series columns have lengths {}, {}, {}",
                time.len(),
                flow.len(),
                pressure_drop.len()
            )));
        }
        uniform_step(&time)?;
        Ok(Self {
            time,
            flow,
            pressure_drop,
            flow_rate: None,
        })
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn dt(&self) -> T {
        self.time[1] - self.time[0]
    }

    /// Stored flow rate, or the central-difference estimate.
    pub fn flow_rate(&self) -> Result<Vec<T>> {
        match &self.flow_rate {
            Some(d) => Ok(d.clone()),
            None => central_difference(&self.flow, self.dt()),
        }
    }
}

/// Checks the grid is strictly increasing and uniform; returns the step.
pub fn uniform_step<T: Scalar>(time: &[T]) -> Result<T> {
    if time.len() < 2 {
        return Err(Error::InvalidParameter("time grid needs at least 2 samples".into()));
    }
    let dt = time[1] - time[0];
    let span = (time[time.len() - 1] - time[0]).abs().max(T::one());
    let tol = span * T::lit(1e-9);
    for i in 1..time.len() {
        let d = time[i] - time[i - 1];
        if !(d > T::zero()) || (d - dt).abs() > tol {
            return Err(Error::NonUniformGrid { index: i });
        }
    }
    Ok(dt)
}

/// Interior points `(Q[i+1] − Q[i−1]) / 2Δt`; first-order one-sided differences at the ends.
pub fn central_difference<T: Scalar>(flow: &[T], dt: T) -> Result<Vec<T>> {
    let n = flow.len();
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "central differences need at least 3 samples, got {n}"
        )));
    }
    if !(dt > T::zero()) {
        return Err(Error::InvalidParameter("time step must be positive".into()));
    }
    let two_dt = T::lit(2.0) * dt;
    let mut d = Vec::with_capacity(n);
    d.push((flow[1] - flow[0]) / dt);
    for i in 1..n - 1 {
        d.push((flow[i + 1] - flow[i - 1]) / two_dt);
    }
    d.push((flow[n - 1] - flow[n - 2]) / dt);
    Ok(d)
}

/// Evaluates `ΔP = R_lin Q + R_quad Q² + L Q̇` on a flow series.
pub fn synthesize_timeseries<T: Scalar>(coeffs: &CoefficientSet<T>, time: &[T], flow: &[T]) -> Result<TimeSeries<T>> {
    if time.len() != flow.len() {
        return Err(Error::ShapeMismatch("time and flow lengths differ".into()));
    }
    let dt = uniform_step(time)?;
    let dq = central_difference(flow, dt)?;
    let dp = flow
        .iter()
        .zip(&dq)
        .map(|(&q, &d)| coeffs.pressure_drop(q, d))
        .collect();
    Ok(TimeSeries {
        time: time.to_vec(),
        flow: flow.to_vec(),
        pressure_drop: dp,
        flow_rate: Some(dq),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    t: f64,
    #[serde(rename = "Q")]
    q: f64,
    #[serde(rename = "dP")]
    dp: f64,
}

/// Reads a `t,Q,dP` CSV file.
pub fn ingest_timeseries_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<TimeSeries<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_timeseries_csv(file)
}

pub fn read_timeseries_csv<T: Scalar, R: std::io::Read>(reader: R) -> Result<TimeSeries<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    for col in ["t", "Q", "dP"] {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::Schema(format!("time series CSV is missing column `{col}`")));
        }
    }
    let (mut t, mut q, mut dp) = (Vec::new(), Vec::new(), Vec::new());
    for row in rdr.deserialize() {
        let row: CsvRow = row?;
        t.push(T::lit(row.t));
        q.push(T::lit(row.q));
        dp.push(T::lit(row.dp));
    }
    TimeSeries::new(t, q, dp)
}

pub fn write_timeseries_csv<T: Scalar>(series: &TimeSeries<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for i in 0..series.len() {
        w.serialize(CsvRow {
            t: series.time[i].as_f64(),
            q: series.flow[i].as_f64(),
            dp: series.pressure_drop[i].as_f64(),
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn ramp_and_constant() {
        let d = central_difference(&[0.0, 1.0, 2.0, 3.0], 1.0).unwrap();
        assert_eq!(&d[1..3], &[1.0, 1.0]);
        let d = central_difference(&[4.0; 5], 0.1).unwrap();
        assert!(d.iter().all(|&x| x == 0.0));
        assert!(central_difference(&[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn quadratic_exact_in_interior() {
        let t = grid(101, 0.01);
        let q: Vec<f64> = t.iter().map(|x| x * x).collect();
        let d = central_difference(&q, 0.01).unwrap();
        for i in 1..100 {
            assert!((d[i] - 2.0 * t[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn synthesize_constant_and_zero() {
        let t = grid(10, 0.1);
        let s = synthesize_timeseries(&CoefficientSet::rri(2.0, 3.0, 0.5), &t, &[2.0; 10]).unwrap();
        assert!(s.pressure_drop.iter().all(|&p| (p - 16.0).abs() < 1e-14));
        let s = synthesize_timeseries(&CoefficientSet::rri(0.0, 0.0, 0.0), &t, &[2.0; 10]).unwrap();
        assert!(s.pressure_drop.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn synthesize_matches_closed_form() {
        let n = 1001;
        let dt = 1.0 / 1000.0;
        let t = grid(n, dt);
        let q: Vec<f64> = t.iter().map(|x| (2.0 * std::f64::consts::PI * x).sin()).collect();
        let s = synthesize_timeseries(&CoefficientSet::rri(2.0, 3.0, 0.5), &t, &q).unwrap();
        for i in 1..n - 1 {
            let w = 2.0 * std::f64::consts::PI;
            let exact = 2.0 * q[i] + 3.0 * q[i] * q[i] + 0.5 * w * (w * t[i]).cos();
            assert!((s.pressure_drop[i] - exact).abs() < 1e-4 * 0.5 * w);
        }
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let s = TimeSeries::new(vec![0.0, 0.1, 0.2], vec![1.0, 2.5, 1.0 / 3.0], vec![3.0, -4.0, 1e-7]).unwrap();
        write_timeseries_csv(&s, &path).unwrap();
        let back: TimeSeries<f64> = ingest_timeseries_csv(&path).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in back.flow.iter().zip(&s.flow) {
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }

        let shuffled = "t,Q,dP\n0.0,1,1\n0.2,2,2\n0.1,3,3\n";
        assert!(matches!(
            read_timeseries_csv::<f64, _>(shuffled.as_bytes()),
            Err(Error::NonUniformGrid { index: 2 })
        ));
        let missing = "t,Q\n0,1\n";
        assert!(matches!(read_timeseries_csv::<f64, _>(missing.as_bytes()), Err(Error::Schema(_))));
        let bad = "t,Q,dP\n0,1,x\n";
        assert!(matches!(read_timeseries_csv::<f64, _>(bad.as_bytes()), Err(Error::Csv(_))));
    }
}
