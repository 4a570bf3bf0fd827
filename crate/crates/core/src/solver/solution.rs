use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{idx, Engine, NewtonOutcome, SolverConfig, P_IN, P_OUT, Q_IN, Q_OUT};
use crate::error::{Error, Result};
use crate::network::VascularNetwork;
use crate::scalar::Scalar;

/// Per-step solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: f64,
    pub iterations: usize,
    /// Final residual ∞-norm of the Newton engines.
    pub residual: Option<f64>,
    pub objective: Option<f64>,
    pub constraint_violation: Option<f64>,
    pub stationarity: Option<f64>,
}

impl StepDiagnostics {
    pub(crate) fn newton(t: f64, out: &NewtonOutcome) -> Self {
        Self {
            t,
            iterations: out.iterations,
            residual: Some(out.residual),
            objective: None,
            constraint_violation: None,
            stationarity: None,
        }
    }
}

/// Time-indexed states in the solver layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTable<T> {
    pub vessel_ids: Vec<usize>,
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
}

const FIELDS: [(&str, usize); 4] = [("P_in", P_IN), ("P_out", P_OUT), ("Q_in", Q_IN), ("Q_out", Q_OUT)];

impl<T: Scalar> SolutionTable<T> {
    pub(crate) fn new(net: &VascularNetwork<T>, times: Vec<T>, states: Vec<Vec<T>>) -> Self {
        Self {
            vessel_ids: net.vessels().iter().map(|v| v.id()).collect(),
            times,
            states,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Value of `field` (one of [`P_IN`], [`P_OUT`], [`Q_IN`], [`Q_OUT`]) of vessel index `v` at step `n`.
    pub fn value(&self, n: usize, v: usize, field: usize) -> T {
        self.states[n][idx(v, field)]
    }

    /// Time series of one quantity.
    pub fn series(&self, v: usize, field: usize) -> Vec<T> {
        self.states.iter().map(|x| x[idx(v, field)]).collect()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        for &id in &self.vessel_ids {
            for (name, _) in FIELDS {
                h.push(format!("{name}_v{id}"));
            }
        }
        h
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(self.header())?;
        for (t, x) in self.times.iter().zip(&self.states) {
            let mut rec = vec![t.as_f64().to_string()];
            rec.extend(x.iter().map(|v| v.as_f64().to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Reads a solution CSV written by [`SolutionTable::write_csv`].
pub fn read_solution_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<SolutionTable<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("t") || (header.len() - 1) % 4 != 0 {
        return Err(Error::Schema(format!("{}: not a solution table", path.display())));
    }
    let mut vessel_ids = Vec::new();
    for (k, chunk) in header[1..].chunks(4).enumerate() {
        let id: usize = chunk[0]
            .strip_prefix("P_in_v")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Schema(format!("unexpected column {:?}", chunk[0])))?;
        for ((name, _), col) in FIELDS.iter().zip(chunk) {
            if *col != format!("{name}_v{id}") {
                return Err(Error::Schema(format!("column {} of vessel block {k} is {col:?}", name)));
            }
        }
        vessel_ids.push(id);
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let vals: Vec<T> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map(T::lit))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Schema(format!("row {}: {e}", line + 1)))?;
        if vals.len() != header.len() {
            return Err(Error::Schema(format!("row {} has {} fields", line + 1, vals.len())));
        }
        times.push(vals[0]);
        states.push(vals[1..].to_vec());
    }
    Ok(SolutionTable {
        vessel_ids,
        times,
        states,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T> {
    pub engine: Engine,
    pub config: SolverConfig<T>,
    pub table: SolutionTable<T>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Inflow used to scale the objective of the optimization engine.
    pub objective_scale: Option<T>,
}

#[derive(Serialize)]
#[serde(bound = "T: Scalar")]
struct DiagnosticsFile<'a, T> {
    engine: Engine,
    config: &'a SolverConfig<T>,
    objective_scale: Option<T>,
    steps: &'a [StepDiagnostics],
}

impl<T: Scalar> Solution<T> {
    pub fn diagnostics_json(&self) -> String {
        serde_json::to_string_pretty(&DiagnosticsFile {
            engine: self.engine,
            config: &self.config,
            objective_scale: self.objective_scale,
            steps: &self.diagnostics,
        })
        .expect("diagnostics serialization cannot fail")
    }

    /// Final state.
    pub fn last(&self) -> &[T] {
        self.table.states.last().expect("solutions hold at least one state")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::single_vessel;

    #[test]
    fn csv_round_trip() {
        let net = single_vessel(10.0, 100.0);
        let t = SolutionTable::new(&net, vec![0.0, 0.5], vec![vec![1.5, 2.0, 3.25, -4.0], vec![0.1, 0.2, 0.3, 0.4]]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        t.write_csv(&p).unwrap();
        let back: SolutionTable<f64> = read_solution_csv(&p).unwrap();
        assert_eq!(back, t);
        assert_eq!(t.header()[1..], ["P_in_v0", "P_out_v0", "Q_in_v0", "Q_out_v0"]);
        std::fs::write(&p, "t,P_in_v0\n0,1\n").unwrap();
        assert!(matches!(read_solution_csv::<f64>(&p), Err(Error::Schema(_))));
    }
}
