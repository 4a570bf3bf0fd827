//! End-to-end synthetic training cohorts.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    distal_resistance_for_split, fit_ri, fit_rri, oracle_coeffs, sample_geometries, synthesize_timeseries,
    systolic_waveform, JunctionSample, SamplingRanges, TimeSeries, Waveform, DEFAULT_R_DIST2, ORACLE_ID,
};
use crate::error::{Error, Result};
use crate::ml::{save_labeled_rows, LabeledRow, TrainingDataset};
use crate::network::Fluid;
use crate::nondim::{
    nondimensionalize_coeffs, redimensionalize_coeffs, CharacteristicScales, CoefficientSet, DimensionlessGeometry,
    DEFAULT_REYNOLDS,
};
use crate::scalar::Scalar;

/// Fractions of each daughter branch used as junction outlet points.
pub const OUTLET_FRACTIONS: [f64; 7] = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Inputs of a cohort build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CohortConfig<T> {
    pub junctions: usize,
    pub ranges: SamplingRanges<T>,
    pub seed: u64,
    pub fluid: Fluid<T>,
    /// Reference Reynolds number of the characteristic scales.
    pub reynolds: T,
    /// Peak inlet Reynolds number of the systolic waveform.
    pub re_max: T,
    pub period: T,
    pub n_steps: usize,
    pub r_dist2: T,
    /// Standard deviation of Gaussian noise added to ΔP, Ba. Zero disables noise.
    pub noise_sigma: T,
    pub validation_fraction: T,
}

impl<T: Scalar> CohortConfig<T> {
    pub fn new(junctions: usize, seed: u64) -> Self {
        Self {
            junctions,
            ranges: SamplingRanges::default(),
            seed,
            fluid: Fluid::blood(),
            reynolds: T::lit(DEFAULT_REYNOLDS),
            re_max: T::lit(5500.0),
            period: T::lit(0.4),
            n_steps: 1000,
            r_dist2: T::lit(DEFAULT_R_DIST2),
            noise_sigma: T::zero(),
            validation_fraction: T::lit(0.1),
        }
    }
}

/// Every generated junction is assumed to have a 1 cm² inlet.
pub fn inlet_radius<T: Scalar>() -> T {
    T::FRAC_1_PI().sqrt()
}

/// One junction outlet at one outlet fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CohortRow<T> {
    pub junction: usize,
    pub fraction: T,
    pub geometry: DimensionlessGeometry<T>,
    /// Ground-truth dimensionless coefficients from the oracle.
    pub oracle: CoefficientSet<T>,
    /// Fitted dimensionless RRI coefficients.
    pub rri: CoefficientSet<T>,
    pub rri_r_squared: T,
    /// Fitted dimensionless RI coefficients.
    pub ri: CoefficientSet<T>,
    pub ri_r_squared: T,
    pub validation: bool,
}

/// Per-junction boundary-condition record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct JunctionRecord<T> {
    pub index: usize,
    pub sample: JunctionSample<T>,
    pub r_dist: [T; 2],
    pub validation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CohortManifest<T> {
    pub oracle: String,
    pub config: CohortConfig<T>,
    pub rows: usize,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub junctions: Vec<JunctionRecord<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort<T> {
    pub rows: Vec<CohortRow<T>>,
    pub dataset: TrainingDataset<T>,
    pub manifest: CohortManifest<T>,
}

fn junction_seed(master: u64, index: usize) -> u64 {
    let mut z = master ^ (index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 33)).wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    z = (z ^ (z >> 33)).wrapping_mul(0xC4CE_B9FE_1A85_EC53);
    z ^ (z >> 33)
}

/// Number of junctions assigned to training out of `n`.
fn train_count<T: Scalar>(n: usize, validation_fraction: T) -> usize {
    let v = (T::from_count(n) * validation_fraction).round().to_usize().unwrap_or(0);
    n - v.min(n.saturating_sub(1))
}

/// Oracle coefficients, synthetic series and both fits for one outlet point.
pub fn outlet_row<T: Scalar>(
    g: &DimensionlessGeometry<T>,
    scales: &CharacteristicScales<T>,
    inlet: &Waveform<T>,
    noise: Option<(&Normal<f64>, &mut ChaCha8Rng)>,
) -> Result<(CoefficientSet<T>, TimeSeries<T>, [super::Fit<T>; 2])> {
    let oracle = oracle_coeffs(g)?;
    let dimensional = redimensionalize_coeffs(&oracle, scales)?;
    let flow: Vec<T> = inlet.flow.iter().map(|&q| g.phi * q).collect();
    let mut series = synthesize_timeseries(&dimensional, &inlet.time, &flow)?;
    if let Some((dist, rng)) = noise {
        for p in &mut series.pressure_drop {
            *p += T::lit(dist.sample(rng));
        }
    }
    let rri = fit_rri(&series)?;
    let ri = fit_ri(&series)?;
    Ok((oracle, series, [rri, ri]))
}

/// Samples `config.junctions` junctions and produces 14 labelled rows per
/// junction (7 outlet fractions × 2 outlets). Junctions are split into
/// training and validation sets as a whole.
pub fn build_cohort<T: Scalar>(config: &CohortConfig<T>) -> Result<Cohort<T>> {
    let n = config.junctions;
    if n == 0 {
        return Err(Error::InvalidParameter("cohort needs at least one junction".into()));
    }
    if !(config.noise_sigma >= T::zero()) {
        return Err(Error::InvalidParameter("noise standard deviation must be non-negative".into()));
    }
    if !(config.validation_fraction >= T::zero() && config.validation_fraction < T::one()) {
        return Err(Error::InvalidParameter("validation fraction must lie in [0, 1)".into()));
    }
    let samples = sample_geometries(n, &config.ranges, config.seed)?;
    let l_c = inlet_radius::<T>();
    let scales = CharacteristicScales::new(l_c, &config.fluid, config.reynolds)?;
    let inlet = systolic_waveform(config.re_max, l_c, &config.fluid, config.period, config.n_steps)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(junction_seed(config.seed, usize::MAX)));
    let n_train = train_count(n, config.validation_fraction);
    let mut is_validation = vec![false; n];
    for &i in &order[n_train..] {
        is_validation[i] = true;
    }

    let noise = (config.noise_sigma > T::zero())
        .then(|| Normal::new(0.0, config.noise_sigma.as_f64()))
        .transpose()
        .map_err(|e| Error::InvalidParameter(format!("noise distribution: {e}")))?;

    let per_junction: Vec<Result<(Vec<CohortRow<T>>, JunctionRecord<T>)>> = samples
        .par_iter()
        .enumerate()
        .map(|(i, sample)| {
            let mut rng = ChaCha8Rng::seed_from_u64(junction_seed(config.seed, i));
            let r_dist1 = distal_resistance_for_split(sample.phi[0], config.r_dist2)?;
            let mut rows = Vec::with_capacity(2 * OUTLET_FRACTIONS.len());
            for outlet in 0..2 {
                for &f in &OUTLET_FRACTIONS {
                    let fraction = T::lit(f);
                    let g = sample.outlet_geometry(outlet, fraction)?;
                    let (oracle, _, [rri, ri]) =
                        outlet_row(&g, &scales, &inlet, noise.as_ref().map(|d| (d, &mut rng)))?;
                    rows.push(CohortRow {
                        junction: i,
                        fraction,
                        geometry: g,
                        oracle,
                        rri: nondimensionalize_coeffs(&rri.coefficients, &scales)?,
                        rri_r_squared: rri.r_squared,
                        ri: nondimensionalize_coeffs(&ri.coefficients, &scales)?,
                        ri_r_squared: ri.r_squared,
                        validation: is_validation[i],
                    });
                }
            }
            let record = JunctionRecord {
                index: i,
                sample: *sample,
                r_dist: [r_dist1, config.r_dist2],
                validation: is_validation[i],
            };
            Ok((rows, record))
        })
        .collect();

    let mut rows = Vec::with_capacity(n * 14);
    let mut records = Vec::with_capacity(n);
    for r in per_junction {
        let (mut r, rec) = r?;
        rows.append(&mut r);
        records.push(rec);
    }
    let labeled: Vec<LabeledRow<T>> = rows.iter().map(CohortRow::labeled).collect();
    let dataset = TrainingDataset::from_rows(&labeled)?;
    let validation_rows = rows.iter().filter(|r| r.validation).count();
    let manifest = CohortManifest {
        oracle: ORACLE_ID.into(),
        config: config.clone(),
        rows: rows.len(),
        train_rows: rows.len() - validation_rows,
        validation_rows,
        junctions: records,
    };
    Ok(Cohort {
        rows,
        dataset,
        manifest,
    })
}

impl<T: Scalar> CohortRow<T> {
    pub fn labeled(&self) -> LabeledRow<T> {
        LabeledRow {
            geometry: self.geometry,
            rri: self.rri,
            ri: self.ri,
            validation: self.validation,
        }
    }
}

impl<T: Scalar> Cohort<T> {
    /// Writes the per-model CSVs, `stats.json`, `rows.csv`, `labeled_rows.json`
    /// and `cohort_manifest.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        self.dataset.write(dir)?;
        let labeled: Vec<LabeledRow<T>> = self.rows.iter().map(CohortRow::labeled).collect();
        save_labeled_rows(&labeled, dir.join("labeled_rows.json"))?;
        let path = dir.join("rows.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record([
            "junction", "outlet", "fraction", "split", "alpha_1", "alpha_2", "lambda", "theta_1", "theta_2", "phi",
            "rri_r_lin", "rri_r_quad", "rri_l", "rri_r2", "ri_r_lin", "ri_l", "ri_r2",
        ])?;
        for r in &self.rows {
            let g = &r.geometry;
            let nums = [
                r.fraction,
                g.alpha[0],
                g.alpha[1],
                g.lambda,
                g.theta[0],
                g.theta[1],
                g.phi,
                r.rri.r_lin,
                r.rri.r_quad(),
                r.rri.inductance,
                r.rri_r_squared,
                r.ri.r_lin,
                r.ri.inductance,
                r.ri_r_squared,
            ];
            let mut rec = vec![
                r.junction.to_string(),
                (g.outlet + 1).to_string(),
            ];
            rec.insert(2, nums[0].as_f64().to_string());
            rec.push(if r.validation { "validation" } else { "train" }.into());
            rec.extend(nums[1..].iter().map(|v| v.as_f64().to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        let path = dir.join("cohort_manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serialize");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}
