//! Model bundle: trained networks together with everything needed to apply them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CoefficientTag, FeatureRanges, Mlp, TrainedModel, TrainingDataset};
use crate::error::{Error, Result};
use crate::nondim::{ZNormStats, FEATURE_COUNT};
use crate::scalar::Scalar;

pub const BUNDLE_VERSION: &str = "rom0d-models/1";

/// How the characteristic scales of a junction are chosen at prediction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalesPolicy<T> {
    /// Always `inlet_radius`.
    pub characteristic_length: String,
    pub reynolds: T,
}

impl<T: Scalar> ScalesPolicy<T> {
    pub fn inlet_radius(reynolds: T) -> Self {
        Self {
            characteristic_length: "inlet_radius".into(),
            reynolds,
        }
    }
}

/// Everything needed to predict junction coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle<T> {
    pub scales_policy: ScalesPolicy<T>,
    pub znorm_in: ZNormStats<T>,
    pub znorm_out: BTreeMap<CoefficientTag, ZNormStats<T>>,
    pub ranges: FeatureRanges<T>,
    pub models: BTreeMap<CoefficientTag, Mlp<T>>,
}

impl<T: Scalar> ModelBundle<T> {
    pub fn new(dataset: &TrainingDataset<T>, models: Vec<TrainedModel<T>>, reynolds: T) -> Result<Self> {
        let mut znorm_out = BTreeMap::new();
        let mut map = BTreeMap::new();
        for m in models {
            let table = dataset
                .table(m.tag)
                .ok_or_else(|| Error::Schema(format!("no dataset table for model {}", m.tag)))?;
            znorm_out.insert(m.tag, table.znorm_out.clone());
            map.insert(m.tag, m.mlp);
        }
        let b = Self {
            scales_policy: ScalesPolicy::inlet_radius(reynolds),
            znorm_in: dataset.znorm_in.clone(),
            znorm_out,
            ranges: dataset.ranges,
            models: map,
        };
        b.validate()?;
        Ok(b)
    }

    /// Checks statistics dimensions, model input sizes and ranges.
    pub fn validate(&self) -> Result<()> {
        self.znorm_in.validate()?;
        if self.znorm_in.dim() != FEATURE_COUNT {
            return Err(Error::ShapeMismatch(format!(
                "input statistics have dimension {}, expected {FEATURE_COUNT}",
                self.znorm_in.dim()
            )));
        }
        if !(self.scales_policy.reynolds > T::zero()) || self.scales_policy.characteristic_length != "inlet_radius" {
            return Err(Error::Schema("unsupported scales policy".into()));
        }
        self.ranges.validate()?;
        for (tag, m) in &self.models {
            if m.input_dim() != FEATURE_COUNT {
                return Err(Error::ShapeMismatch(format!(
                    "model {tag} expects {} inputs, expected {FEATURE_COUNT}",
                    m.input_dim()
                )));
            }
            let st = self
                .znorm_out
                .get(tag)
                .ok_or_else(|| Error::Schema(format!("model {tag} has no output statistics")))?;
            st.validate()?;
            if st.dim() != 1 {
                return Err(Error::ShapeMismatch(format!("output statistics of {tag} are not scalar")));
            }
        }
        Ok(())
    }

    /// Non-dimensional coefficient predicted from a z-normalized feature vector.
    pub fn predict_dimensionless(&self, tag: CoefficientTag, features: &[T]) -> Result<T> {
        let model = self
            .models
            .get(&tag)
            .ok_or_else(|| Error::Schema(format!("bundle has no model for {tag}")))?;
        let z = self.znorm_in.apply(features);
        let y = model.forward(&z)?;
        Ok(self.znorm_out[&tag].invert(&[y])[0])
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct BundleFile<T> {
    version: String,
    scales_policy: ScalesPolicy<T>,
    znorm_in: ZNormStats<T>,
    znorm_out: Vec<TaggedStats<T>>,
    ranges: FeatureRanges<T>,
    models: Vec<ModelEntry<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct TaggedStats<T> {
    tag: CoefficientTag,
    mean: T,
    std: T,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
struct ModelEntry<T> {
    tag: CoefficientTag,
    widths: Vec<usize>,
    /// Per layer, one row per output unit.
    weights: Vec<Vec<Vec<T>>>,
    biases: Vec<Vec<T>>,
}

pub fn models_to_json<T: Scalar>(bundle: &ModelBundle<T>) -> String {
    let file = BundleFile {
        version: BUNDLE_VERSION.into(),
        scales_policy: bundle.scales_policy.clone(),
        znorm_in: bundle.znorm_in.clone(),
        znorm_out: bundle
            .znorm_out
            .iter()
            .map(|(tag, s)| TaggedStats {
                tag: *tag,
                mean: s.mean[0],
                std: s.std[0],
            })
            .collect(),
        ranges: bundle.ranges,
        models: bundle
            .models
            .iter()
            .map(|(tag, m)| ModelEntry {
                tag: *tag,
                widths: m.widths().to_vec(),
                weights: m
                    .weights()
                    .iter()
                    .enumerate()
                    .map(|(l, w)| w.chunks(m.widths()[l]).map(|r| r.to_vec()).collect())
                    .collect(),
                biases: m.biases().to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("bundle serialization cannot fail")
}

pub fn models_from_json<T: Scalar>(text: &str) -> Result<ModelBundle<T>> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::json(text, e))?;
    let found = value.get("version").and_then(|v| v.as_str()).unwrap_or("<missing>");
    if found != BUNDLE_VERSION {
        return Err(Error::Version {
            expected: BUNDLE_VERSION.into(),
            found: found.into(),
        });
    }
    let file: BundleFile<T> = serde_json::from_str(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => Error::Schema(e.to_string()),
        _ => Error::json(text, e),
    })?;
    let mut models = BTreeMap::new();
    for m in file.models {
        let mut flat = Vec::with_capacity(m.weights.len());
        for (l, rows) in m.weights.into_iter().enumerate() {
            let n_in = m.widths.get(l).copied().unwrap_or(0);
            if let Some(r) = rows.iter().find(|r| r.len() != n_in) {
                return Err(Error::ShapeMismatch(format!(
                    "model {}: layer {l} has a weight row of length {}, expected {n_in}",
                    m.tag,
                    r.len()
                )));
            }
            flat.push(rows.into_iter().flatten().collect());
        }
        let mlp = Mlp::from_parts(m.widths, flat, m.biases)
            .map_err(|e| Error::ShapeMismatch(format!("model {}: {e}", m.tag)))?;
        if models.insert(m.tag, mlp).is_some() {
            return Err(Error::Schema(format!("duplicate model {}", m.tag)));
        }
    }
    let bundle = ModelBundle {
        scales_policy: file.scales_policy,
        znorm_in: file.znorm_in,
        znorm_out: file
            .znorm_out
            .into_iter()
            .map(|s| {
                (
                    s.tag,
                    ZNormStats {
                        mean: vec![s.mean],
                        std: vec![s.std],
                    },
                )
            })
            .collect(),
        ranges: file.ranges,
        models,
    };
    bundle.validate()?;
    Ok(bundle)
}

pub fn save_models<T: Scalar>(bundle: &ModelBundle<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, models_to_json(bundle)).map_err(|e| Error::io(path, e))
}

pub fn load_models<T: Scalar>(path: impl AsRef<Path>) -> Result<ModelBundle<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    models_from_json(&text)
}


#[cfg(test)]
mod tests {
    use super::fixtures::random_bundle;
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let b = random_bundle(1);
        let back: ModelBundle<f64> = models_from_json(&models_to_json(&b)).unwrap();
        assert_eq!(back, b);
        let x: Vec<f64> = (0..FEATURE_COUNT).map(|i| 0.1 * i as f64 + 0.3).collect();
        for tag in CoefficientTag::ALL {
            let a = b.predict_dimensionless(tag, &x).unwrap();
            let c = back.predict_dimensionless(tag, &x).unwrap();
            assert_eq!(a.to_bits(), c.to_bits());
        }
    }

    #[test]
    fn truncated_file_reports_offset() {
        let text = models_to_json(&random_bundle(2));
        let cut = &text[..text.len() / 2];
        assert!(matches!(models_from_json::<f64>(cut), Err(Error::Parse { .. })));
    }

    #[test]
    fn bad_shapes_and_versions() {
        let text = models_to_json(&random_bundle(3));
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["models"][0]["weights"][0][0].as_array_mut().unwrap().pop();
        assert!(matches!(
            models_from_json::<f64>(&v.to_string()),
            Err(Error::ShapeMismatch(_))
        ));
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["version"] = "other/9".into();
        assert!(matches!(models_from_json::<f64>(&v.to_string()), Err(Error::Version { .. })));
    }
}
