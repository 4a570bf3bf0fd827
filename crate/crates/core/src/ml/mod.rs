//! Neural surrogates mapping junction geometry to junction coefficients.
//!
//! One small ReLU network is trained per coefficient and per outlet. Inputs are
//! the z-normalized non-dimensional geometry vector, outputs the z-normalized
//! non-dimensional coefficient.

mod bundle;
mod mlp;
mod predict;
mod train;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::Interval;
use crate::error::{Error, Result};
use crate::nondim::{CoefficientSet, DimensionlessGeometry, ModelKind, ZNormStats, FEATURE_COUNT, FEATURE_NAMES};
use crate::scalar::Scalar;

pub use bundle::{load_models, models_from_json, models_to_json, save_models, ModelBundle, ScalesPolicy, BUNDLE_VERSION};
pub use mlp::{Gradients, Mlp};
pub use predict::{
    junction_geometry, predict_junction_coeffs, predict_network, ClampedFeature, JunctionPrediction, OutletPrediction,
    PredictionReport,
};
pub use train::{train_model, train_models, EpochLoss, TrainConfig, TrainReport, TrainedModel};

/// Which junction coefficient a model predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    RLin,
    RQuad,
    Inductance,
}

impl Coefficient {
    pub fn name(self) -> &'static str {
        match self {
            Coefficient::RLin => "r_lin",
            Coefficient::RQuad => "r_quad",
            Coefficient::Inductance => "l",
        }
    }

    pub fn of<T: Scalar>(self, c: &CoefficientSet<T>) -> T {
        match self {
            Coefficient::RLin => c.r_lin,
            Coefficient::RQuad => c.r_quad(),
            Coefficient::Inductance => c.inductance,
        }
    }
}

/// Model target: outlet × law × coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoefficientTag {
    pub outlet: usize,
    pub kind: ModelKind,
    pub coefficient: Coefficient,
}

impl CoefficientTag {
    /// All ten targets in the order of the default architecture table.
    pub const ALL: [CoefficientTag; 10] = [
        CoefficientTag::new(0, ModelKind::Rri, Coefficient::RLin),
        CoefficientTag::new(1, ModelKind::Rri, Coefficient::RLin),
        CoefficientTag::new(0, ModelKind::Rri, Coefficient::RQuad),
        CoefficientTag::new(1, ModelKind::Rri, Coefficient::RQuad),
        CoefficientTag::new(0, ModelKind::Rri, Coefficient::Inductance),
        CoefficientTag::new(1, ModelKind::Rri, Coefficient::Inductance),
        CoefficientTag::new(0, ModelKind::Ri, Coefficient::RLin),
        CoefficientTag::new(1, ModelKind::Ri, Coefficient::RLin),
        CoefficientTag::new(0, ModelKind::Ri, Coefficient::Inductance),
        CoefficientTag::new(1, ModelKind::Ri, Coefficient::Inductance),
    ];

    pub const fn new(outlet: usize, kind: ModelKind, coefficient: Coefficient) -> Self {
        Self {
            outlet,
            kind,
            coefficient,
        }
    }

    /// Tags needed to predict `kind` coefficients at one outlet.
    pub fn for_outlet(outlet: usize, kind: ModelKind) -> Vec<CoefficientTag> {
        Self::ALL
            .iter()
            .copied()
            .filter(|t| t.outlet == outlet && t.kind == kind)
            .collect()
    }

    /// Default `(hidden layers, width)`.
    pub fn architecture(self) -> (usize, usize) {
        use Coefficient::*;
        use ModelKind::*;
        match (self.outlet, self.kind, self.coefficient) {
            (0, Rri, RLin) => (2, 15),
            (_, Rri, RLin) => (1, 40),
            (0, Rri, RQuad) => (2, 30),
            (_, Rri, RQuad) => (1, 23),
            (_, Rri, Inductance) => (1, 12),
            (0, Ri, RLin) => (1, 10),
            (_, Ri, RLin) => (1, 20),
            (0, Ri, _) => (1, 20),
            (_, Ri, _) => (1, 40),
        }
    }

    /// Layer widths from input to output under the default architecture.
    pub fn default_widths(self) -> Vec<usize> {
        let (depth, width) = self.architecture();
        let mut w = vec![FEATURE_COUNT];
        w.extend(std::iter::repeat(width).take(depth));
        w.push(1);
        w
    }

    pub fn name(&self) -> String {
        format!("outlet{}_{}_{}", self.outlet + 1, self.kind.name(), self.coefficient.name())
    }
}

impl std::fmt::Display for CoefficientTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

impl std::str::FromStr for CoefficientTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Schema(format!("unknown coefficient tag `{s}`")))
    }
}

impl Serialize for CoefficientTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for CoefficientTag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Observed range of the base geometry entries at one outlet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutletRanges<T> {
    pub alpha: [Interval<T>; 2],
    pub lambda: Interval<T>,
    pub theta: [Interval<T>; 2],
    pub phi: Interval<T>,
}

impl<T: Scalar> OutletRanges<T> {
    fn of(rows: &[&DimensionlessGeometry<T>]) -> Self {
        let span = |f: &dyn Fn(&DimensionlessGeometry<T>) -> T| {
            rows.iter().fold(
                Interval {
                    min: T::infinity(),
                    max: T::neg_infinity(),
                },
                |iv, g| Interval {
                    min: iv.min.min(f(g)),
                    max: iv.max.max(f(g)),
                },
            )
        };
        Self {
            alpha: [span(&|g| g.alpha[0]), span(&|g| g.alpha[1])],
            lambda: span(&|g| g.lambda),
            theta: [span(&|g| g.theta[0]), span(&|g| g.theta[1])],
            phi: span(&|g| g.phi),
        }
    }

    fn validate(&self) -> Result<()> {
        let all = self.alpha.iter().chain(&self.theta).chain([&self.lambda, &self.phi]);
        for iv in all {
            if !(iv.min.is_finite() && iv.max.is_finite() && iv.min <= iv.max) {
                return Err(Error::Schema("model input ranges must be finite with min ≤ max".into()));
            }
        }
        Ok(())
    }
}

/// Input ranges seen in training, per outlet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanges<T> {
    pub outlets: [OutletRanges<T>; 2],
}

impl<T: Scalar> FeatureRanges<T> {
    pub fn validate(&self) -> Result<()> {
        self.outlets.iter().try_for_each(|o| o.validate())
    }
}

/// One labelled junction outlet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledRow<T> {
    pub geometry: DimensionlessGeometry<T>,
    /// Dimensionless RRI coefficients.
    pub rri: CoefficientSet<T>,
    /// Dimensionless RI coefficients.
    pub ri: CoefficientSet<T>,
    pub validation: bool,
}

impl<T: Scalar> LabeledRow<T> {
    pub fn target(&self, tag: CoefficientTag) -> T {
        match tag.kind {
            ModelKind::Rri => tag.coefficient.of(&self.rri),
            ModelKind::Ri => tag.coefficient.of(&self.ri),
        }
    }
}

/// Writes labelled rows as JSON; values round-trip exactly.
pub fn save_labeled_rows<T: Scalar>(rows: &[LabeledRow<T>], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string(rows).expect("rows serialize");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_labeled_rows<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<LabeledRow<T>>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(&text, e))
}

/// Normalized data for a single model.
#[derive(Debug, Clone, PartialEq)]
pub struct TagDataset<T> {
    pub tag: CoefficientTag,
    pub znorm_out: ZNormStats<T>,
    pub train_x: Vec<Vec<T>>,
    pub train_y: Vec<T>,
    pub val_x: Vec<Vec<T>>,
    pub val_y: Vec<T>,
}

/// Training data for every coefficient model, normalized with shared input statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingDataset<T> {
    pub znorm_in: ZNormStats<T>,
    pub ranges: FeatureRanges<T>,
    pub tables: Vec<TagDataset<T>>,
}

impl<T: Scalar> TrainingDataset<T> {
    /// Fits normalization statistics on the training rows and normalizes all rows.
    pub fn from_rows(rows: &[LabeledRow<T>]) -> Result<Self> {
        let train: Vec<&LabeledRow<T>> = rows.iter().filter(|r| !r.validation).collect();
        if train.is_empty() {
            return Err(Error::InvalidParameter("training split is empty".into()));
        }
        for k in 0..2 {
            if !train.iter().any(|r| r.geometry.outlet == k) {
                return Err(Error::InvalidParameter(format!("no training rows for outlet {}", k + 1)));
            }
        }
        let features: Vec<[T; FEATURE_COUNT]> = train.iter().map(|r| r.geometry.features()).collect();
        let znorm_in = ZNormStats::fit(&features, &FEATURE_NAMES)?;
        let outlet_ranges = |k: usize| {
            let g: Vec<&DimensionlessGeometry<T>> =
                train.iter().filter(|r| r.geometry.outlet == k).map(|r| &r.geometry).collect();
            OutletRanges::of(&g)
        };
        let ranges = FeatureRanges {
            outlets: [outlet_ranges(0), outlet_ranges(1)],
        };
        let mut tables = Vec::with_capacity(CoefficientTag::ALL.len());
        for tag in CoefficientTag::ALL {
            let targets: Vec<[T; 1]> = train
                .iter()
                .filter(|r| r.geometry.outlet == tag.outlet)
                .map(|r| [r.target(tag)])
                .collect();
            let label = tag.name();
            let znorm_out = ZNormStats::fit(&targets, &[label.as_str()])?;
            let mut t = TagDataset {
                tag,
                znorm_out,
                train_x: vec![],
                train_y: vec![],
                val_x: vec![],
                val_y: vec![],
            };
            for r in rows.iter().filter(|r| r.geometry.outlet == tag.outlet) {
                let x = znorm_in.apply(&r.geometry.features());
                let y = t.znorm_out.apply(&[r.target(tag)])[0];
                if r.validation {
                    t.val_x.push(x);
                    t.val_y.push(y);
                } else {
                    t.train_x.push(x);
                    t.train_y.push(y);
                }
            }
            tables.push(t);
        }
        Ok(Self {
            znorm_in,
            ranges,
            tables,
        })
    }

    pub fn table(&self, tag: CoefficientTag) -> Option<&TagDataset<T>> {
        self.tables.iter().find(|t| t.tag == tag)
    }

    /// Writes one `<tag>.csv` per model plus `stats.json`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.tag.name()));
            let mut w = csv::Writer::from_path(&path)?;
            let mut header = vec!["split".to_string()];
            header.extend(FEATURE_NAMES.iter().map(|n| format!("{n}_z")));
            header.push("target_z".into());
            w.write_record(&header)?;
            let splits = [("train", &t.train_x, &t.train_y), ("validation", &t.val_x, &t.val_y)];
            for (name, xs, ys) in splits {
                for (x, y) in xs.iter().zip(ys.iter()) {
                    let mut rec = vec![name.to_string()];
                    rec.extend(x.iter().map(|v| v.as_f64().to_string()));
                    rec.push(y.as_f64().to_string());
                    w.write_record(&rec)?;
                }
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        let stats = DatasetStats {
            znorm_in: self.znorm_in.clone(),
            znorm_out: self.tables.iter().map(|t| (t.tag, t.znorm_out.clone())).collect(),
            ranges: self.ranges,
        };
        let path = dir.join("stats.json");
        let text = serde_json::to_string_pretty(&stats).expect("stats serialize");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

#[derive(Serialize)]
#[serde(bound = "T: Scalar")]
struct DatasetStats<T> {
    znorm_in: ZNormStats<T>,
    znorm_out: Vec<(CoefficientTag, ZNormStats<T>)>,
    ranges: FeatureRanges<T>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip_and_architectures() {
        for t in CoefficientTag::ALL {
            assert_eq!(t.name().parse::<CoefficientTag>().unwrap(), t);
        }
        let tag = CoefficientTag::new(0, ModelKind::Rri, Coefficient::RQuad);
        assert_eq!(tag.default_widths(), vec![10, 30, 30, 1]);
        assert_eq!(CoefficientTag::new(1, ModelKind::Ri, Coefficient::Inductance).architecture(), (1, 40));
        assert_eq!(CoefficientTag::new(1, ModelKind::Rri, Coefficient::RQuad).architecture(), (1, 23));
        assert!("outlet3_rri_l".parse::<CoefficientTag>().is_err());
    }
}
