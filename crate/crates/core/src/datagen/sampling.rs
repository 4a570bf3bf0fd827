//! Latin hypercube sampling of junction geometries.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nondim::DimensionlessGeometry;
use crate::scalar::Scalar;

/// Closed interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub min: T,
    pub max: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(min: f64, max: f64) -> Self {
        Self {
            min: T::lit(min),
            max: T::lit(max),
        }
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.min && x <= self.max
    }

    pub fn width(&self) -> T {
        self.max - self.min
    }
}

/// Sampling ranges of the non-dimensional junction parameters, per outlet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingRanges<T> {
    pub alpha: [Interval<T>; 2],
    /// Full daughter-branch length over inlet radius.
    pub lambda: [Interval<T>; 2],
    pub theta: [Interval<T>; 2],
    pub phi: [Interval<T>; 2],
}

impl<T: Scalar> Default for SamplingRanges<T> {
    fn default() -> Self {
        Self {
            alpha: [Interval::new(0.40, 1.2), Interval::new(0.37, 1.2)],
            lambda: [Interval::new(15.0, 41.0), Interval::new(16.0, 42.0)],
            theta: [Interval::new(0.05, 1.41), Interval::new(0.33, 1.51)],
            phi: [Interval::new(0.15, 0.89), Interval::new(0.10, 0.85)],
        }
    }
}

impl<T: Scalar> SamplingRanges<T> {
    pub fn validate(&self) -> Result<()> {
        let all = self.alpha.iter().chain(&self.lambda).chain(&self.theta).chain(&self.phi);
        if all.clone().any(|i| !(i.min < i.max)) {
            return Err(Error::InvalidParameter("every sampling range needs min < max".into()));
        }
        if self.alpha.iter().chain(&self.lambda).any(|i| !(i.min > T::zero())) {
            return Err(Error::InvalidParameter("area and length ratios must be positive".into()));
        }
        if !(self.phi[0].min > T::zero() && self.phi[0].max < T::one()) {
            return Err(Error::InvalidParameter("flow split range must lie inside (0, 1)".into()));
        }
        Ok(())
    }

    /// The hypercube dimensions actually sampled: `φ₂ = 1 − φ₁` is derived.
    pub fn base_intervals(&self) -> [Interval<T>; BASE_DIMS] {
        [
            self.alpha[0],
            self.alpha[1],
            self.lambda[0],
            self.lambda[1],
            self.theta[0],
            self.theta[1],
            self.phi[0],
        ]
    }
}

/// Number of independently sampled dimensions.
pub const BASE_DIMS: usize = 7;

/// One sampled bifurcation, both outlets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionSample<T> {
    pub alpha: [T; 2],
    /// Daughter-branch lengths over inlet radius.
    pub branch_lambda: [T; 2],
    pub theta: [T; 2],
    pub phi: [T; 2],
}

impl<T: Scalar> JunctionSample<T> {
    fn from_base(x: &[T; BASE_DIMS]) -> Self {
        Self {
            alpha: [x[0], x[1]],
            branch_lambda: [x[2], x[3]],
            theta: [x[4], x[5]],
            phi: [x[6], T::one() - x[6]],
        }
    }

    pub fn base(&self) -> [T; BASE_DIMS] {
        [
            self.alpha[0],
            self.alpha[1],
            self.branch_lambda[0],
            self.branch_lambda[1],
            self.theta[0],
            self.theta[1],
            self.phi[0],
        ]
    }

    /// Geometry seen from `outlet` with the junction covering `fraction` of the branch.
    pub fn outlet_geometry(&self, outlet: usize, fraction: T) -> Result<DimensionlessGeometry<T>> {
        DimensionlessGeometry::new(
            outlet,
            self.alpha,
            fraction * self.branch_lambda[outlet],
            self.theta,
            self.phi[outlet],
        )
    }
}

/// Latin hypercube sample: along every base dimension the `n` samples occupy
/// the `n` equal-width strata exactly once.
pub fn sample_geometries<T: Scalar>(n: usize, ranges: &SamplingRanges<T>, seed: u64) -> Result<Vec<JunctionSample<T>>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let intervals = ranges.base_intervals();
    let nf = T::from_count(n);
    let mut columns: Vec<Vec<T>> = Vec::with_capacity(BASE_DIMS);
    for iv in &intervals {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        let col = strata
            .into_iter()
            .map(|s| {
                let u = T::lit(rng.gen::<f64>());
                let frac = ((T::from_count(s) + u) / nf).min(T::one());
                iv.min + frac * iv.width()
            })
            .collect();
        columns.push(col);
    }
    Ok((0..n)
        .map(|i| {
            let mut x = [T::zero(); BASE_DIMS];
            for (d, c) in columns.iter().enumerate() {
                x[d] = c[i];
            }
            JunctionSample::from_base(&x)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_ranges() {
        let r = SamplingRanges::<f64>::default();
        assert_eq!((r.alpha[0].min, r.alpha[0].max), (0.40, 1.2));
        assert_eq!((r.theta[0].min, r.theta[0].max), (0.05, 1.41));
        assert_eq!((r.phi[0].min, r.phi[0].max), (0.15, 0.89));
        assert_eq!((r.lambda[1].min, r.lambda[1].max), (16.0, 42.0));
    }

    #[test]
    fn single_sample_in_range() {
        let r = SamplingRanges::<f64>::default();
        let s = sample_geometries(1, &r, 7).unwrap();
        assert_eq!(s.len(), 1);
        for (x, iv) in s[0].base().iter().zip(r.base_intervals()) {
            assert!(iv.contains(*x));
        }
    }

    #[test]
    fn one_per_decile() {
        let r = SamplingRanges::<f64>::default();
        let s = sample_geometries(10, &r, 3).unwrap();
        for (d, iv) in r.base_intervals().iter().enumerate() {
            let mut strata: Vec<usize> = s
                .iter()
                .map(|j| (((j.base()[d] - iv.min) / iv.width()) * 10.0).floor() as usize)
                .collect();
            strata.sort();
            assert_eq!(strata, (0..10).collect::<Vec<_>>());
        }
    }

    #[test]
    fn deterministic() {
        let r = SamplingRanges::<f64>::default();
        assert_eq!(sample_geometries(20, &r, 11).unwrap(), sample_geometries(20, &r, 11).unwrap());
        assert_ne!(sample_geometries(20, &r, 11).unwrap(), sample_geometries(20, &r, 12).unwrap());
    }
}
