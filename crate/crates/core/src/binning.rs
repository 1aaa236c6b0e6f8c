//! Fixed-width binning: Scott's-rule bin widths, the system-wide minimum bin
//! count, and discretization of series into bin indices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{Dataset, TimeSeries};

/// Scott's-rule bin width, `3.5 σ / l^(1/3)` with σ the sample standard deviation.
pub fn scott_bin_width(s: &TimeSeries) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::TooShort { needed: 1, found: 0 });
    }
    let sigma = s.std_dev();
    if sigma <= 0.0 {
        return Err(Error::ZeroVariance(s.name.clone()));
    }
    Ok(3.5 * sigma / (s.len() as f64).cbrt())
}

/// Bins needed to cover the observed range of `s` at the Scott width.
pub fn variable_bin_count(s: &TimeSeries) -> Result<usize> {
    let width = scott_bin_width(s)?;
    let (lo, hi) = s.min_max();
    Ok(((hi - lo) / width).ceil() as usize)
}

/// The minimum per-variable Scott bin count over every series in the dataset.
pub fn system_bin_count(d: &Dataset) -> Result<usize> {
    let mut best = usize::MAX;
    for s in d.series() {
        best = best.min(variable_bin_count(s)?);
    }
    if best < 2 {
        return Err(Error::DegenerateBins(best));
    }
    Ok(best)
}

/// Equal-width bin edges per variable, all sharing one bin count.
///
/// Edges span the observed `[min, max]` of each variable; the rightmost edge
/// is inclusive. A constant variable gets a unit-wide range around its value so
/// the edges stay strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningSpec {
    bin_count: usize,
    edges: BTreeMap<String, Vec<f64>>,
}

impl BinningSpec {
    pub fn from_series<'a, I>(series: I, bin_count: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a TimeSeries>,
    {
        if bin_count < 2 {
            return Err(Error::DegenerateBins(bin_count));
        }
        if bin_count > u16::MAX as usize {
            return Err(Error::InvalidConfig(format!("bin count {bin_count} is too large")));
        }
        let edges = series
            .into_iter()
            .map(|s| {
                let (mut lo, mut hi) = s.min_max();
                if !(lo < hi) {
                    lo -= 0.5;
                    hi += 0.5;
                }
                let step = (hi - lo) / bin_count as f64;
                let mut e: Vec<f64> = (0..bin_count).map(|i| lo + step * i as f64).collect();
                e.push(hi);
                (s.name.clone(), e)
            })
            .collect();
        Ok(Self { bin_count, edges })
    }

    /// Spec for every variable of `d` at the given bin count.
    pub fn for_dataset(d: &Dataset, bin_count: usize) -> Result<Self> {
        Self::from_series(d.series(), bin_count)
    }

    /// Spec for `d` at the Scott's-rule system bin count.
    pub fn scott(d: &Dataset) -> Result<Self> {
        Self::for_dataset(d, system_bin_count(d)?)
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    pub fn edges(&self, name: &str) -> Option<&[f64]> {
        self.edges.get(name).map(Vec::as_slice)
    }

    /// Bin index of every value. Values outside the edges are clamped to the
    /// outermost bins.
    pub fn discretize(&self, s: &TimeSeries) -> Result<Vec<u16>> {
        let edges = self
            .edges(&s.name)
            .ok_or_else(|| Error::UnknownVariable(s.name.clone()))?;
        Ok(discretize_with(&s.values, edges))
    }
}

pub(crate) fn discretize_with(values: &[f64], edges: &[f64]) -> Vec<u16> {
    let m = edges.len() - 1;
    let lo = edges[0];
    let hi = edges[m];
    let scale = m as f64 / (hi - lo);
    values
        .iter()
        .map(|&v| {
            let idx = ((v - lo) * scale).floor();
            if idx <= 0.0 {
                0
            } else {
                (idx as usize).min(m - 1) as u16
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// A series of length `l` whose sample standard deviation is exactly `sigma`.
    fn with_sigma(name: &str, sigma: f64, l: usize) -> TimeSeries {
        let raw: Vec<f64> = (0..l).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let s = TimeSeries::new(name, raw);
        let k = sigma / s.std_dev();
        TimeSeries::new(name, s.values.iter().map(|v| v * k).collect())
    }

    #[test]
    fn scott_width_examples() {
        let w = scott_bin_width(&with_sigma("a", 1.0, 1000)).unwrap();
        assert_relative_eq!(w, 0.35, max_relative = 1e-12);
        let w = scott_bin_width(&with_sigma("a", 2.0, 8)).unwrap();
        assert_relative_eq!(w, 3.5, max_relative = 1e-12);
        assert!(matches!(
            scott_bin_width(&TimeSeries::new("c", vec![2.0; 10])),
            Err(Error::ZeroVariance(_))
        ));
    }

    #[test]
    fn system_count_takes_the_minimum() {
        let a = TimeSeries::new("a", (0..200).map(|i| ((i * 37) % 101) as f64).collect());
        let b = TimeSeries::new("b", a.values.clone());
        let d = Dataset::new(vec![a.clone(), b]).unwrap();
        assert_eq!(system_bin_count(&d).unwrap(), variable_bin_count(&a).unwrap());

        // A single spike in `c` stretches its range, raising its count above `a`'s.
        let mut spiky = a.values.clone();
        spiky[5] = 400.0;
        let c = TimeSeries::new("c", spiky);
        let (na, nc) = (variable_bin_count(&a).unwrap(), variable_bin_count(&c).unwrap());
        assert!(nc > na);
        let d = Dataset::new(vec![a, c]).unwrap();
        assert_eq!(system_bin_count(&d).unwrap(), na);
    }

    #[test]
    fn system_count_rejects_constant_and_degenerate() {
        let a = TimeSeries::new("a", vec![1.0, 2.0, 3.0, 4.0]);
        let c = TimeSeries::new("c", vec![1.0; 4]);
        assert!(matches!(
            system_bin_count(&Dataset::new(vec![a, c]).unwrap()),
            Err(Error::ZeroVariance(_))
        ));
        // Two points: width 3.5*0.707/1.26 = 1.96 > range 1, one bin.
        let a = TimeSeries::new("a", vec![0.0, 1.0]);
        let b = TimeSeries::new("b", vec![1.0, 0.0]);
        assert!(matches!(
            system_bin_count(&Dataset::new(vec![a, b]).unwrap()),
            Err(Error::DegenerateBins(1))
        ));
    }

    #[test]
    fn every_value_lands_in_one_bin() {
        let s = TimeSeries::new("s", vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let spec = BinningSpec::from_series([&s], 4).unwrap();
        assert_eq!(spec.edges("s").unwrap(), [0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(spec.discretize(&s).unwrap(), [0, 1, 2, 3, 3]);

        let c = TimeSeries::new("c", vec![3.0; 3]);
        let spec = BinningSpec::from_series([&c], 3).unwrap();
        let e = spec.edges("c").unwrap();
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(spec.discretize(&c).unwrap(), [1, 1, 1]);

        assert!(matches!(
            spec.discretize(&TimeSeries::new("zz", vec![1.0])),
            Err(Error::UnknownVariable(_))
        ));
    }
}
