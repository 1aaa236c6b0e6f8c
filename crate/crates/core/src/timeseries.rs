//! Named, equally spaced time series and the two preprocessing transforms
//! applied to observational data: linear detrending and removal of the mean
//! seasonal cycle.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub name: String,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
    pub fn std_dev(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean();
        let ss: f64 = self.values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Contiguous slice `[start, start + len)` under the same name.
    pub fn window(&self, start: usize, len: usize) -> TimeSeries {
        TimeSeries::new(self.name.clone(), self.values[start..start + len].to_vec())
    }
}

/// A set of aligned series of equal length with unique names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    series: Vec<TimeSeries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sampling: Option<String>,
}

impl Dataset {
    /// Builds and validates a dataset.
    pub fn new(series: Vec<TimeSeries>) -> Result<Self> {
        validate_dataset(Self::raw(series, None))
    }

    /// Builds a dataset without checking any invariant. Pass it through
    /// [`validate_dataset`] before analysis.
    pub fn raw(series: Vec<TimeSeries>, sampling: Option<String>) -> Self {
        Self { series, sampling }
    }

    pub fn with_sampling(mut self, label: impl Into<String>) -> Self {
        self.sampling = Some(label.into());
        self
    }

    pub fn sampling(&self) -> Option<&str> {
        self.sampling.as_deref()
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn names(&self) -> Vec<&str> {
        self.series.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&TimeSeries> {
        self.series.iter().find(|s| s.name == name)
    }

    /// Common series length.
    pub fn len(&self) -> usize {
        self.series.first().map_or(0, TimeSeries::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_vars(&self) -> usize {
        self.series.len()
    }

    /// Every series restricted to `[start, start + len)`.
    pub fn window(&self, start: usize, len: usize) -> Dataset {
        Dataset {
            series: self.series.iter().map(|s| s.window(start, len)).collect(),
            sampling: self.sampling.clone(),
        }
    }

    pub fn map_series<F>(&self, mut f: F) -> Result<Dataset>
    where
        F: FnMut(&TimeSeries) -> Result<TimeSeries>,
    {
        let series = self.series.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            series,
            sampling: self.sampling.clone(),
        })
    }
}

/// Checks the dataset invariants: at least two series, equal lengths,
/// finite values and unique names.
pub fn validate_dataset(raw: Dataset) -> Result<Dataset> {
    if raw.series.len() < 2 {
        return Err(Error::TooFewSeries(raw.series.len()));
    }
    let expected = raw.series[0].len();
    if expected == 0 {
        return Err(Error::TooShort {
            needed: 1,
            found: 0,
        });
    }
    let mut seen = HashSet::new();
    for s in &raw.series {
        if !seen.insert(s.name.as_str()) {
            return Err(Error::DuplicateName(s.name.clone()));
        }
        if s.len() != expected {
            return Err(Error::LengthMismatch {
                name: s.name.clone(),
                expected,
                found: s.len(),
            });
        }
        if let Some(index) = s.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                name: s.name.clone(),
                index,
            });
        }
    }
    Ok(raw)
}

/// Residuals of an ordinary least-squares line fitted against the sample index.
pub fn detrend_linear(s: &TimeSeries) -> Result<TimeSeries> {
    let n = s.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, found: n });
    }
    let t_mean = (n - 1) as f64 / 2.0;
    let y_mean = s.mean();
    let (sxy, sxx) = s
        .values
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(sxy, sxx), (i, &y)| {
            let dt = i as f64 - t_mean;
            (sxy + dt * (y - y_mean), sxx + dt * dt)
        });
    let slope = sxy / sxx;
    let values = s
        .values
        .iter()
        .enumerate()
        .map(|(i, &y)| y - y_mean - slope * (i as f64 - t_mean))
        .collect();
    Ok(TimeSeries::new(s.name.clone(), values))
}

/// Subtracts, for every phase `p` in `0..period`, the mean of all values at
/// indices congruent to `p`. Incomplete final cycles are fine.
pub fn deseasonalize(s: &TimeSeries, period: usize) -> Result<TimeSeries> {
    if period == 0 {
        return Err(Error::InvalidPeriod(period));
    }
    if s.len() < period {
        return Err(Error::TooShort {
            needed: period,
            found: s.len(),
        });
    }
    let mut sums = vec![0.0; period];
    let mut counts = vec![0usize; period];
    for (i, &v) in s.values.iter().enumerate() {
        sums[i % period] += v;
        counts[i % period] += 1;
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let values = s
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| v - means[i % period])
        .collect();
    Ok(TimeSeries::new(s.name.clone(), values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessSpec {
    #[serde(default)]
    pub detrend: bool,
    #[serde(default)]
    pub deseasonalize: bool,
    #[serde(default = "default_period")]
    pub season_period: usize,
}

fn default_period() -> usize {
    12
}

impl Default for PreprocessSpec {
    fn default() -> Self {
        Self {
            detrend: false,
            deseasonalize: false,
            season_period: default_period(),
        }
    }
}

impl PreprocessSpec {
    pub fn validate(&self) -> Result<()> {
        if self.deseasonalize && self.season_period < 2 {
            return Err(Error::InvalidPeriod(self.season_period));
        }
        Ok(())
    }

    /// Detrends, then removes the seasonal cycle, as configured.
    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        self.validate()?;
        d.map_series(|s| {
            let mut out = s.clone();
            if self.detrend {
                out = detrend_linear(&out)?;
            }
            if self.deseasonalize {
                out = deseasonalize(&out, self.season_period)?;
            }
            Ok(out)
        })
    }
}

/// Reads a comma-separated table: a header of variable names, then one row
/// per time step. A leading column named `t` is ignored.
pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .clone();
    let skip = usize::from(headers.get(0) == Some("t"));
    let names: Vec<String> = headers.iter().skip(skip).map(str::to_owned).collect();
    let mut columns = vec![Vec::new(); names.len()];
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        if record.len() != headers.len() {
            return Err(Error::Parse(format!(
                "row {} has {} cells, expected {}",
                row + 2,
                record.len(),
                headers.len()
            )));
        }
        for (col, cell) in record.iter().skip(skip).enumerate() {
            if cell.is_empty() {
                return Err(Error::Parse(format!(
                    "blank cell at row {}, column `{}`",
                    row + 2,
                    names[col]
                )));
            }
            let v: f64 = cell.parse().map_err(|_| {
                Error::Parse(format!(
                    "cannot parse `{cell}` at row {}, column `{}`",
                    row + 2,
                    names[col]
                ))
            })?;
            columns[col].push(v);
        }
    }
    let series = names
        .into_iter()
        .zip(columns)
        .map(|(n, v)| TimeSeries::new(n, v))
        .collect();
    validate_dataset(Dataset::raw(series, None))
}

/// Writes the dataset in the format accepted by [`read_csv`]. Values use the
/// shortest representation that round-trips exactly.
pub fn write_csv<W: Write>(d: &Dataset, writer: W) -> Result<()> {
    let io = |e: csv::Error| Error::Parse(e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(d.names()).map_err(io)?;
    for i in 0..d.len() {
        w.write_record(d.series().iter().map(|s| s.values[i].to_string()))
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}
