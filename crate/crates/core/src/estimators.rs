//! Plug-in entropy estimators over fixed bins: Shannon and joint entropy,
//! mutual information, and lagged transfer entropy.
//!
//! All quantities are in bits. Transfer entropy is evaluated from four joint
//! entropies of the aligned triple `(x[t-τ], y[t-τ], y[t])`, `t ∈ [τ, l)`:
//!
//! ```text
//! TE(X → Y, τ) = -H(Y[t-τ]) + H(X[t-τ], Y[t-τ]) + H(Y[t-τ], Y[t]) - H(X[t-τ], Y[t-τ], Y[t])
//! ```
//!
//! which is the conditional mutual information `I(X[t-τ]; Y[t] | Y[t-τ])` of
//! the empirical distribution. Source and target use the same lag.

use serde::{Deserialize, Serialize};

use crate::binning::BinningSpec;
use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;

/// A source lag τ ≥ 1, shared by the source and the target's own past.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Lag(usize);

impl Lag {
    pub fn new(tau: usize) -> Result<Self> {
        if tau == 0 {
            return Err(Error::InvalidConfig("lag must be at least 1".into()));
        }
        Ok(Self(tau))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// Dense bin-count table over one to three discretized variables.
#[derive(Debug, Clone, PartialEq)]
pub struct JointHistogram {
    dims: Vec<String>,
    shape: Vec<usize>,
    counts: Vec<u64>,
    total: u64,
}

impl JointHistogram {
    /// Counts co-occurring bin indices. Every column must have the same length
    /// and every index must be below `bin_count`.
    pub fn from_bins(dims: &[&str], bin_count: usize, columns: &[&[u16]]) -> Result<Self> {
        if columns.is_empty() || columns.len() > 3 || dims.len() != columns.len() {
            return Err(Error::InvalidConfig(
                "a joint histogram covers one to three variables".into(),
            ));
        }
        let n = columns[0].len();
        if let Some(c) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::LengthMismatch {
                name: "histogram column".into(),
                expected: n,
                found: c.len(),
            });
        }
        let shape = vec![bin_count; columns.len()];
        let mut counts = vec![0u64; bin_count.pow(columns.len() as u32)];
        for t in 0..n {
            let mut cell = 0usize;
            for c in columns {
                let b = c[t] as usize;
                if b >= bin_count {
                    return Err(Error::InvalidConfig(format!(
                        "bin index {b} out of range for {bin_count} bins"
                    )));
                }
                cell = cell * bin_count + b;
            }
            counts[cell] += 1;
        }
        Ok(Self {
            dims: dims.iter().map(|d| d.to_string()).collect(),
            shape,
            counts,
            total: n as u64,
        })
    }

    /// A one-variable histogram from explicit counts.
    pub fn from_counts(dim: &str, counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self {
            dims: vec![dim.to_string()],
            shape: vec![counts.len()],
            counts,
            total,
        }
    }

    /// A two-variable histogram from a row-major table `counts[i][j]`.
    pub fn from_table(dims: [&str; 2], table: &[Vec<u64>]) -> Result<Self> {
        let cols = table.first().map_or(0, Vec::len);
        if table.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidConfig("ragged count table".into()));
        }
        let counts: Vec<u64> = table.iter().flatten().copied().collect();
        Ok(Self {
            dims: dims.iter().map(|d| d.to_string()).collect(),
            shape: vec![table.len(), cols],
            total: counts.iter().sum(),
            counts,
        })
    }

    pub fn dims(&self) -> &[String] {
        &self.dims
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Counts summed over every dimension except `axis`.
    pub fn marginal(&self, axis: usize) -> Result<JointHistogram> {
        if axis >= self.shape.len() {
            return Err(Error::InvalidConfig(format!("no axis {axis}")));
        }
        let stride: usize = self.shape[axis + 1..].iter().product();
        let mut out = vec![0u64; self.shape[axis]];
        for (cell, &c) in self.counts.iter().enumerate() {
            out[(cell / stride) % self.shape[axis]] += c;
        }
        Ok(JointHistogram::from_counts(&self.dims[axis], out))
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let total = self.total as f64;
        self.counts.iter().map(|&c| c as f64 / total).collect()
    }
}

/// Shannon entropy `-Σ p log₂ p` of a one-variable histogram.
pub fn shannon_entropy(h: &JointHistogram) -> Result<f64> {
    if h.shape.len() != 1 {
        return Err(Error::InvalidConfig(format!(
            "expected a one-variable histogram, got {} variables",
            h.shape.len()
        )));
    }
    joint_entropy(h)
}

/// Joint entropy `-Σ p log₂ p` over all cells; empty cells contribute nothing.
pub fn joint_entropy(h: &JointHistogram) -> Result<f64> {
    if h.total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let total = h.total as f64;
    let sum: f64 = h
        .counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum();
    Ok(sum.max(0.0))
}

/// Mutual information `H(X) + H(Y) - H(X, Y)` of two equally long series.
pub fn mutual_information(x: &TimeSeries, y: &TimeSeries, spec: &BinningSpec) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            name: y.name.clone(),
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::EmptyHistogram);
    }
    let xb = spec.discretize(x)?;
    let yb = spec.discretize(y)?;
    let mut counter = EntropyCounter::new(spec.bin_count(), 2, x.len());
    Ok(counter.mutual_information(&xb, &yb, spec.bin_count()))
}

/// Transfer entropy from `x` to `y` at lag `lag`, in bits.
pub fn transfer_entropy(
    x: &TimeSeries,
    y: &TimeSeries,
    lag: Lag,
    spec: &BinningSpec,
) -> Result<f64> {
    let frame = LaggedFrame::new(x, y, lag, spec)?;
    let mut counter = frame.counter();
    let fixed = frame.target_entropies(&mut counter);
    Ok(frame.transfer_entropy(&mut counter, &frame.source, fixed))
}

/// Reusable count table for plug-in entropies of discretized columns.
///
/// `H = log₂ n - (Σ c log₂ c) / n` over the occupied cells, with `c log₂ c`
/// tabulated up to the sample size. Cells are visited in first-touch order, so
/// results are bit-identical across runs.
pub(crate) struct EntropyCounter {
    counts: Vec<u32>,
    touched: Vec<usize>,
    clogc: Vec<f64>,
}

impl EntropyCounter {
    pub(crate) fn new(bin_count: usize, max_dims: u32, max_samples: usize) -> Self {
        let clogc = (0..=max_samples)
            .map(|c| if c < 2 { 0.0 } else { c as f64 * (c as f64).log2() })
            .collect();
        Self {
            counts: vec![0; bin_count.pow(max_dims)],
            touched: Vec::with_capacity(max_samples),
            clogc,
        }
    }

    pub(crate) fn entropy<I: Iterator<Item = usize>>(&mut self, cells: I) -> f64 {
        let mut n = 0usize;
        for cell in cells {
            let c = &mut self.counts[cell];
            if *c == 0 {
                self.touched.push(cell);
            }
            *c += 1;
            n += 1;
        }
        if n == 0 {
            return 0.0;
        }
        let mut s = 0.0;
        for &cell in &self.touched {
            s += self.clogc[self.counts[cell] as usize];
            self.counts[cell] = 0;
        }
        self.touched.clear();
        let nf = n as f64;
        (nf.log2() - s / nf).max(0.0)
    }

    pub(crate) fn entropy_1(&mut self, a: &[u16]) -> f64 {
        self.entropy(a.iter().map(|&v| v as usize))
    }

    pub(crate) fn entropy_2(&mut self, a: &[u16], b: &[u16], m: usize) -> f64 {
        self.entropy(a.iter().zip(b).map(|(&a, &b)| a as usize * m + b as usize))
    }

    pub(crate) fn entropy_3(&mut self, a: &[u16], b: &[u16], c: &[u16], m: usize) -> f64 {
        self.entropy(
            a.iter()
                .zip(b)
                .zip(c)
                .map(|((&a, &b), &c)| (a as usize * m + b as usize) * m + c as usize),
        )
    }

    pub(crate) fn mutual_information(&mut self, a: &[u16], b: &[u16], m: usize) -> f64 {
        let mi = self.entropy_1(a) + self.entropy_1(b) - self.entropy_2(a, b, m);
        mi.max(0.0)
    }
}

/// Entropies that do not involve the source, fixed across source shuffles.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TargetEntropies {
    pub past: f64,
    pub past_now: f64,
}

/// Discretized, lag-aligned columns for one (source, target, lag) candidate:
/// `source = x[0..l-τ]`, `past = y[0..l-τ]`, `now = y[τ..l]`.
pub(crate) struct LaggedFrame {
    pub bin_count: usize,
    pub source: Vec<u16>,
    pub past: Vec<u16>,
    pub now: Vec<u16>,
}

impl LaggedFrame {
    pub(crate) fn new(x: &TimeSeries, y: &TimeSeries, lag: Lag, spec: &BinningSpec) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                name: y.name.clone(),
                expected: x.len(),
                found: y.len(),
            });
        }
        let xb = spec.discretize(x)?;
        let yb = spec.discretize(y)?;
        Self::from_bins(&xb, &yb, lag.get(), spec.bin_count())
    }

    pub(crate) fn from_bins(xb: &[u16], yb: &[u16], tau: usize, bin_count: usize) -> Result<Self> {
        let l = xb.len();
        if tau == 0 || tau >= l {
            return Err(Error::LagTooLarge { lag: tau, length: l });
        }
        Ok(Self {
            bin_count,
            source: xb[..l - tau].to_vec(),
            past: yb[..l - tau].to_vec(),
            now: yb[tau..].to_vec(),
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.source.len()
    }

    pub(crate) fn counter(&self) -> EntropyCounter {
        EntropyCounter::new(self.bin_count, 3, self.len())
    }

    pub(crate) fn target_entropies(&self, counter: &mut EntropyCounter) -> TargetEntropies {
        TargetEntropies {
            past: counter.entropy_1(&self.past),
            past_now: counter.entropy_2(&self.past, &self.now, self.bin_count),
        }
    }

    /// TE with `source` standing in for the frame's own source column.
    pub(crate) fn transfer_entropy(
        &self,
        counter: &mut EntropyCounter,
        source: &[u16],
        fixed: TargetEntropies,
    ) -> f64 {
        let m = self.bin_count;
        let joint_src_past = counter.entropy_2(source, &self.past, m);
        let joint_all = counter.entropy_3(source, &self.past, &self.now, m);
        (-fixed.past + joint_src_past + fixed.past_now - joint_all).max(0.0)
    }

    /// MI between `source` and the target's present value.
    pub(crate) fn source_now_mi(&self, counter: &mut EntropyCounter, source: &[u16], h_now: f64) -> f64 {
        let mi = counter.entropy_1(source) + h_now - counter.entropy_2(source, &self.now, self.bin_count);
        mi.max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::collections::HashMap;

    fn spec_for(series: &[&TimeSeries], m: usize) -> BinningSpec {
        BinningSpec::from_series(series.iter().copied(), m).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let h = JointHistogram::from_counts("x", vec![0, 7, 0]);
        assert_eq!(shannon_entropy(&h).unwrap(), 0.0);
        let h = JointHistogram::from_counts("x", vec![5, 5]);
        assert_abs_diff_eq!(shannon_entropy(&h).unwrap(), 1.0, epsilon = 1e-15);

        // Oracle: direct summation over the four bins.
        let counts = [1.0f64, 2.0, 3.0, 4.0];
        let oracle: f64 = counts.iter().map(|c| -(c / 10.0) * (c / 10.0).log2()).sum();
        let h = JointHistogram::from_counts("x", vec![1, 2, 3, 4]);
        assert_abs_diff_eq!(shannon_entropy(&h).unwrap(), oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(oracle, 1.846_439_344_671_015, epsilon = 1e-12);

        assert_eq!(
            shannon_entropy(&JointHistogram::from_counts("x", vec![0, 0])),
            Err(Error::EmptyHistogram)
        );
    }

    #[test]
    fn deterministic_bijection_has_mi_log3() {
        let table = vec![vec![4, 0, 0], vec![0, 4, 0], vec![0, 0, 4]];
        let h = JointHistogram::from_table(["x", "y"], &table).unwrap();
        let hx = shannon_entropy(&h.marginal(0).unwrap()).unwrap();
        let hy = shannon_entropy(&h.marginal(1).unwrap()).unwrap();
        let mi = hx + hy - joint_entropy(&h).unwrap();
        assert_abs_diff_eq!(mi, 3f64.log2(), epsilon = 1e-12);

        // Same thing from series through the binning path.
        let x = TimeSeries::new("x", [0.0, 1.0, 2.0].repeat(4));
        let y = TimeSeries::new("y", [5.0, 6.0, 7.0].repeat(4));
        let spec = spec_for(&[&x, &y], 3);
        assert_abs_diff_eq!(mutual_information(&x, &y, &spec).unwrap(), 3f64.log2(), epsilon = 1e-12);
    }

    #[test]
    fn self_information_equals_entropy() {
        let x = TimeSeries::new("x", (0..97).map(|i| ((i * 31) % 17) as f64).collect());
        let spec = spec_for(&[&x], 6);
        let hx = shannon_entropy(
            &JointHistogram::from_bins(&["x"], 6, &[&spec.discretize(&x).unwrap()]).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(mutual_information(&x, &x, &spec).unwrap(), hx, epsilon = 1e-12);
    }

    #[test]
    fn constant_target_carries_no_transfer() {
        let x = TimeSeries::new("x", (0..50).map(|i| (i as f64).sin()).collect());
        let y = TimeSeries::new("y", vec![1.0; 50]);
        let spec = spec_for(&[&x, &y], 4);
        assert_eq!(transfer_entropy(&x, &y, Lag::new(1).unwrap(), &spec).unwrap(), 0.0);
    }

    #[test]
    fn lag_errors() {
        let x = TimeSeries::new("x", vec![1.0, 2.0, 3.0]);
        let y = TimeSeries::new("y", vec![1.0, 3.0, 2.0]);
        let spec = spec_for(&[&x, &y], 2);
        assert!(Lag::new(0).is_err());
        assert!(matches!(
            transfer_entropy(&x, &y, Lag::new(3).unwrap(), &spec),
            Err(Error::LagTooLarge { lag: 3, length: 3 })
        ));
        let short = TimeSeries::new("y", vec![1.0, 2.0]);
        assert!(matches!(
            transfer_entropy(&x, &short, Lag::new(1).unwrap(), &spec),
            Err(Error::LengthMismatch { .. })
        ));
    }

    /// `y[t] = x[t-1]` with `x` cycling through a de Bruijn sequence, so the
    /// aligned pairs `(x[t-2], x[t-1])` are exactly uniform over `m²`
    /// outcomes, the finite stand-in for an i.i.d. uniform source. The triple
    /// `(x[t-1], y[t-1], y[t]) = (x[t-1], x[t-2], x[t-1])` then gives
    /// TE = H(Y_t | Y_{t-1}) = H(x[t-1] | x[t-2]) = log₂ m exactly.
    #[test]
    fn copied_source_transfers_its_full_entropy() {
        let m = 4usize;
        // B(4, 2): every ordered pair of symbols appears once cyclically.
        let db: Vec<u16> = vec![0, 0, 1, 0, 2, 0, 3, 1, 1, 2, 1, 3, 2, 2, 3, 3];
        let reps = 8;
        let xs: Vec<u16> = db.iter().cycle().take(db.len() * reps + 2).copied().collect();
        let x = &xs[1..];
        let y = &xs[..xs.len() - 1];
        let frame = LaggedFrame::from_bins(x, y, 1, m).unwrap();
        assert_eq!(frame.len(), db.len() * reps);
        let mut counter = frame.counter();
        let fixed = frame.target_entropies(&mut counter);
        let te = frame.transfer_entropy(&mut counter, &frame.source, fixed);
        assert_abs_diff_eq!(te, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(te, brute_force_cmi(&frame.source, &frame.past, &frame.now), epsilon = 1e-12);
    }

    /// Independent oracle: `Σ p(x,a,b) log₂[p(x,a,b) p(a) / (p(x,a) p(a,b))]`.
    pub(crate) fn brute_force_cmi(x: &[u16], a: &[u16], b: &[u16]) -> f64 {
        let n = x.len() as f64;
        let mut pxab: HashMap<(u16, u16, u16), f64> = HashMap::new();
        let mut pxa: HashMap<(u16, u16), f64> = HashMap::new();
        let mut pab: HashMap<(u16, u16), f64> = HashMap::new();
        let mut pa: HashMap<u16, f64> = HashMap::new();
        for i in 0..x.len() {
            *pxab.entry((x[i], a[i], b[i])).or_default() += 1.0 / n;
            *pxa.entry((x[i], a[i])).or_default() += 1.0 / n;
            *pab.entry((a[i], b[i])).or_default() += 1.0 / n;
            *pa.entry(a[i]).or_default() += 1.0 / n;
        }
        pxab.iter()
            .map(|(&(xv, av, bv), &p)| {
                p * (p * pa[&av] / (pxa[&(xv, av)] * pab[&(av, bv)])).log2()
            })
            .sum()
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, usize, usize)> {
            (6usize..60, 2usize..6, 1usize..4).prop_flat_map(|(n, m, tau)| {
                (
                    prop::collection::vec(-5.0f64..5.0, n),
                    prop::collection::vec(-5.0f64..5.0, n),
                    Just(m),
                    Just(tau),
                )
            })
        }

        proptest! {
            #[test]
            fn entropy_is_bounded(counts in prop::collection::vec(0u64..50, 1..12)) {
                prop_assume!(counts.iter().sum::<u64>() > 0);
                let h = JointHistogram::from_counts("x", counts.clone());
                let e = shannon_entropy(&h).unwrap();
                prop_assert!(e >= 0.0);
                prop_assert!(e <= (counts.len() as f64).log2() + 1e-12);
            }

            #[test]
            fn mi_is_symmetric_and_nonnegative((xv, yv, m, _tau) in pair()) {
                let x = TimeSeries::new("x", xv);
                let y = TimeSeries::new("y", yv);
                let spec = spec_for(&[&x, &y], m);
                let a = mutual_information(&x, &y, &spec).unwrap();
                let b = mutual_information(&y, &x, &spec).unwrap();
                prop_assert!(a >= 0.0);
                prop_assert!((a - b).abs() <= 1e-12);
            }

            #[test]
            fn te_is_cmi_and_bounded((xv, yv, m, tau) in pair()) {
                prop_assume!(tau < xv.len());
                let x = TimeSeries::new("x", xv);
                let y = TimeSeries::new("y", yv);
                let spec = spec_for(&[&x, &y], m);
                let lag = Lag::new(tau).unwrap();
                let te = transfer_entropy(&x, &y, lag, &spec).unwrap();
                let frame = LaggedFrame::new(&x, &y, lag, &spec).unwrap();
                let oracle = brute_force_cmi(&frame.source, &frame.past, &frame.now).max(0.0);
                prop_assert!((te - oracle).abs() <= 1e-12, "te {} oracle {}", te, oracle);
                let hx = joint_entropy(&JointHistogram::from_bins(&["x"], m, &[&frame.source]).unwrap()).unwrap();
                let hy = joint_entropy(&JointHistogram::from_bins(&["y"], m, &[&frame.now]).unwrap()).unwrap();
                prop_assert!(te <= hx.min(hy) + 1e-12);
                prop_assert_eq!(te.to_bits(), transfer_entropy(&x, &y, lag, &spec).unwrap().to_bits());
            }
        }
    }
}
