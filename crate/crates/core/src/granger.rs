//! Bivariate Granger causality by nested OLS regressions and an F-test.
//!
//! For a lag `p` the full model regresses `y[i]` on an intercept, the
//! target's own past `y[i-1..=i-p]`, and the source terms; the reduced model
//! drops the source terms. Both fits use the same window `i ∈ [p, l)`.
//! Lag-wise mode tests the single coefficient on `x[i-p]`; cumulative mode
//! tests `x[i-1..=i-p]` jointly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;

/// Gram matrices with a larger (column-scaled) condition number are rejected.
pub const MAX_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrangerConfig {
    /// Largest lag the test accepts.
    pub order: usize,
    pub alpha: f64,
    pub lagwise: bool,
}

impl Default for GrangerConfig {
    fn default() -> Self {
        Self {
            order: 4,
            alpha: 0.05,
            lagwise: true,
        }
    }
}

impl GrangerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidConfig("gc order must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gc alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrangerResult {
    pub f_statistic: f64,
    pub p_value: f64,
    pub rss_full: f64,
    pub rss_reduced: f64,
    pub link: bool,
}

/// Tests whether `x` Granger-causes `y` at lag `p`.
pub fn granger_test(x: &TimeSeries, y: &TimeSeries, p: usize, cfg: &GrangerConfig) -> Result<GrangerResult> {
    cfg.validate()?;
    if p == 0 || p > cfg.order {
        return Err(Error::InvalidConfig(format!(
            "lag {p} outside 1..={}",
            cfg.order
        )));
    }
    let l = x.len();
    if y.len() != l {
        return Err(Error::LengthMismatch {
            name: y.name.clone(),
            expected: l,
            found: y.len(),
        });
    }
    if l <= 2 * p + 1 {
        return Err(Error::TooShort {
            needed: 2 * p + 2,
            found: l,
        });
    }
    let restrictions = if cfg.lagwise { 1 } else { p };
    let params_full = 1 + p + restrictions;
    let n_eff = l - p;
    if n_eff <= params_full {
        return Err(Error::TooShort {
            needed: p + params_full + 1,
            found: l,
        });
    }

    let target = DVector::from_iterator(n_eff, y.values[p..].iter().copied());
    let design = |with_source: bool| {
        let cols = 1 + p + if with_source { restrictions } else { 0 };
        DMatrix::from_fn(n_eff, cols, |r, c| {
            let i = r + p;
            match c {
                0 => 1.0,
                c if c <= p => y.values[i - c],
                c if cfg.lagwise => {
                    debug_assert_eq!(c, p + 1);
                    x.values[i - p]
                }
                c => x.values[i - (c - p)],
            }
        })
    };
    let rss_full = ols_rss(&design(true), &target)?;
    let rss_reduced = ols_rss(&design(false), &target)?;

    let df2 = (n_eff - params_full) as f64;
    let k = restrictions as f64;
    let f_statistic = if rss_full > 0.0 {
        (((rss_reduced - rss_full) / k) / (rss_full / df2)).max(0.0)
    } else if rss_reduced > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let p_value = f_survival(f_statistic, k, df2)?;
    Ok(GrangerResult {
        f_statistic,
        p_value,
        rss_full,
        rss_reduced,
        link: p_value < cfg.alpha,
    })
}

/// Upper-tail probability of the F(d1, d2) distribution.
pub fn f_survival(f: f64, d1: f64, d2: f64) -> Result<f64> {
    if f <= 0.0 {
        return Ok(1.0);
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    let dist = FisherSnedecor::new(d1, d2).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(dist.sf(f).clamp(0.0, 1.0))
}

/// Residual sum of squares of the least-squares fit of `y` on `x`, solved from
/// the normal equations with a partially pivoted LU factorization.
fn ols_rss(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    let gram = x.transpose() * x;
    let diag: Vec<f64> = gram.diagonal().iter().copied().collect();
    if diag.iter().any(|&d| d <= 0.0) {
        return Err(Error::SingularDesign(f64::INFINITY));
    }
    // Condition of the unit-diagonal rescaling, so the check ignores column units.
    let scaled = DMatrix::from_fn(gram.nrows(), gram.ncols(), |r, c| {
        gram[(r, c)] / (diag[r] * diag[c]).sqrt()
    });
    let eig = scaled.symmetric_eigenvalues();
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if cond > MAX_CONDITION {
        return Err(Error::SingularDesign(cond));
    }
    let rhs = x.transpose() * y;
    let beta = gram
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularDesign(cond))?;
    let resid = y - x * beta;
    Ok(resid.dot(&resid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal(name: &str, n: usize, seed: u64) -> TimeSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TimeSeries::new(name, (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
    }

    #[test]
    fn f_zero_has_p_one() {
        assert_eq!(f_survival(0.0, 1.0, 50.0).unwrap(), 1.0);
        // F(1, 10) upper 5% point is 4.9646 from standard tables.
        assert!((f_survival(4.9646, 1.0, 10.0).unwrap() - 0.05).abs() < 1e-4);
    }

    #[test]
    fn detects_a_driven_target() {
        let x = normal("x", 400, 1);
        let e = normal("e", 400, 2);
        let mut yv = vec![0.0; 400];
        for t in 3..400 {
            yv[t] = 0.3 * yv[t - 1] + 0.5 * x.values[t - 3] + e.values[t];
        }
        let y = TimeSeries::new("y", yv);
        let cfg = GrangerConfig::default();
        let r = granger_test(&x, &y, 3, &cfg).unwrap();
        assert!(r.link && r.p_value < 1e-6);
        assert!(r.rss_reduced >= r.rss_full);
        let cum = granger_test(&x, &y, 3, &GrangerConfig { lagwise: false, ..cfg }).unwrap();
        assert!(cum.link);
    }

    #[test]
    fn redundant_regressor_is_singular() {
        // x[i-p] equals y[i-p], already a column of the reduced model.
        let y = normal("y", 100, 5);
        let x = TimeSeries::new("x", y.values.clone());
        match granger_test(&x, &y, 2, &GrangerConfig::default()) {
            Err(Error::SingularDesign(_)) => {}
            Ok(r) => assert!(r.f_statistic < 1e-6),
            Err(e) => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn rejects_short_and_bad_lags() {
        let x = normal("x", 5, 1);
        let y = normal("y", 5, 2);
        let cfg = GrangerConfig::default();
        assert!(matches!(granger_test(&x, &y, 2, &cfg), Err(Error::TooShort { .. })));
        assert!(granger_test(&x, &y, 0, &cfg).is_err());
        assert!(granger_test(&x, &y, 5, &cfg).is_err());
    }

    #[test]
    fn rss_never_grows_with_more_regressors() {
        for seed in 0..40 {
            let x = normal("x", 60, seed);
            let y = normal("y", 60, seed + 1000);
            for p in 1..=4 {
                for lagwise in [true, false] {
                    let cfg = GrangerConfig { lagwise, ..Default::default() };
                    let r = granger_test(&x, &y, p, &cfg).unwrap();
                    assert!(r.rss_full <= r.rss_reduced + 1e-9 * r.rss_reduced);
                    assert!(r.f_statistic >= 0.0);
                    assert!((0.0..=1.0).contains(&r.p_value));
                    assert_eq!(r.link, r.p_value < cfg.alpha);
                }
            }
        }
    }
}
