//! Estimators and goodness-of-fit tests used by the harness and the
//! acceptance suite.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo.min(p), hi.max(p))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
}

impl MeanEstimate {
    pub fn ci(&self, z: f64) -> (f64, f64) {
        (self.mean - z * self.std_error, self.mean + z * self.std_error)
    }
}

/// Sample mean with its standard error.
pub fn mean_estimate(xs: &[f64]) -> MeanEstimate {
    let n = xs.len();
    if n == 0 {
        return MeanEstimate {
            mean: f64::NAN,
            std_error: f64::NAN,
            n: 0,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    MeanEstimate {
        mean,
        std_error: (var / n as f64).sqrt(),
        n: n as u64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: u64,
    pub p_value: f64,
}

/// Pearson chi-square goodness of fit. `observed` and `expected` are counts
/// over the same bins, the last of which is typically a tail bin.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(Error::param("bins", "need at least two matching bins"));
    }
    if expected.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::param("expected", "every expected count must be positive"));
    }
    let statistic = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let df = (observed.len() - 1) as u64;
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::param("df", e.to_string()))?;
    Ok(ChiSquareResult {
        statistic,
        df,
        p_value: dist.sf(statistic),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(lambda) = 2 sum (-1)^{k-1} e^{-2 k^2 lambda^2}`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value. Ties
/// are handled by comparing the empirical CDFs after each distinct value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::param("sample", "both samples must be non-empty"));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = if x[i] <= y[j] { x[i] } else { y[j] };
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_q(lambda),
    })
}

/// Event tally for one horizon of an LD ladder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LdPoint {
    pub radius: f64,
    pub events: u64,
    pub trials: u64,
}

/// Per-horizon rate `log(P) / r` with its Wilson-derived interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LdPointRate {
    pub radius: f64,
    pub rate: f64,
    pub rate_low: f64,
    pub rate_high: f64,
    /// No events observed: `rate` is the Wilson upper bound and
    /// `rate_low` is `-inf`.
    pub upper_bound_only: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LdRateFit {
    /// Least-squares slope of `log P` against `r` over horizons with events;
    /// with fewer than two such horizons, the slope through the upper bounds.
    pub slope: f64,
    pub slope_low: f64,
    pub slope_high: f64,
    /// The fit used upper bounds only, so the slope is itself an upper bound.
    pub one_sided: bool,
    pub points_used: usize,
    pub per_point: Vec<LdPointRate>,
}

fn ols_weights(xs: &[f64]) -> Vec<f64> {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    xs.iter().map(|x| (x - mean) / sxx).collect()
}

/// Fits `log P(E_t)` against `r(t)` over a ladder of horizons.
///
/// The slope band propagates each point's Wilson interval through the
/// least-squares weights in the worst case, so it is conservative.
pub fn estimate_ld_rate(points: &[LdPoint]) -> Result<LdRateFit> {
    if points.len() < 3 {
        return Err(Error::param("horizons", "need at least three horizons"));
    }
    if points.iter().any(|p| p.trials == 0 || p.events > p.trials || !(p.radius > 0.0)) {
        return Err(Error::param("horizons", "each horizon needs trials >= events and r > 0"));
    }
    let per_point: Vec<LdPointRate> = points
        .iter()
        .map(|p| {
            let (lo, hi) = wilson_interval(p.events, p.trials, Z95);
            if p.events == 0 {
                LdPointRate {
                    radius: p.radius,
                    rate: hi.ln() / p.radius,
                    rate_low: f64::NEG_INFINITY,
                    rate_high: hi.ln() / p.radius,
                    upper_bound_only: true,
                }
            } else {
                let phat = p.events as f64 / p.trials as f64;
                LdPointRate {
                    radius: p.radius,
                    rate: phat.ln() / p.radius,
                    rate_low: lo.ln() / p.radius,
                    rate_high: hi.ln() / p.radius,
                    upper_bound_only: false,
                }
            }
        })
        .collect();
    let with_events: Vec<usize> = (0..points.len()).filter(|&i| points[i].events > 0).collect();
    let (idx, one_sided) = if with_events.len() >= 2 {
        (with_events, false)
    } else {
        ((0..points.len()).collect(), true)
    };
    let xs: Vec<f64> = idx.iter().map(|&i| points[i].radius).collect();
    if xs.iter().all(|x| *x == xs[0]) {
        return Err(Error::param("horizons", "radii must not all coincide"));
    }
    let w = ols_weights(&xs);
    let (mut slope, mut low, mut high) = (0.0, 0.0, 0.0);
    for (wi, &i) in w.iter().zip(&idx) {
        let p = &points[i];
        let (lo, hi) = wilson_interval(p.events, p.trials, Z95);
        let (y, ylo, yhi) = if one_sided {
            (hi.ln(), hi.ln(), hi.ln())
        } else {
            ((p.events as f64 / p.trials as f64).ln(), lo.ln(), hi.ln())
        };
        slope += wi * y;
        if *wi >= 0.0 {
            low += wi * ylo;
            high += wi * yhi;
        } else {
            low += wi * yhi;
            high += wi * ylo;
        }
    }
    Ok(LdRateFit {
        slope,
        slope_low: low,
        slope_high: high,
        one_sided,
        points_used: idx.len(),
        per_point,
    })
}

/// Rescaled growth exponent `(log t)^{2/d} ((log N_t)/t - beta)`, whose
/// quenched limit is `-c(d, nu)`.
pub fn rescaled_growth_exponent(dim: usize, beta: f64, t: f64, population: u64) -> Result<f64> {
    if !(t > 1.0) {
        return Err(Error::param("t", format!("must exceed 1, got {t}")));
    }
    if population == 0 || dim == 0 {
        return Err(Error::param("population", "need a non-empty population and dim >= 1"));
    }
    Ok(t.ln().powf(2.0 / dim as f64) * ((population as f64).ln() / t - beta))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthEstimate {
    pub t: f64,
    /// Mean of `(log N_t)/t` over uncensored replicas.
    pub log_growth: MeanEstimate,
    /// Mean of the rescaled exponent, present for `t > 1`.
    pub rescaled: Option<MeanEstimate>,
    pub censored: u64,
}

/// Per-time growth summaries from `(t, N_t, censored)` samples.
pub fn estimate_growth_exponent(dim: usize, beta: f64, t: f64, samples: &[(u64, bool)]) -> Result<GrowthEstimate> {
    let kept: Vec<u64> = samples.iter().filter(|(_, c)| !c).map(|(n, _)| *n).collect();
    let censored = (samples.len() - kept.len()) as u64;
    let logs: Vec<f64> = kept.iter().map(|&n| (n as f64).ln() / t).collect();
    let rescaled = if t > 1.0 {
        let v = kept
            .iter()
            .map(|&n| rescaled_growth_exponent(dim, beta, t, n))
            .collect::<Result<Vec<_>>>()?;
        Some(mean_estimate(&v))
    } else {
        None
    };
    Ok(GrowthEstimate {
        t,
        log_growth: mean_estimate(&logs),
        rescaled,
        censored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::RngStream;
    use proptest::prelude::*;

    #[test]
    fn wilson_reference_values() {
        // 10 of 100 at 95%: (0.0552, 0.1744).
        let (lo, hi) = wilson_interval(10, 100, Z95);
        assert!((lo - 0.05522914).abs() < 1e-6, "{lo}");
        assert!((hi - 0.17436566).abs() < 1e-6, "{hi}");
        let (lo, hi) = wilson_interval(0, 50, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.07134759).abs() < 1e-6, "{hi}");
    }

    #[test]
    fn wilson_coverage_on_synthetic_bernoulli() {
        let mut s = RngStream::new(2024, 0);
        for &p in &[0.02, 0.3, 0.5] {
            let trials = 1_000;
            let n = 200;
            let covered = (0..trials)
                .filter(|_| {
                    let k = (0..n).filter(|_| s.uniform() < p).count() as u64;
                    let (lo, hi) = wilson_interval(k, n, Z95);
                    lo <= p && p <= hi
                })
                .count();
            assert!(covered as f64 / trials as f64 >= 0.93, "p={p} coverage {covered}");
        }
    }

    #[test]
    fn chi_square_reference() {
        let r = chi_square_gof(&[10, 20, 30], &[10.0, 20.0, 30.0]).unwrap();
        assert_eq!((r.df, r.statistic, r.p_value), (2, 0.0, 1.0));
        let r2 = chi_square_gof(&[0, 20], &[10.0, 10.0]).unwrap();
        assert!((r2.statistic - 20.0).abs() < 1e-12);
        assert!((r2.p_value - 7.744216e-6).abs() < 1e-9, "{}", r2.p_value);
        assert!(chi_square_gof(&[1], &[1.0]).is_err());
    }

    #[test]
    fn ks_reference() {
        assert!((kolmogorov_q(1.36) - 0.0494).abs() < 5e-4);
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let same = ks_two_sample(&a, &a).unwrap();
        assert_eq!(same.statistic, 0.0);
        assert_eq!(same.p_value, 1.0);
        let b: Vec<f64> = (0..100).map(|i| i as f64 + 50.0).collect();
        let shifted = ks_two_sample(&a, &b).unwrap();
        assert!((shifted.statistic - 0.5).abs() < 1e-12);
        assert!(shifted.p_value < 1e-9);
    }

    #[test]
    fn ld_fit_recovers_synthetic_slope() {
        let points: Vec<LdPoint> = [3.0, 4.0, 5.0, 6.0]
            .iter()
            .map(|&r| {
                let trials = 10_000_000u64;
                LdPoint {
                    radius: r,
                    events: ((-0.5 * r).exp() * trials as f64).round() as u64,
                    trials,
                }
            })
            .collect();
        let fit = estimate_ld_rate(&points).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-3);
        assert!(fit.slope_low <= fit.slope && fit.slope <= fit.slope_high);
        assert!(!fit.one_sided);
    }

    #[test]
    fn ld_fit_without_events_is_one_sided() {
        let points = [3.0, 4.0, 5.0].map(|r| LdPoint {
            radius: r,
            events: 0,
            trials: 1000,
        });
        let fit = estimate_ld_rate(&points).unwrap();
        assert!(fit.one_sided);
        assert!(fit.per_point.iter().all(|p| p.upper_bound_only));
        assert!(estimate_ld_rate(&points[..2]).is_err());
    }

    #[test]
    fn growth_exponent_examples() {
        let g = estimate_growth_exponent(1, 6.0, 4.0, &[(1, false), (1, false), (5, true)]).unwrap();
        assert_eq!(g.log_growth.mean, 0.0);
        assert_eq!(g.censored, 1);
        let r = rescaled_growth_exponent(1, 2.0, std::f64::consts::E, 1).unwrap();
        assert!((r + 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn wilson_interval_contains_point(k in 0u64..500, extra in 0u64..500) {
            let n = k + extra + 1;
            let (lo, hi) = wilson_interval(k, n, Z95);
            let p = k as f64 / n as f64;
            prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
        }
    }
}
